#pragma once

#include "novo/tensor.hpp"

#include <optional>
#include <vector>

namespace novo {

/// Patch embeddings on a square grid plus the segmentation-token embedding.
class EmbeddingSet {
  public:
    /// `patches` is row-major N×dim. Throws ShapeError unless N is a nonzero
    /// perfect square and seg.size() == dim; ValueError on non-finite input.
    EmbeddingSet(std::vector<double> patches, std::vector<double> seg, int dim);

    int patch_count() const { return patch_count_; }
    int dim() const { return dim_; }
    int grid_side() const { return grid_side_; }

    std::span<const double> patch(int k) const {
        return {patches_.data() + static_cast<std::size_t>(k) * dim_, static_cast<std::size_t>(dim_)};
    }
    std::span<const double> seg_embedding() const { return seg_; }
    std::span<const double> patches() const { return patches_; }

  private:
    std::vector<double> patches_;
    std::vector<double> seg_;
    int dim_ = 0;
    int patch_count_ = 0;
    int grid_side_ = 0;
};

enum class Polarity { positive, negative };

struct PointPrompt {
    int y = 0;
    int x = 0;
    Polarity polarity = Polarity::positive;
    double source_score = 0.0;

    bool operator==(const PointPrompt&) const = default;
};

/// Dense mask prompt (absent for point-only runs) plus sparse point prompts.
struct PromptBundle {
    std::optional<DenseMap> mask_prompt;
    std::vector<PointPrompt> points;

    bool operator==(const PromptBundle&) const = default;
};

struct SimilarityResult {
    DenseMap map;
    /// Set when a zero-norm vector forced one or more similarities to 0.
    bool degenerate = false;
};

/// Cosine similarity between the segmentation token and every patch, reshaped
/// row-major to grid_side × grid_side.
SimilarityResult similarity_map(const EmbeddingSet& emb);

/// Bilinear upsampling of the similarity grid to a prompt_side square.
DenseMap make_mask_prompt(const DenseMap& sim, int prompt_side = 256);

/// The k_pos highest- and k_neg lowest-ranked patches, mapped to patch-centre
/// pixels of an image_h × image_w canvas. Positives come first (descending
/// score), then negatives (ascending score). Ties rank by row-major index.
std::vector<PointPrompt> sample_points(const DenseMap& sim, int k_pos, int k_neg, int image_h,
                                       int image_w);

enum class PromptTypes { mask_only, point_only, both };

const char* to_string(PromptTypes t);
/// Accepts "mask", "mask-only", "point", "point-only", "both". Throws ValueError.
PromptTypes parse_prompt_types(const std::string& s);

struct PromptConfig {
    PromptTypes types = PromptTypes::both;
    int k_pos = 3;
    int k_neg = 3;
    int prompt_side = 256;
};

struct PromptBuildResult {
    PromptBundle bundle;
    bool degenerate = false;
};

/// Full prompt generation for a padded image_h × image_w canvas.
PromptBuildResult build_prompts(const EmbeddingSet& emb, int image_h, int image_w,
                                const PromptConfig& cfg = {});

} // namespace novo
