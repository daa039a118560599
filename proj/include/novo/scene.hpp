#pragma once

#include "novo/prompt.hpp"
#include "novo/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace novo {

enum class ShapeKind { rectangle, ellipse, ring };

const char* to_string(ShapeKind k);
ShapeKind parse_shape_kind(const std::string& s);

struct SceneSpec {
    int height = 128;
    int width = 128;
    int min_objects = 3;
    int max_objects = 3;
    std::vector<ShapeKind> kinds{ShapeKind::rectangle, ShapeKind::ellipse, ShapeKind::ring};
    /// Bounding-box side range for every shape.
    int min_size = 20;
    int max_size = 40;
    /// Minimum background gap between any two shapes.
    int min_gap = 4;
    /// When > 0, each shape must contain at least `min_grid_hits` pixels of the
    /// lattice (k·grid_interval + grid_interval/2) so grid sampling can see it.
    int grid_interval = 0;
    int min_grid_hits = 1;
    int max_attempts = 2000;
};

/// Integer label image (0 = background, k = object k) with per-label masks.
class SyntheticScene {
  public:
    SyntheticScene(int height, int width, std::vector<int> labels);

    int height() const { return height_; }
    int width() const { return width_; }
    int object_count() const { return static_cast<int>(objects_.size()); }
    int label(int y, int x) const { return labels_[static_cast<std::size_t>(y) * width_ + x]; }
    std::span<const int> labels() const { return labels_; }

    /// Mask of object `k` (1-based label).
    const BinaryMask& object(int k) const { return objects_.at(static_cast<std::size_t>(k - 1)); }
    const std::vector<BinaryMask>& objects() const { return objects_; }

    /// Union of the given 1-based objects.
    BinaryMask union_of(const std::vector<int>& ids) const;

    /// Same scene zero-padded (top-left) to a square canvas.
    SyntheticScene padded() const;

    bool operator==(const SyntheticScene& o) const {
        return height_ == o.height_ && width_ == o.width_ && labels_ == o.labels_;
    }

  private:
    int height_;
    int width_;
    std::vector<int> labels_;
    std::vector<BinaryMask> objects_;
};

/// Deterministic for a fixed seed. Throws ValueError when a shape cannot be
/// placed after spec.max_attempts tries.
SyntheticScene scene_generate(std::uint64_t seed, const SceneSpec& spec);

/// Controls for synthetic VLM outputs over a scene.
struct EmbeddingSynthSpec {
    int grid_side = 24;
    int dim = 32;
    /// Std-dev of isotropic noise added to each unit-scale patch vector.
    double patch_noise = 0.35;
    /// Std-dev of noise added to the segmentation-token vector.
    double seg_noise = 0.2;
};

/// Patch embeddings for a square (padded) scene: a patch covering target
/// objects leans toward a shared target direction in proportion to its target
/// coverage; other patches point in per-object or background directions.
EmbeddingSet synthesize_embeddings(const SyntheticScene& padded_scene, const std::vector<int>& targets,
                                   const EmbeddingSynthSpec& spec, std::uint64_t seed);

struct DegradeSpec {
    int min_holes = 1;
    int max_holes = 3;
    int hole_radius_min = 2;
    int hole_radius_max = 4;
    /// Boundary displacement amplitude in pixels (outward or inward).
    double jitter = 2.0;
    /// Spacing of the coarse random field that drives the displacement.
    int jitter_cell = 8;
};

/// Corrupt a mask with interior holes and smooth boundary jitter, the typical
/// artefacts of thresholded logits.
BinaryMask degrade_mask(const BinaryMask& mask, const DegradeSpec& spec, std::uint64_t seed);

/// Logits +value on the mask and −value elsewhere.
DenseMap logits_from_mask(const BinaryMask& mask, double value = 1.0);

} // namespace novo
