#pragma once

#include "novo/prompt.hpp"
#include "novo/scene.hpp"
#include "novo/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace novo {

enum class RequestMode { prompt_segmentation, point_candidates };

/// What a segmentation model is asked: a full prompt bundle (→ logits) or a
/// single point (→ candidate masks). The populated alternative fixes the mode.
struct BackendRequest {
    std::string image_id;
    std::variant<PromptBundle, PointPrompt> prompts;

    RequestMode mode() const {
        return std::holds_alternative<PromptBundle>(prompts) ? RequestMode::prompt_segmentation
                                                             : RequestMode::point_candidates;
    }
};

struct Candidate {
    BinaryMask mask;
    /// The model produced nothing useful for this point (e.g. it hit background).
    bool empty = false;

    bool operator==(const Candidate&) const = default;
};

struct BackendResponse {
    std::optional<DenseMap> logits;
    std::vector<Candidate> candidates;
};

/// Segmentation model boundary: prompts in, logits or candidate masks out.
/// Implementations are read-only after construction and safe to query concurrently.
class SegmentationBackend {
  public:
    virtual ~SegmentationBackend() = default;
    virtual BackendResponse query(const BackendRequest& request) const = 0;
};

/// Canonical byte serialisation of a request: what a prompt encoder consumes
/// (mask prompt values as f32, point coordinates and polarity). Source scores
/// are not part of a prompt and are excluded.
std::vector<std::uint8_t> serialize_request(const BackendRequest& request);

/// Lower-case hex SHA-256 of serialize_request().
std::string request_digest(const BackendRequest& request);

struct MockNoise {
    /// Candidate masks are eroded (then dilated) by these disk radii.
    int erosion_radius = 0;
    int dilation_radius = 0;
    /// Std-dev of additive Gaussian noise on returned logits.
    double logit_sigma = 0.0;
    std::uint64_t seed = 0;
};

struct MockConfig {
    /// Magnitude L of the ±L logits.
    double logit_magnitude = 4.0;
    /// Mask-prompt binarisation threshold used to vote for shapes.
    double prompt_threshold = 0.5;
    /// A shape is voted in by the mask prompt when its covered fraction exceeds this.
    double shape_overlap = 0.5;
    MockNoise noise;
};

/// Synthetic stand-in for SAM over a known label image. The scene is padded to
/// a square canvas; all request coordinates live in that padded space.
class MockBackend final : public SegmentationBackend {
  public:
    MockBackend(const SyntheticScene& scene, MockConfig cfg = {});

    BackendResponse query(const BackendRequest& request) const override;

    const SyntheticScene& padded_scene() const { return scene_; }
    const MockConfig& config() const { return cfg_; }

  private:
    BackendResponse segment(const BackendRequest& request, const PromptBundle& bundle) const;
    BackendResponse candidates(const PointPrompt& point) const;

    SyntheticScene scene_;
    MockConfig cfg_;
};

/// File-backed replay of recorded model outputs.
///
/// Layout under the store root, one directory per image id:
///
///     <image_id>/index.txt                       line-oriented digest index
///     <image_id>/logits.nvt                      (or any path named by the index)
///     <image_id>/candidates/<digest>/mask_<j>.png
///
/// Each index line is `logits <digest> <relpath>` or
/// `candidates <digest> <relpath>...` (zero paths = no candidates).
class ReplayBackend final : public SegmentationBackend {
  public:
    explicit ReplayBackend(std::filesystem::path root);

    BackendResponse query(const BackendRequest& request) const override;

    const std::filesystem::path& root() const { return root_; }

  private:
    struct Entry {
        std::string kind;
        std::vector<std::filesystem::path> paths;
    };

    std::filesystem::path root_;
    // image_id → digest → entry
    std::map<std::string, std::map<std::string, Entry>> index_;
};

/// Writes responses into a replay store (used by fixtures and adapters).
class ReplayStoreWriter {
  public:
    explicit ReplayStoreWriter(std::filesystem::path root);

    /// Returns the digest under which the response was filed.
    std::string record_logits(const BackendRequest& request, const DenseMap& logits);
    std::string record_candidates(const BackendRequest& request,
                                  const std::vector<BinaryMask>& candidates);

  private:
    void append_index(const std::string& image_id, const std::string& line);

    std::filesystem::path root_;
};

} // namespace novo
