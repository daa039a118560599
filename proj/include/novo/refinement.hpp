#pragma once

#include "novo/backend.hpp"
#include "novo/prompt.hpp"
#include "novo/tensor.hpp"

#include <string>
#include <vector>

namespace novo {

struct RefinementConfig {
    /// Grid spacing over the logits, in pixels.
    int grid_interval = 16;
    /// Logit threshold: grid points need S > tau, the reference mask is S ≥ tau.
    double tau = 0.0;
    /// Candidates are kept when overlap score is strictly greater than delta.
    double delta = 0.7;

    /// Throws ValueError when a field is out of its domain.
    void validate() const;
};

struct Instance {
    BinaryMask mask;
    /// In (0, 1]: the best overlap score among the merged members.
    double confidence = 1.0;
};

using InstanceSet = std::vector<Instance>;

/// True when every pair of instance masks is pixel-disjoint.
bool pairwise_disjoint(const InstanceSet& instances);

struct RefinementResult {
    BinaryMask semantic_mask;
    InstanceSet instances;
    BinaryMask reference_mask;
    std::vector<PointPrompt> points;
    /// Unique, nonempty candidates in query order, and their overlap scores.
    std::vector<BinaryMask> candidates;
    std::vector<double> per_candidate_scores;
    std::vector<bool> selected;
    std::size_t candidate_count = 0;
    std::size_t selected_count = 0;
    std::size_t dropped_empty = 0;
    std::size_t dropped_duplicate = 0;
    bool fallback_used = false;
};

/// Grid points (r·interval + interval/2, c·interval + interval/2) whose logit
/// exceeds tau, in row-major order, all positive.
std::vector<PointPrompt> sample_grid_points(const DenseMap& logits, int interval, double tau = 0.0);

/// 𝟙[S ≥ tau].
BinaryMask reference_mask(const DenseMap& logits, double tau = 0.0);

/// |candidate ∩ reference| / |candidate|. Throws ValueError for an empty candidate.
double overlap_score(const BinaryMask& candidate, const BinaryMask& reference);

/// Logit-guided candidate selection: sample grid points from the logits, ask
/// the backend for candidates at each point, keep those that agree with the
/// thresholded logits, merge overlapping ones and emit semantic + instance masks.
/// Backend failures are rethrown with the offending point prepended to the
/// message; the exception type is preserved.
RefinementResult refine(const DenseMap& logits, const SegmentationBackend& backend,
                        const std::string& image_id, const RefinementConfig& cfg = {});

} // namespace novo
