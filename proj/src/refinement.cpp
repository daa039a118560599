#include "novo/refinement.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace novo {

void RefinementConfig::validate() const {
    if (grid_interval < 1) {
        throw ValueError("refinement: grid_interval must be >= 1");
    }
    if (!(delta > 0.0 && delta <= 1.0)) {
        throw ValueError("refinement: delta must be in (0, 1]");
    }
    if (!std::isfinite(tau)) {
        throw ValueError("refinement: tau must be finite");
    }
}

bool pairwise_disjoint(const InstanceSet& instances) {
    for (std::size_t i = 0; i < instances.size(); ++i) {
        for (std::size_t j = i + 1; j < instances.size(); ++j) {
            if (intersection_area(instances[i].mask, instances[j].mask) != 0) {
                return false;
            }
        }
    }
    return true;
}

std::vector<PointPrompt> sample_grid_points(const DenseMap& logits, int interval, double tau) {
    if (interval < 1) {
        throw ValueError("sample_grid_points: interval must be >= 1");
    }
    std::vector<PointPrompt> points;
    for (int y = interval / 2; y < logits.height(); y += interval) {
        for (int x = interval / 2; x < logits.width(); x += interval) {
            if (logits(y, x) > tau) {
                points.push_back(PointPrompt{y, x, Polarity::positive, logits(y, x)});
            }
        }
    }
    return points;
}

BinaryMask reference_mask(const DenseMap& logits, double tau) {
    BinaryMask out(logits.height(), logits.width());
    for (std::size_t k = 0; k < logits.size(); ++k) {
        out.set(k, logits[k] >= tau);
    }
    return out;
}

double overlap_score(const BinaryMask& candidate, const BinaryMask& reference) {
    require_same_shape(candidate, reference, "overlap_score");
    const std::size_t area = candidate.area();
    if (area == 0) {
        throw ValueError("overlap_score: candidate mask is empty");
    }
    return static_cast<double>(intersection_area(candidate, reference)) / static_cast<double>(area);
}

namespace {

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
    while (parent[i] != i) {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    return i;
}

// Backend failures keep their type so callers can still classify them.
std::string point_context(const PointPrompt& p) {
    return "refine: backend failed for point (" + std::to_string(p.y) + ", " + std::to_string(p.x) + "): ";
}

} // namespace

RefinementResult refine(const DenseMap& logits, const SegmentationBackend& backend,
                        const std::string& image_id, const RefinementConfig& cfg) {
    cfg.validate();
    RefinementResult result;
    result.reference_mask = reference_mask(logits, cfg.tau);
    result.points = sample_grid_points(logits, cfg.grid_interval, cfg.tau);

    for (const auto& point : result.points) {
        BackendResponse response;
        try {
            response = backend.query(BackendRequest{image_id, point});
        } catch (const NotFoundError& e) {
            throw NotFoundError(point_context(point) + e.what());
        } catch (const ValueError& e) {
            throw ValueError(point_context(point) + e.what());
        } catch (const ShapeError& e) {
            throw ShapeError(point_context(point) + e.what());
        } catch (const FormatError& e) {
            throw FormatError(e.path(), e.offset(), point_context(point) + e.what());
        } catch (const IoError& e) {
            throw IoError(point_context(point) + e.what());
        } catch (const Error& e) {
            throw Error(point_context(point) + e.what());
        }
        for (auto& cand : response.candidates) {
            require_same_shape(cand.mask, logits, "refine: candidate vs logits");
            if (cand.empty || !cand.mask.any()) {
                ++result.dropped_empty;
                continue;
            }
            const bool duplicate = std::any_of(result.candidates.begin(), result.candidates.end(),
                                               [&](const BinaryMask& m) { return m == cand.mask; });
            if (duplicate) {
                ++result.dropped_duplicate;
                continue;
            }
            result.candidates.push_back(std::move(cand.mask));
        }
    }

    result.candidate_count = result.candidates.size();
    std::vector<std::size_t> chosen;
    for (std::size_t i = 0; i < result.candidates.size(); ++i) {
        const double score = overlap_score(result.candidates[i], result.reference_mask);
        result.per_candidate_scores.push_back(score);
        const bool keep = score > cfg.delta;
        result.selected.push_back(keep);
        if (keep) {
            chosen.push_back(i);
        }
    }
    result.selected_count = chosen.size();

    if (chosen.empty()) {
        result.fallback_used = true;
        result.semantic_mask = result.reference_mask;
        const std::size_t ref_area = result.reference_mask.area();
        if (ref_area > 0) {
            double confidence = 1.0;
            if (!result.candidates.empty()) {
                const auto best = static_cast<std::size_t>(
                    std::max_element(result.per_candidate_scores.begin(), result.per_candidate_scores.end()) -
                    result.per_candidate_scores.begin());
                confidence = static_cast<double>(
                                 intersection_area(result.candidates[best], result.reference_mask)) /
                             static_cast<double>(ref_area);
                // Confidences live in (0, 1]; a best candidate disjoint from B still ranks last.
                confidence = std::max(confidence, 1e-6);
            }
            result.instances.push_back(Instance{result.reference_mask, confidence});
        }
        return result;
    }

    // Transitive pixel-overlap grouping of the selected candidates.
    std::vector<std::size_t> parent(chosen.size());
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    for (std::size_t i = 0; i < chosen.size(); ++i) {
        for (std::size_t j = i + 1; j < chosen.size(); ++j) {
            if (intersection_area(result.candidates[chosen[i]], result.candidates[chosen[j]]) > 0) {
                parent[find_root(parent, j)] = find_root(parent, i);
            }
        }
    }
    std::vector<std::ptrdiff_t> slot(chosen.size(), -1);
    for (std::size_t i = 0; i < chosen.size(); ++i) {
        const std::size_t root = find_root(parent, i);
        const double score = result.per_candidate_scores[chosen[i]];
        if (slot[root] < 0) {
            slot[root] = static_cast<std::ptrdiff_t>(result.instances.size());
            result.instances.push_back(Instance{result.candidates[chosen[i]], score});
            continue;
        }
        auto& inst = result.instances[static_cast<std::size_t>(slot[root])];
        inst.mask = mask_union(inst.mask, result.candidates[chosen[i]]);
        inst.confidence = std::max(inst.confidence, score);
    }

    result.semantic_mask = BinaryMask(logits.height(), logits.width());
    for (const auto& inst : result.instances) {
        result.semantic_mask = mask_union(result.semantic_mask, inst.mask);
    }
    return result;
}

} // namespace novo
