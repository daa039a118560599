#pragma once

#include "novo/refinement.hpp"
#include "novo/tensor.hpp"

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace novo {

using MaskPair = std::pair<BinaryMask, BinaryMask>; // (prediction, ground truth)

/// Mean of per-sample IoU. Throws ValueError on an empty list.
double g_iou(const std::vector<MaskPair>& pairs);

/// Σ|P∩G| / Σ|P∪G|. An all-empty dataset yields 1.0 and sets *degenerate.
double c_iou(const std::vector<MaskPair>& pairs, bool* degenerate = nullptr);

/// IoU of the d-pixel inner boundary bands of prediction and ground truth.
/// Both bands empty → 1.0 with *degenerate set.
double boundary_iou(const BinaryMask& pred, const BinaryMask& gt, int d = 3,
                    bool* degenerate = nullptr);

struct BoundaryF1 {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool degenerate = false;
};

/// Contour matching with tolerance d: a contour pixel matches if the other
/// contour has a pixel within Euclidean distance d.
BoundaryF1 boundary_f1_detail(const BinaryMask& pred, const BinaryMask& gt, int d = 3);
double boundary_f1(const BinaryMask& pred, const BinaryMask& gt, int d = 3);

struct SemanticSample {
    std::string id;
    double iou = 0.0;
    double boundary_iou = 0.0;
    double boundary_f1 = 0.0;
    std::size_t intersection = 0;
    std::size_t union_ = 0;
};

struct SemanticEvalReport {
    double g_iou = 0.0;
    double c_iou = 0.0;
    double boundary_iou = 0.0;
    double boundary_f1 = 0.0;
    std::size_t n_samples = 0;
    std::size_t intersection_sum = 0;
    std::size_t union_sum = 0;
    int boundary_d = 3;
    std::vector<SemanticSample> per_sample;
    std::vector<std::string> warnings;
};

/// Evaluates every sample (optionally on `jobs` threads); results are
/// reduced in sample order regardless of job count.
SemanticEvalReport evaluate_semantic(const std::vector<std::string>& ids,
                                     const std::vector<MaskPair>& pairs, int boundary_d = 3,
                                     int jobs = 1);

enum class ApInterpolation { coco101, all_points };

const char* to_string(ApInterpolation i);
ApInterpolation parse_ap_interpolation(const std::string& s);

struct ApCurve {
    double iou_threshold = 0.0;
    std::vector<double> precision;
    std::vector<double> recall;
    std::size_t true_positives = 0;
    std::size_t gt_count = 0;
};

struct InstanceEvalReport {
    double ap50 = 0.0;
    double ap75 = 0.0;
    double map = 0.0;
    /// Empty size buckets (no ground truth in range) have no AP.
    std::optional<double> ap_s;
    std::optional<double> ap_m;
    std::optional<double> ap_l;
    /// AP at each of the ten IoU thresholds 0.50:0.05:0.95 (all areas).
    std::array<double, 10> ap_per_threshold{};
    std::vector<ApCurve> curves;
    std::size_t gt_count = 0;
    std::size_t prediction_count = 0;
};

/// IoU thresholds 0.50, 0.55, ..., 0.95.
std::array<double, 10> ap_iou_thresholds();

/// COCO size buckets by GT pixel area: small < 32², medium 32²..96², large > 96².
enum class AreaRange { all, small, medium, large };
bool in_area_range(std::size_t area, AreaRange r);

/// AP at one IoU threshold over the whole dataset. Returns nullopt when no GT
/// falls in the area range.
std::optional<double> average_precision(const std::vector<InstanceSet>& preds,
                                        const std::vector<std::vector<BinaryMask>>& gts, double iou_threshold,
                                        AreaRange range = AreaRange::all,
                                        ApInterpolation interp = ApInterpolation::coco101,
                                        ApCurve* curve = nullptr);

/// Throws ShapeError when preds and gts are not aligned by sample.
InstanceEvalReport instance_ap(const std::vector<InstanceSet>& preds,
                               const std::vector<std::vector<BinaryMask>>& gts,
                               ApInterpolation interp = ApInterpolation::coco101);

} // namespace novo
