#include "novo/metrics.hpp"

#include "novo/morphology.hpp"
#include "novo/parallel.hpp"

#include <algorithm>
#include <numeric>

namespace novo {

double g_iou(const std::vector<MaskPair>& pairs) {
    if (pairs.empty()) {
        throw ValueError("g_iou: no samples");
    }
    double sum = 0.0;
    for (const auto& [pred, gt] : pairs) {
        sum += iou(pred, gt);
    }
    return sum / static_cast<double>(pairs.size());
}

double c_iou(const std::vector<MaskPair>& pairs, bool* degenerate) {
    if (pairs.empty()) {
        throw ValueError("c_iou: no samples");
    }
    std::size_t inter = 0;
    std::size_t uni = 0;
    for (const auto& [pred, gt] : pairs) {
        inter += intersection_area(pred, gt);
        uni += union_area(pred, gt);
    }
    if (degenerate) {
        *degenerate = uni == 0;
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double boundary_iou(const BinaryMask& pred, const BinaryMask& gt, int d, bool* degenerate) {
    require_same_shape(pred, gt, "boundary_iou");
    if (d < 1) {
        throw ValueError("boundary_iou: d must be >= 1");
    }
    const BinaryMask pb = boundary_band(pred, d);
    const BinaryMask gb = boundary_band(gt, d);
    const std::size_t u = union_area(pb, gb);
    if (degenerate) {
        *degenerate = u == 0;
    }
    if (u == 0) {
        return 1.0;
    }
    return static_cast<double>(intersection_area(pb, gb)) / static_cast<double>(u);
}

BoundaryF1 boundary_f1_detail(const BinaryMask& pred, const BinaryMask& gt, int d) {
    require_same_shape(pred, gt, "boundary_f1");
    if (d < 1) {
        throw ValueError("boundary_f1: d must be >= 1");
    }
    const BinaryMask pc = contour(pred);
    const BinaryMask gc = contour(gt);
    const std::size_t np = pc.area();
    const std::size_t ng = gc.area();
    BoundaryF1 out;
    if (np == 0 && ng == 0) {
        out.precision = out.recall = out.f1 = 1.0;
        out.degenerate = true;
        return out;
    }
    if (np == 0 || ng == 0) {
        return out;
    }
    const std::int64_t d2 = std::int64_t{d} * d;
    const auto to_gt = squared_distance_transform(gc);
    const auto to_pred = squared_distance_transform(pc);
    std::size_t pred_hits = 0;
    std::size_t gt_hits = 0;
    for (std::size_t k = 0; k < pc.size(); ++k) {
        if (pc[k] && to_gt[k] <= d2) {
            ++pred_hits;
        }
        if (gc[k] && to_pred[k] <= d2) {
            ++gt_hits;
        }
    }
    out.precision = static_cast<double>(pred_hits) / static_cast<double>(np);
    out.recall = static_cast<double>(gt_hits) / static_cast<double>(ng);
    const double s = out.precision + out.recall;
    out.f1 = s > 0.0 ? 2.0 * out.precision * out.recall / s : 0.0;
    return out;
}

double boundary_f1(const BinaryMask& pred, const BinaryMask& gt, int d) {
    return boundary_f1_detail(pred, gt, d).f1;
}

SemanticEvalReport evaluate_semantic(const std::vector<std::string>& ids,
                                     const std::vector<MaskPair>& pairs, int boundary_d, int jobs) {
    if (pairs.empty()) {
        throw ValueError("evaluate_semantic: no samples");
    }
    if (ids.size() != pairs.size()) {
        throw ShapeError("evaluate_semantic: ids and pairs differ in length");
    }
    SemanticEvalReport report;
    report.boundary_d = boundary_d;
    report.n_samples = pairs.size();
    report.per_sample.resize(pairs.size());
    std::vector<std::uint8_t> b_iou_degenerate(pairs.size(), 0);
    std::vector<std::uint8_t> b_f1_degenerate(pairs.size(), 0);

    parallel_for(pairs.size(), jobs, [&](std::size_t i) {
        const auto& [pred, gt] = pairs[i];
        auto& s = report.per_sample[i];
        s.id = ids[i];
        s.intersection = intersection_area(pred, gt);
        s.union_ = union_area(pred, gt);
        s.iou = s.union_ == 0 ? 1.0 : static_cast<double>(s.intersection) / static_cast<double>(s.union_);
        bool deg = false;
        s.boundary_iou = boundary_iou(pred, gt, boundary_d, &deg);
        b_iou_degenerate[i] = deg;
        const auto bf = boundary_f1_detail(pred, gt, boundary_d);
        s.boundary_f1 = bf.f1;
        b_f1_degenerate[i] = bf.degenerate;
    });

    double iou_sum = 0.0;
    double biou_sum = 0.0;
    double bf1_sum = 0.0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& s = report.per_sample[i];
        iou_sum += s.iou;
        biou_sum += s.boundary_iou;
        bf1_sum += s.boundary_f1;
        report.intersection_sum += s.intersection;
        report.union_sum += s.union_;
        if (s.union_ == 0) {
            report.warnings.push_back(s.id + ": prediction and ground truth both empty, IoU taken as 1");
        }
        if (b_iou_degenerate[i] || b_f1_degenerate[i]) {
            report.warnings.push_back(s.id + ": both boundaries empty, boundary metrics taken as 1");
        }
    }
    const double n = static_cast<double>(pairs.size());
    report.g_iou = iou_sum / n;
    report.boundary_iou = biou_sum / n;
    report.boundary_f1 = bf1_sum / n;
    if (report.union_sum == 0) {
        report.c_iou = 1.0;
        report.warnings.push_back("dataset: all unions empty, cIoU taken as 1");
    } else {
        report.c_iou = static_cast<double>(report.intersection_sum) / static_cast<double>(report.union_sum);
    }
    return report;
}

const char* to_string(ApInterpolation i) {
    return i == ApInterpolation::coco101 ? "coco101" : "all-points";
}

ApInterpolation parse_ap_interpolation(const std::string& s) {
    if (s == "coco101" || s == "101") {
        return ApInterpolation::coco101;
    }
    if (s == "all-points" || s == "all") {
        return ApInterpolation::all_points;
    }
    throw ValueError("unknown AP interpolation '" + s + "' (expected coco101 or all-points)");
}

std::array<double, 10> ap_iou_thresholds() {
    std::array<double, 10> t{};
    for (int i = 0; i < 10; ++i) {
        t[static_cast<std::size_t>(i)] = (50 + 5 * i) / 100.0;
    }
    return t;
}

bool in_area_range(std::size_t area, AreaRange r) {
    constexpr std::size_t small = 32 * 32;
    constexpr std::size_t large = 96 * 96;
    switch (r) {
    case AreaRange::all:
        return true;
    case AreaRange::small:
        return area < small;
    case AreaRange::medium:
        return area >= small && area <= large;
    case AreaRange::large:
        return area > large;
    }
    return false;
}

namespace {

enum class Outcome { true_positive, false_positive, ignored };

struct Detection {
    double confidence;
    std::size_t sample;
    std::size_t index;
    Outcome outcome;
};

// Greedy per-sample matching in confidence order. Ground truth outside the
// area range is "ignored": matching one neither helps nor hurts, and an
// unmatched prediction outside the range is dropped as well.
void match_sample(const InstanceSet& preds, const std::vector<BinaryMask>& gts, std::size_t sample,
                  double threshold, AreaRange range, std::vector<Detection>& out,
                  std::size_t& gt_in_range) {
    std::vector<std::size_t> gt_order(gts.size());
    std::iota(gt_order.begin(), gt_order.end(), std::size_t{0});
    std::vector<bool> gt_ignore(gts.size());
    for (std::size_t g = 0; g < gts.size(); ++g) {
        gt_ignore[g] = !in_area_range(gts[g].area(), range);
        gt_in_range += gt_ignore[g] ? 0 : 1;
    }
    std::stable_sort(gt_order.begin(), gt_order.end(),
                     [&](std::size_t a, std::size_t b) { return !gt_ignore[a] && gt_ignore[b]; });

    std::vector<std::size_t> pred_order(preds.size());
    std::iota(pred_order.begin(), pred_order.end(), std::size_t{0});
    std::stable_sort(pred_order.begin(), pred_order.end(), [&](std::size_t a, std::size_t b) {
        return preds[a].confidence > preds[b].confidence;
    });

    std::vector<bool> matched(gts.size(), false);
    for (std::size_t p : pred_order) {
        std::ptrdiff_t best = -1;
        double best_iou = 0.0;
        for (std::size_t g : gt_order) {
            if (matched[g]) {
                continue;
            }
            if (best >= 0 && !gt_ignore[static_cast<std::size_t>(best)] && gt_ignore[g]) {
                break;
            }
            const double v = iou(preds[p].mask, gts[g]);
            if (v < threshold) {
                continue;
            }
            if (best < 0 || v > best_iou) {
                best = static_cast<std::ptrdiff_t>(g);
                best_iou = v;
            }
        }
        Outcome outcome = Outcome::false_positive;
        if (best >= 0) {
            matched[static_cast<std::size_t>(best)] = true;
            outcome = gt_ignore[static_cast<std::size_t>(best)] ? Outcome::ignored : Outcome::true_positive;
        } else if (!in_area_range(preds[p].mask.area(), range)) {
            outcome = Outcome::ignored;
        }
        out.push_back(Detection{preds[p].confidence, sample, p, outcome});
    }
}

} // namespace

std::optional<double> average_precision(const std::vector<InstanceSet>& preds,
                                        const std::vector<std::vector<BinaryMask>>& gts,
                                        double iou_threshold, AreaRange range, ApInterpolation interp,
                                        ApCurve* curve) {
    if (preds.size() != gts.size()) {
        throw ShapeError("average_precision: " + std::to_string(preds.size()) + " prediction sets for " +
                         std::to_string(gts.size()) + " ground-truth sets");
    }
    std::vector<Detection> detections;
    std::size_t gt_in_range = 0;
    for (std::size_t s = 0; s < preds.size(); ++s) {
        match_sample(preds[s], gts[s], s, iou_threshold, range, detections, gt_in_range);
    }
    if (gt_in_range == 0) {
        return std::nullopt;
    }
    std::stable_sort(detections.begin(), detections.end(), [](const Detection& a, const Detection& b) {
        if (a.confidence != b.confidence) {
            return a.confidence > b.confidence;
        }
        return a.sample != b.sample ? a.sample < b.sample : a.index < b.index;
    });

    std::vector<double> precision;
    std::vector<double> recall;
    std::size_t tp = 0;
    std::size_t fp = 0;
    for (const auto& d : detections) {
        if (d.outcome == Outcome::ignored) {
            continue;
        }
        (d.outcome == Outcome::true_positive ? tp : fp) += 1;
        precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
        recall.push_back(static_cast<double>(tp) / static_cast<double>(gt_in_range));
    }
    if (curve) {
        curve->iou_threshold = iou_threshold;
        curve->precision = precision;
        curve->recall = recall;
        curve->true_positives = tp;
        curve->gt_count = gt_in_range;
    }

    // Precision envelope: best precision at any recall at or beyond this point.
    std::vector<double> envelope = precision;
    for (std::size_t i = envelope.size(); i-- > 1;) {
        envelope[i - 1] = std::max(envelope[i - 1], envelope[i]);
    }
    double ap = 0.0;
    if (interp == ApInterpolation::coco101) {
        for (int i = 0; i <= 100; ++i) {
            const double r = i / 100.0;
            const auto it = std::lower_bound(recall.begin(), recall.end(), r);
            if (it != recall.end()) {
                ap += envelope[static_cast<std::size_t>(it - recall.begin())];
            }
        }
        ap /= 101.0;
    } else {
        double prev_recall = 0.0;
        for (std::size_t i = 0; i < recall.size(); ++i) {
            ap += (recall[i] - prev_recall) * envelope[i];
            prev_recall = recall[i];
        }
    }
    return ap;
}

InstanceEvalReport instance_ap(const std::vector<InstanceSet>& preds,
                               const std::vector<std::vector<BinaryMask>>& gts, ApInterpolation interp) {
    if (preds.size() != gts.size()) {
        throw ShapeError("instance_ap: " + std::to_string(preds.size()) + " prediction sets for " +
                         std::to_string(gts.size()) + " ground-truth sets");
    }
    InstanceEvalReport report;
    for (std::size_t s = 0; s < preds.size(); ++s) {
        report.gt_count += gts[s].size();
        report.prediction_count += preds[s].size();
        for (const auto& p : preds[s]) {
            for (const auto& g : gts[s]) {
                require_same_shape(p.mask, g, "instance_ap");
            }
        }
    }
    const auto thresholds = ap_iou_thresholds();
    double sum = 0.0;
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        ApCurve curve;
        const auto ap = average_precision(preds, gts, thresholds[i], AreaRange::all, interp, &curve);
        report.ap_per_threshold[i] = ap.value_or(0.0);
        sum += report.ap_per_threshold[i];
        report.curves.push_back(std::move(curve));
    }
    report.ap50 = report.ap_per_threshold[0];
    report.ap75 = report.ap_per_threshold[5];
    report.map = sum / static_cast<double>(thresholds.size());

    const auto bucket = [&](AreaRange range) -> std::optional<double> {
        double total = 0.0;
        for (double t : thresholds) {
            const auto ap = average_precision(preds, gts, t, range, interp);
            if (!ap) {
                return std::nullopt;
            }
            total += *ap;
        }
        return total / static_cast<double>(thresholds.size());
    };
    report.ap_s = bucket(AreaRange::small);
    report.ap_m = bucket(AreaRange::medium);
    report.ap_l = bucket(AreaRange::large);
    return report;
}

} // namespace novo
