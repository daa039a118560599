#include "ap_oracle.hpp"
#include "oracles.hpp"

#include "novo/metrics.hpp"
#include "novo/morphology.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace novo;

namespace {

BinaryMask square(int side, int top, int left, int n) { return oracle::rect(side, side, top, left, n, n); }

} // namespace

TEST_SUITE("metrics") {

TEST_CASE("gIoU and cIoU basics") {
    const BinaryMask a = square(10, 0, 0, 4);
    CHECK(g_iou({{a, a}, {a, a}}) == 1.0);
    CHECK(g_iou({{a, a}, {a, square(10, 5, 5, 4)}}) == 0.5);
    CHECK_THROWS_AS(g_iou({}), ValueError);
    CHECK_THROWS_AS(c_iou({}), ValueError);

    const BinaryMask b = square(10, 1, 1, 4);
    CHECK(c_iou({{a, b}}) == iou(a, b));
    CHECK(c_iou({{a, a}, {b, b}}) == 1.0);

    bool degenerate = false;
    CHECK(c_iou({{BinaryMask(3, 3), BinaryMask(3, 3)}}, &degenerate) == 1.0);
    CHECK(degenerate);
}

TEST_CASE("cIoU size-bias fixture: 50/110 against gIoU 0.25") {
    // Pair A: ∩ = 50, ∪ = 100 (IoU 0.5). Pair B: ∩ = 0, ∪ = 10 (IoU 0).
    const BinaryMask pa = oracle::rect(10, 10, 0, 0, 10, 5);
    const BinaryMask ga = oracle::rect(10, 10, 0, 0, 10, 10);
    const BinaryMask pb = oracle::rect(10, 10, 0, 0, 1, 5);
    const BinaryMask gb = oracle::rect(10, 10, 0, 5, 1, 5);
    const std::vector<MaskPair> pairs{{pa, ga}, {pb, gb}};
    CHECK(c_iou(pairs) == 50.0 / 110.0);
    CHECK(g_iou(pairs) == 0.25);
}

TEST_CASE("gIoU and cIoU coincide with equal union sizes") {
    const BinaryMask g = oracle::rect(8, 8, 0, 0, 4, 4);
    const std::vector<MaskPair> pairs{{oracle::rect(8, 8, 0, 0, 4, 2), g}, {oracle::rect(8, 8, 0, 0, 4, 3), g}};
    CHECK(g_iou(pairs) == doctest::Approx(c_iou(pairs)).epsilon(1e-15));
}

TEST_CASE("boundary IoU examples") {
    const BinaryMask a = square(64, 10, 10, 30);
    CHECK(boundary_iou(a, a) == 1.0);
    // Dilating by more than 2d separates the two bands.
    const BinaryMask grown = square(64, 3, 3, 44);
    CHECK(boundary_iou(grown, a, 3) == 0.0);

    BinaryMask holed = a;
    for (int y = 23; y < 27; ++y) {
        for (int x = 23; x < 27; ++x) {
            holed.set(y, x, false);
        }
    }
    CHECK(boundary_iou(holed, a) < iou(holed, a));

    bool degenerate = false;
    CHECK(boundary_iou(BinaryMask(5, 5), BinaryMask(5, 5), 3, &degenerate) == 1.0);
    CHECK(degenerate);
    CHECK_THROWS_AS(boundary_iou(a, a, 0), ValueError);
}

TEST_CASE("boundary F1 examples") {
    const BinaryMask a = square(64, 10, 10, 30);
    CHECK(boundary_f1(a, a) == 1.0);
    const BinaryMask shifted = square(64, 10, 13, 30);
    const auto near = boundary_f1_detail(shifted, a, 3);
    CHECK(near.precision == 1.0);
    CHECK(near.recall == 1.0);
    const BinaryMask far = square(64, 10, 19, 30);
    const double f = boundary_f1(far, a, 3);
    CHECK(f < 0.9);
    CHECK(f == doctest::Approx(oracle::boundary_f1(far, a, 3)).epsilon(1e-12));
    CHECK(boundary_f1(BinaryMask(64, 64), a) == 0.0);
    CHECK(boundary_f1_detail(BinaryMask(4, 4), BinaryMask(4, 4)).degenerate);
}

TEST_CASE("metrics agree with brute-force references on random pairs") {
    std::mt19937_64 rng(61);
    std::uniform_int_distribution<int> side(8, 48);
    for (int trial = 0; trial < 25; ++trial) {
        const int h = side(rng), w = side(rng);
        const BinaryMask p = oracle::random_blobs(rng, h, w, 3);
        const BinaryMask g = oracle::random_blobs(rng, h, w, 3);
        CHECK(std::abs(boundary_iou(p, g, 3) - oracle::boundary_iou(p, g, 3)) <= 1e-9);
        CHECK(std::abs(boundary_f1(p, g, 3) - oracle::boundary_f1(p, g, 3)) <= 1e-9);
        CHECK(boundary_iou(p, p, 2) == 1.0);
        CHECK(boundary_iou(p, g) >= 0.0);
        CHECK(boundary_f1(p, g) <= 1.0);
    }
}

TEST_CASE("metrics are invariant to identical padding") {
    std::mt19937_64 rng(62);
    const BinaryMask p = oracle::random_blobs(rng, 20, 33);
    const BinaryMask g = oracle::random_blobs(rng, 20, 33);
    const auto pp = pad_to_square(p).first;
    const auto gp = pad_to_square(g).first;
    CHECK(iou(pp, gp) == iou(p, g));
    CHECK(boundary_iou(pp, gp) == boundary_iou(p, g));
    CHECK(boundary_f1(pp, gp) == boundary_f1(p, g));
}

TEST_CASE("semantic report is independent of job count") {
    std::mt19937_64 rng(63);
    std::vector<MaskPair> pairs;
    std::vector<std::string> ids;
    for (int i = 0; i < 12; ++i) {
        pairs.emplace_back(oracle::random_blobs(rng, 30, 30), oracle::random_blobs(rng, 30, 30));
        ids.push_back("s" + std::to_string(i));
    }
    pairs.emplace_back(BinaryMask(30, 30), BinaryMask(30, 30));
    ids.push_back("empty");
    const auto one = evaluate_semantic(ids, pairs, 3, 1);
    const auto four = evaluate_semantic(ids, pairs, 3, 4);
    CHECK(one.g_iou == four.g_iou);
    CHECK(one.c_iou == four.c_iou);
    CHECK(one.boundary_iou == four.boundary_iou);
    CHECK(one.warnings == four.warnings);
    CHECK(one.g_iou == g_iou(pairs));
    CHECK(one.c_iou == c_iou(pairs));
    CHECK(!one.warnings.empty());
    REQUIRE(four.per_sample.size() == 13);
    CHECK(four.per_sample[12].id == "empty");
    CHECK_THROWS_AS(evaluate_semantic({"a"}, pairs, 3, 1), ShapeError);
}

TEST_CASE("AP: perfect, empty and hand-computed fixtures") {
    const BinaryMask g1 = square(40, 0, 0, 10);
    const BinaryMask g2 = square(40, 20, 20, 10);

    const auto perfect = instance_ap({{{g1, 1.0}, {g2, 1.0}}}, {{g1, g2}});
    CHECK(perfect.ap50 == 1.0);
    CHECK(perfect.ap75 == 1.0);
    CHECK(perfect.map == 1.0);
    CHECK(perfect.ap_s == 1.0);
    CHECK(!perfect.ap_m.has_value());
    CHECK(!perfect.ap_l.has_value());

    const auto none = instance_ap({{}}, {{g1, g2}});
    CHECK(none.ap50 == 0.0);
    CHECK(none.map == 0.0);

    // One TP with IoU 0.9 (conf 0.9), its duplicate (0.8) and a miss (0.7).
    BinaryMask tp = g1;
    for (int x = 0; x < 10; ++x) {
        tp.set(9, x, false);
    }
    const InstanceSet preds{{tp, 0.9}, {tp, 0.8}, {square(40, 32, 0, 5), 0.7}};
    REQUIRE(iou(tp, g1) == doctest::Approx(0.9));
    const auto r = instance_ap({preds}, {{g1, g2}});
    CHECK(r.ap50 == 51.0 / 101.0);
    CHECK(r.ap_per_threshold[9] == 0.0);
    CHECK(r.curves[0].true_positives == 1);
    // Duplicate is a false positive: precision 1, 1/2, 1/3.
    CHECK(r.curves[0].precision == std::vector<double>{1.0, 0.5, 1.0 / 3.0});

    for (std::size_t t = 0; t < 10; ++t) {
        const double thr = ap_iou_thresholds()[t];
        CHECK(r.ap_per_threshold[t] == oracle::average_precision({preds}, {{g1, g2}}, thr));
    }
    CHECK_THROWS_AS(instance_ap({preds}, {}), ShapeError);
}

TEST_CASE("AP matches the definition oracle on random fixtures") {
    std::mt19937_64 rng(64);
    std::uniform_real_distribution<double> conf(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<InstanceSet> preds(3);
        std::vector<std::vector<BinaryMask>> gts(3);
        for (int s = 0; s < 3; ++s) {
            const int n_gt = static_cast<int>(rng() % 4);
            for (int g = 0; g < n_gt; ++g) {
                gts[s].push_back(oracle::random_blobs(rng, 32, 32, 1));
            }
            const int n_pred = static_cast<int>(rng() % 5);
            for (int p = 0; p < n_pred; ++p) {
                BinaryMask m = (!gts[s].empty() && rng() % 2 == 0)
                                   ? oracle::dilate(gts[s][rng() % gts[s].size()], static_cast<int>(rng() % 2))
                                   : oracle::random_blobs(rng, 32, 32, 1);
                preds[s].push_back({m, std::round(conf(rng) * 8) / 8});
            }
        }
        const auto r = instance_ap(preds, gts);
        const auto r_all = instance_ap(preds, gts, ApInterpolation::all_points);
        for (std::size_t t = 0; t < 10; ++t) {
            const double thr = ap_iou_thresholds()[t];
            CHECK(r.ap_per_threshold[t] == doctest::Approx(oracle::average_precision(preds, gts, thr)).epsilon(1e-12));
            CHECK(r_all.ap_per_threshold[t] ==
                  doctest::Approx(oracle::average_precision(preds, gts, thr, false)).epsilon(1e-12));
        }
        CHECK(r.ap75 <= r.ap50);
    }
}

TEST_CASE("AP depends only on the confidence ranking") {
    std::mt19937_64 rng(65);
    std::vector<InstanceSet> preds(2);
    std::vector<std::vector<BinaryMask>> gts(2);
    for (int s = 0; s < 2; ++s) {
        for (int g = 0; g < 3; ++g) {
            gts[s].push_back(oracle::random_blobs(rng, 40, 40, 1));
            preds[s].push_back({oracle::dilate(gts[s].back(), g % 2), 0.1 + 0.2 * g + 0.05 * s});
        }
        preds[s].push_back({oracle::random_blobs(rng, 40, 40, 2), 0.33});
    }
    auto transformed = preds;
    for (auto& set : transformed) {
        for (auto& inst : set) {
            inst.confidence = std::exp(5.0 * inst.confidence) - 0.5;
        }
    }
    const auto a = instance_ap(preds, gts);
    const auto b = instance_ap(transformed, gts);
    CHECK(a.ap_per_threshold == b.ap_per_threshold);
    CHECK(a.ap_s == b.ap_s);
    CHECK(a.ap_m == b.ap_m);
}

TEST_CASE("AP size buckets and ignore semantics") {
    // A small and a large ground truth, each predicted exactly.
    const BinaryMask small = oracle::rect(128, 128, 0, 0, 10, 10);
    const BinaryMask large = oracle::rect(128, 128, 20, 20, 100, 100);
    CHECK(in_area_range(small.area(), AreaRange::small));
    CHECK(in_area_range(large.area(), AreaRange::large));
    CHECK(in_area_range(32 * 32, AreaRange::medium));
    CHECK(in_area_range(96 * 96, AreaRange::medium));
    CHECK(!in_area_range(96 * 96 + 1, AreaRange::medium));

    const auto r = instance_ap({{{small, 0.9}, {large, 0.8}}}, {{small, large}});
    CHECK(r.ap_s == 1.0);
    CHECK(r.ap_l == 1.0);
    CHECK(!r.ap_m.has_value());

    // A confident false positive of large size does not hurt AP-S.
    const auto fp = instance_ap({{{oracle::rect(128, 128, 0, 20, 100, 100), 0.99}, {small, 0.9}}}, {{small}});
    CHECK(fp.ap_s == 1.0);
    CHECK(fp.ap50 < 1.0);
    CHECK(parse_ap_interpolation("all-points") == ApInterpolation::all_points);
    CHECK_THROWS_AS(parse_ap_interpolation("11pt"), ValueError);
}

} // TEST_SUITE
