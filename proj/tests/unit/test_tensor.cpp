#include "oracles.hpp"

#include "novo/tensor.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace novo;

TEST_SUITE("tensor") {

TEST_CASE("dense map rejects bad shapes and non-finite values") {
    CHECK_THROWS_AS(DenseMap(0, 3), ShapeError);
    CHECK_THROWS_AS(DenseMap(2, 2, std::vector<double>(3)), ShapeError);
    CHECK_THROWS_AS(DenseMap(1, 2, std::vector<double>{1.0, NAN}), ValueError);
    CHECK_THROWS_AS(DenseMap(1, 1, std::vector<double>{INFINITY}), ValueError);
}

TEST_CASE("pad 3x5 ones to 5x5") {
    const DenseMap ones(3, 5, 1.0);
    const auto [padded, spec] = pad_to_square(ones);
    REQUIRE(padded.height() == 5);
    REQUIRE(padded.width() == 5);
    CHECK(spec.offset_y == 0);
    CHECK(spec.offset_x == 0);
    CHECK(spec.padded_side == 5);
    for (int y = 0; y < 5; ++y) {
        for (int x = 0; x < 5; ++x) {
            CHECK(padded(y, x) == (y < 3 ? 1.0 : 0.0));
        }
    }
    CHECK(unpad(padded, spec) == ones);
}

TEST_CASE("square input is left unchanged by padding") {
    std::mt19937_64 rng(1);
    const DenseMap m = oracle::random_map(rng, 4, 4);
    const auto [padded, spec] = pad_to_square(m);
    CHECK(padded == m);
    CHECK(spec.offset_y == 0);
    CHECK(spec.offset_x == 0);
}

TEST_CASE("2x3 map pads with a zero bottom row") {
    const DenseMap m(2, 3, std::vector<double>{1, 2, 3, 4, 5, 6});
    const auto [padded, spec] = pad_to_square(m);
    const DenseMap want(3, 3, std::vector<double>{1, 2, 3, 4, 5, 6, 0, 0, 0});
    CHECK(padded == want);
}

TEST_CASE("unpad rejects a map of the wrong side") {
    const PadSpec spec = pad_spec_for(3, 5);
    CHECK_THROWS_AS(unpad(DenseMap(4, 4), spec), ShapeError);
    CHECK_THROWS_AS(unpad(BinaryMask(6, 6), spec), ShapeError);
}

TEST_CASE("pad/unpad round-trip on random shapes up to 512") {
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<int> side(1, 512);
    for (int trial = 0; trial < 40; ++trial) {
        const int h = side(rng), w = side(rng);
        const BinaryMask m = oracle::random_mask(rng, h, w, 0.3);
        const auto [padded, spec] = pad_to_square(m);
        CHECK(padded.height() == std::max(h, w));
        CHECK(padded.area() == m.area());
        CHECK(unpad(padded, spec) == m);
    }
    const BinaryMask m7 = oracle::random_mask(rng, 7, 13);
    const auto [p7, s7] = pad_to_square(m7);
    CHECK(unpad(p7, s7) == m7);
}

TEST_CASE("bilinear resize of a constant stays constant") {
    const DenseMap c(2, 2, 0.5);
    for (auto [h, w] : {std::pair{1, 1}, {3, 7}, {256, 256}, {5, 2}}) {
        const DenseMap r = bilinear_resize(c, h, w);
        for (double v : r.values()) {
            CHECK(v == 0.5);
        }
    }
}

TEST_CASE("bilinear resize of a monotone row is monotone") {
    const DenseMap m(2, 2, std::vector<double>{0, 1, 0, 1});
    const DenseMap r = bilinear_resize(m, 2, 4);
    for (int y = 0; y < 2; ++y) {
        for (int x = 1; x < 4; ++x) {
            CHECK(r(y, x) >= r(y, x - 1));
        }
    }
}

TEST_CASE("bilinear resize matches the hat-function reference") {
    std::mt19937_64 rng(3);
    const DenseMap m = oracle::random_map(rng, 24, 24);
    const DenseMap got = bilinear_resize(m, 256, 256);
    const DenseMap want = oracle::bilinear_reference(m, 256, 256);
    double worst = 0.0;
    for (std::size_t k = 0; k < got.size(); ++k) {
        worst = std::max(worst, std::abs(got[k] - want[k]));
    }
    CHECK(worst <= 1e-6);

    for (int trial = 0; trial < 20; ++trial) {
        std::uniform_int_distribution<int> d(1, 20);
        const DenseMap src = oracle::random_map(rng, d(rng), d(rng));
        const int oh = d(rng), ow = d(rng);
        const DenseMap a = bilinear_resize(src, oh, ow);
        const DenseMap b = oracle::bilinear_reference(src, oh, ow);
        for (std::size_t k = 0; k < a.size(); ++k) {
            CHECK(a[k] == doctest::Approx(b[k]).epsilon(1e-9));
            CHECK(a[k] >= src.min() - 1e-12);
            CHECK(a[k] <= src.max() + 1e-12);
        }
    }
}

TEST_CASE("bilinear resize is the identity at the same size and commutes with flips") {
    std::mt19937_64 rng(5);
    const DenseMap m = oracle::random_map(rng, 9, 6);
    CHECK(bilinear_resize(m, 9, 6) == m);

    DenseMap flipped(9, 6);
    for (int y = 0; y < 9; ++y) {
        for (int x = 0; x < 6; ++x) {
            flipped(y, x) = m(y, 5 - x);
        }
    }
    const DenseMap a = bilinear_resize(m, 17, 11);
    const DenseMap b = bilinear_resize(flipped, 17, 11);
    for (int y = 0; y < 17; ++y) {
        for (int x = 0; x < 11; ++x) {
            CHECK(a(y, x) == doctest::Approx(b(y, 10 - x)).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(bilinear_resize(m, 0, 3), ShapeError);
}

TEST_CASE("connected components") {
    CHECK(connected_components(BinaryMask(5, 5)).empty());

    BinaryMask two(6, 6);
    for (int y = 0; y < 2; ++y) {
        for (int x = 0; x < 2; ++x) {
            two.set(y, x);
            two.set(y + 3, x + 3);
        }
    }
    const auto comps = connected_components(two);
    REQUIRE(comps.size() == 2);
    CHECK(comps[0].area() == 4);
    CHECK(comps[1].area() == 4);
    CHECK(comps[0](0, 0));

    // Plus sign centred at (2,2) with a pixel touching its right arm diagonally.
    BinaryMask plus(6, 6);
    for (int k = 1; k <= 3; ++k) {
        plus.set(2, k);
        plus.set(k, 2);
    }
    plus.set(1, 4);
    const auto four = connected_components(plus, Connectivity::four);
    REQUIRE(four.size() == 2);
    CHECK(four[1].area() == 1);
    CHECK(four[1](1, 4));
    CHECK(connected_components(plus, Connectivity::eight).size() == 1);
}

TEST_CASE("connected components partition random masks") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 30; ++trial) {
        const BinaryMask m = oracle::random_mask(rng, 20, 17, 0.45);
        const auto comps = connected_components(m);
        std::size_t total = 0;
        BinaryMask acc(20, 17);
        for (std::size_t i = 0; i < comps.size(); ++i) {
            total += comps[i].area();
            acc = mask_union(acc, comps[i]);
            CHECK(connected_components(comps[i]).size() == 1);
            for (std::size_t j = i + 1; j < comps.size(); ++j) {
                CHECK(intersection_area(comps[i], comps[j]) == 0);
            }
        }
        CHECK(total == m.area());
        CHECK(acc == m);
    }
}

TEST_CASE("iou conventions and hand counts") {
    const BinaryMask a = oracle::rect(4, 4, 0, 0, 2, 2);
    CHECK(iou(a, a) == 1.0);
    CHECK(iou(BinaryMask(4, 4), BinaryMask(4, 4)) == 1.0);
    CHECK(iou(BinaryMask(4, 4), a) == 0.0);
    CHECK(iou(a, oracle::rect(4, 4, 2, 2, 2, 2)) == 0.0);
    const BinaryMask b = oracle::rect(4, 4, 0, 1, 2, 2);
    CHECK(intersection_area(a, b) == 2);
    CHECK(union_area(a, b) == 6);
    CHECK(iou(a, b) == doctest::Approx(2.0 / 6.0));
    CHECK_THROWS_AS(iou(a, BinaryMask(4, 5)), ShapeError);
    CHECK(mask_difference(a, b).area() == 2);
}

TEST_CASE("iou is symmetric and matches the counting oracle") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const BinaryMask a = oracle::random_mask(rng, 13, 8, 0.3);
        const BinaryMask b = oracle::random_mask(rng, 13, 8, 0.3);
        CHECK(iou(a, b) == iou(b, a));
        CHECK(iou(a, b) == doctest::Approx(oracle::iou(a, b)).epsilon(1e-12));
    }
}

} // TEST_SUITE
