#include "novo/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <type_traits>

namespace novo {

namespace {

void require_positive_shape(int height, int width, const char* what) {
    if (height < 1 || width < 1) {
        throw ShapeError(std::string(what) + ": dimensions must be >= 1, got " +
                         std::to_string(height) + "x" + std::to_string(width));
    }
}

std::size_t cell_count(int height, int width) {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
}

template <typename Out, typename In>
Out pad_impl(const In& in, const PadSpec& spec) {
    Out out(spec.padded_side, spec.padded_side);
    for (int y = 0; y < in.height(); ++y) {
        for (int x = 0; x < in.width(); ++x) {
            if constexpr (std::is_same_v<Out, BinaryMask>) {
                out.set(y + spec.offset_y, x + spec.offset_x, in(y, x));
            } else {
                out(y + spec.offset_y, x + spec.offset_x) = in(y, x);
            }
        }
    }
    return out;
}

template <typename Out, typename In>
Out unpad_impl(const In& in, const PadSpec& spec) {
    if (in.height() != spec.padded_side || in.width() != spec.padded_side) {
        throw ShapeError("unpad: map is " + std::to_string(in.height()) + "x" +
                         std::to_string(in.width()) + " but pad spec expects side " +
                         std::to_string(spec.padded_side));
    }
    if (spec.original_h < 1 || spec.original_w < 1 ||
        spec.offset_y + spec.original_h > spec.padded_side ||
        spec.offset_x + spec.original_w > spec.padded_side || spec.offset_y < 0 ||
        spec.offset_x < 0) {
        throw ShapeError("unpad: pad spec places content outside the padded square");
    }
    Out out(spec.original_h, spec.original_w);
    for (int y = 0; y < spec.original_h; ++y) {
        for (int x = 0; x < spec.original_w; ++x) {
            if constexpr (std::is_same_v<Out, BinaryMask>) {
                out.set(y, x, in(y + spec.offset_y, x + spec.offset_x));
            } else {
                out(y, x) = in(y + spec.offset_y, x + spec.offset_x);
            }
        }
    }
    return out;
}

} // namespace

DenseMap::DenseMap(int height, int width, double fill)
    : height_(height), width_(width) {
    require_positive_shape(height, width, "DenseMap");
    if (!std::isfinite(fill)) {
        throw ValueError("DenseMap: fill value must be finite");
    }
    values_.assign(cell_count(height, width), fill);
}

DenseMap::DenseMap(int height, int width, std::vector<double> values)
    : height_(height), width_(width), values_(std::move(values)) {
    require_positive_shape(height, width, "DenseMap");
    if (values_.size() != cell_count(height, width)) {
        throw ShapeError("DenseMap: " + std::to_string(values_.size()) + " values for " +
                         std::to_string(height) + "x" + std::to_string(width));
    }
    for (std::size_t k = 0; k < values_.size(); ++k) {
        if (!std::isfinite(values_[k])) {
            throw ValueError("DenseMap: non-finite value at index " + std::to_string(k));
        }
    }
}

double DenseMap::min() const { return *std::min_element(values_.begin(), values_.end()); }

double DenseMap::max() const { return *std::max_element(values_.begin(), values_.end()); }

BinaryMask::BinaryMask(int height, int width, bool fill) : height_(height), width_(width) {
    require_positive_shape(height, width, "BinaryMask");
    bits_.assign(cell_count(height, width), fill ? 1 : 0);
}

BinaryMask::BinaryMask(int height, int width, std::vector<std::uint8_t> bits)
    : height_(height), width_(width), bits_(std::move(bits)) {
    require_positive_shape(height, width, "BinaryMask");
    if (bits_.size() != cell_count(height, width)) {
        throw ShapeError("BinaryMask: " + std::to_string(bits_.size()) + " bits for " +
                         std::to_string(height) + "x" + std::to_string(width));
    }
    for (auto& b : bits_) {
        b = b != 0 ? 1 : 0;
    }
}

std::size_t BinaryMask::area() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

bool BinaryMask::any() const {
    return std::find(bits_.begin(), bits_.end(), std::uint8_t{1}) != bits_.end();
}

PadSpec pad_spec_for(int height, int width) {
    require_positive_shape(height, width, "pad_spec_for");
    return PadSpec{height, width, std::max(height, width), 0, 0};
}

std::pair<DenseMap, PadSpec> pad_to_square(const DenseMap& map) {
    const PadSpec spec = pad_spec_for(map.height(), map.width());
    return {pad_impl<DenseMap>(map, spec), spec};
}

std::pair<BinaryMask, PadSpec> pad_to_square(const BinaryMask& mask) {
    const PadSpec spec = pad_spec_for(mask.height(), mask.width());
    return {pad_impl<BinaryMask>(mask, spec), spec};
}

DenseMap unpad(const DenseMap& map, const PadSpec& spec) { return unpad_impl<DenseMap>(map, spec); }

BinaryMask unpad(const BinaryMask& mask, const PadSpec& spec) {
    return unpad_impl<BinaryMask>(mask, spec);
}

DenseMap bilinear_resize(const DenseMap& map, int out_h, int out_w) {
    require_positive_shape(out_h, out_w, "bilinear_resize");
    if (out_h == map.height() && out_w == map.width()) {
        return map;
    }
    const int in_h = map.height();
    const int in_w = map.width();
    const double scale_y = static_cast<double>(in_h) / out_h;
    const double scale_x = static_cast<double>(in_w) / out_w;

    // Per-column source taps are shared by every row.
    std::vector<int> x0(out_w), x1(out_w);
    std::vector<double> wx(out_w);
    for (int x = 0; x < out_w; ++x) {
        const double sx = std::clamp((x + 0.5) * scale_x - 0.5, 0.0, static_cast<double>(in_w - 1));
        x0[x] = static_cast<int>(std::floor(sx));
        x1[x] = std::min(x0[x] + 1, in_w - 1);
        wx[x] = sx - x0[x];
    }

    DenseMap out(out_h, out_w);
    for (int y = 0; y < out_h; ++y) {
        const double sy = std::clamp((y + 0.5) * scale_y - 0.5, 0.0, static_cast<double>(in_h - 1));
        const int y0 = static_cast<int>(std::floor(sy));
        const int y1 = std::min(y0 + 1, in_h - 1);
        const double wy = sy - y0;
        for (int x = 0; x < out_w; ++x) {
            const double top = map(y0, x0[x]) + (map(y0, x1[x]) - map(y0, x0[x])) * wx[x];
            const double bottom = map(y1, x0[x]) + (map(y1, x1[x]) - map(y1, x0[x])) * wx[x];
            out(y, x) = top + (bottom - top) * wy;
        }
    }
    return out;
}

std::vector<BinaryMask> connected_components(const BinaryMask& mask, Connectivity conn) {
    std::vector<BinaryMask> components;
    const int h = mask.height();
    const int w = mask.width();
    if (mask.size() == 0) {
        return components;
    }
    std::vector<std::uint8_t> visited(mask.size(), 0);
    std::vector<std::pair<int, int>> stack;

    static constexpr int four[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
    static constexpr int eight[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1},
                                        {0, 1},   {1, -1}, {1, 0},  {1, 1}};
    const auto* offsets = conn == Connectivity::four ? four : eight;
    const int n_offsets = conn == Connectivity::four ? 4 : 8;

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t k = static_cast<std::size_t>(y) * w + x;
            if (!mask[k] || visited[k]) {
                continue;
            }
            BinaryMask component(h, w);
            visited[k] = 1;
            stack.emplace_back(y, x);
            while (!stack.empty()) {
                const auto [cy, cx] = stack.back();
                stack.pop_back();
                component.set(cy, cx);
                for (int i = 0; i < n_offsets; ++i) {
                    const int ny = cy + offsets[i][0];
                    const int nx = cx + offsets[i][1];
                    if (!mask.contains(ny, nx)) {
                        continue;
                    }
                    const std::size_t nk = static_cast<std::size_t>(ny) * w + nx;
                    if (mask[nk] && !visited[nk]) {
                        visited[nk] = 1;
                        stack.emplace_back(ny, nx);
                    }
                }
            }
            components.push_back(std::move(component));
        }
    }
    return components;
}

std::size_t intersection_area(const BinaryMask& a, const BinaryMask& b) {
    require_same_shape(a, b, "intersection_area");
    const auto ab = a.bits();
    const auto bb = b.bits();
    std::size_t n = 0;
    for (std::size_t k = 0; k < ab.size(); ++k) {
        n += ab[k] & bb[k];
    }
    return n;
}

std::size_t union_area(const BinaryMask& a, const BinaryMask& b) {
    require_same_shape(a, b, "union_area");
    const auto ab = a.bits();
    const auto bb = b.bits();
    std::size_t n = 0;
    for (std::size_t k = 0; k < ab.size(); ++k) {
        n += ab[k] | bb[k];
    }
    return n;
}

namespace {

template <typename Op>
BinaryMask combine(const BinaryMask& a, const BinaryMask& b, const char* what, Op op) {
    require_same_shape(a, b, what);
    std::vector<std::uint8_t> bits(a.size());
    const auto ab = a.bits();
    const auto bb = b.bits();
    for (std::size_t k = 0; k < bits.size(); ++k) {
        bits[k] = op(ab[k], bb[k]);
    }
    return BinaryMask(a.height(), a.width(), std::move(bits));
}

} // namespace

BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b) {
    return combine(a, b, "mask_union", [](std::uint8_t p, std::uint8_t q) -> std::uint8_t { return p | q; });
}

BinaryMask mask_intersection(const BinaryMask& a, const BinaryMask& b) {
    return combine(a, b, "mask_intersection",
                   [](std::uint8_t p, std::uint8_t q) -> std::uint8_t { return p & q; });
}

BinaryMask mask_difference(const BinaryMask& a, const BinaryMask& b) {
    return combine(a, b, "mask_difference",
                   [](std::uint8_t p, std::uint8_t q) -> std::uint8_t { return p & (q ^ 1); });
}

double iou(const BinaryMask& a, const BinaryMask& b) {
    const std::size_t u = union_area(a, b);
    if (u == 0) {
        return 1.0;
    }
    return static_cast<double>(intersection_area(a, b)) / static_cast<double>(u);
}

} // namespace novo
