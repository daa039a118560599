#pragma once

#include "novo/error.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace novo {

/// Row-major H×W field of finite reals: logits, similarity maps, prompt maps.
class DenseMap {
  public:
    DenseMap() = default;
    /// Zero-filled map. Throws ShapeError if either side is 0.
    DenseMap(int height, int width, double fill = 0.0);
    /// Throws ShapeError on size mismatch and ValueError on non-finite values.
    DenseMap(int height, int width, std::vector<double> values);

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    double operator()(int y, int x) const { return values_[index(y, x)]; }
    double& operator()(int y, int x) { return values_[index(y, x)]; }
    double operator[](std::size_t k) const { return values_[k]; }
    double& operator[](std::size_t k) { return values_[k]; }

    std::span<const double> values() const { return values_; }
    std::span<double> values() { return values_; }

    double min() const;
    double max() const;

    bool operator==(const DenseMap&) const = default;

  private:
    std::size_t index(int y, int x) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    int height_ = 0;
    int width_ = 0;
    std::vector<double> values_;
};

/// Row-major H×W boolean mask. Bits are stored one per byte (0 or 1).
class BinaryMask {
  public:
    BinaryMask() = default;
    BinaryMask(int height, int width, bool fill = false);
    /// Any nonzero byte is treated as true.
    BinaryMask(int height, int width, std::vector<std::uint8_t> bits);

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return bits_.size(); }

    bool operator()(int y, int x) const { return bits_[index(y, x)] != 0; }
    void set(int y, int x, bool v = true) { bits_[index(y, x)] = v ? 1 : 0; }
    bool operator[](std::size_t k) const { return bits_[k] != 0; }
    void set(std::size_t k, bool v = true) { bits_[k] = v ? 1 : 0; }

    bool contains(int y, int x) const { return y >= 0 && x >= 0 && y < height_ && x < width_; }

    std::span<const std::uint8_t> bits() const { return bits_; }

    std::size_t area() const;
    bool any() const;

    bool operator==(const BinaryMask&) const = default;

  private:
    std::size_t index(int y, int x) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    int height_ = 0;
    int width_ = 0;
    std::vector<std::uint8_t> bits_;
};

/// Geometry of a zero-pad to a square canvas. Content sits at (offset_y, offset_x).
struct PadSpec {
    int original_h = 0;
    int original_w = 0;
    int padded_side = 0;
    int offset_y = 0;
    int offset_x = 0;

    bool operator==(const PadSpec&) const = default;
};

/// Pad geometry for an image of the given size (top-left anchored).
PadSpec pad_spec_for(int height, int width);

std::pair<DenseMap, PadSpec> pad_to_square(const DenseMap& map);
std::pair<BinaryMask, PadSpec> pad_to_square(const BinaryMask& mask);

/// Inverse of pad_to_square. Throws ShapeError if the map is not spec.padded_side square.
DenseMap unpad(const DenseMap& map, const PadSpec& spec);
BinaryMask unpad(const BinaryMask& mask, const PadSpec& spec);

/// Bilinear resampling with half-pixel centres and border clamping.
DenseMap bilinear_resize(const DenseMap& map, int out_h, int out_w);

enum class Connectivity { four, eight };

/// Connected components, ordered by their first pixel in row-major scan.
std::vector<BinaryMask> connected_components(const BinaryMask& mask,
                                             Connectivity conn = Connectivity::four);

std::size_t intersection_area(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_union(const BinaryMask& a, const BinaryMask& b);
BinaryMask mask_intersection(const BinaryMask& a, const BinaryMask& b);
/// a \ b
BinaryMask mask_difference(const BinaryMask& a, const BinaryMask& b);
std::size_t union_area(const BinaryMask& a, const BinaryMask& b);
/// |a∩b| / |a∪b|; two empty masks have IoU 1.
double iou(const BinaryMask& a, const BinaryMask& b);

/// Throws ShapeError unless both operands have the same height and width.
template <typename A, typename B>
void require_same_shape(const A& a, const B& b, const char* what) {
    if (a.height() != b.height() || a.width() != b.width()) {
        throw ShapeError(std::string(what) + ": shape mismatch " + std::to_string(a.height()) +
                         "x" + std::to_string(a.width()) + " vs " + std::to_string(b.height()) +
                         "x" + std::to_string(b.width()));
    }
}

} // namespace novo
