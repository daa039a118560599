#pragma once

#include "novo/tensor.hpp"

#include <cstdint>
#include <vector>

namespace novo {

/// Exact squared Euclidean distance from every pixel to the nearest true pixel
/// of `features`. Pixels with no feature at all get a large sentinel.
std::vector<std::int64_t> squared_distance_transform(const BinaryMask& features);

/// Erosion by the digital disk {(dy,dx) : dy²+dx² ≤ r²}. Pixels outside the
/// image count as background, so content touching the border erodes from it.
BinaryMask erode_disk(const BinaryMask& mask, int radius);

/// Dilation by the same disk, clipped to the image.
BinaryMask dilate_disk(const BinaryMask& mask, int radius);

/// Pixels of `mask` within `width` of its outside: mask \ erode_disk(mask, width).
BinaryMask boundary_band(const BinaryMask& mask, int width);

/// One-pixel inner contour (4-neighbour), i.e. boundary_band(mask, 1).
BinaryMask contour(const BinaryMask& mask);

} // namespace novo
