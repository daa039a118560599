#include "novo/morphology.hpp"

#include <algorithm>
#include <limits>

namespace novo {

namespace {

constexpr std::int64_t kFar = std::numeric_limits<std::int64_t>::max() / 4;

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher) along one line.
void distance_1d(const std::int64_t* f, std::int64_t* d, int n, std::vector<int>& v,
                 std::vector<double>& z) {
    v.resize(static_cast<std::size_t>(n));
    z.resize(static_cast<std::size_t>(n) + 1);
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (f[q] >= kFar) {
            continue;
        }
        double s = 0.0;
        while (k >= 0) {
            const int p = v[k];
            s = (static_cast<double>(f[q] + std::int64_t{q} * q) -
                 static_cast<double>(f[p] + std::int64_t{p} * p)) /
                (2.0 * (q - p));
            if (s <= z[k]) {
                --k;
            } else {
                break;
            }
        }
        ++k;
        v[k] = q;
        z[k] = k == 0 ? -std::numeric_limits<double>::infinity() : s;
        z[k + 1] = std::numeric_limits<double>::infinity();
    }
    if (k < 0) {
        for (int q = 0; q < n; ++q) {
            d[q] = kFar;
        }
        return;
    }
    int j = 0;
    for (int q = 0; q < n; ++q) {
        while (z[j + 1] < q) {
            ++j;
        }
        const std::int64_t dq = q - v[j];
        d[q] = dq * dq + f[v[j]];
    }
}

} // namespace

std::vector<std::int64_t> squared_distance_transform(const BinaryMask& features) {
    const int h = features.height();
    const int w = features.width();
    std::vector<std::int64_t> grid(features.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        grid[k] = features[k] ? 0 : kFar;
    }
    std::vector<int> v;
    std::vector<double> z;
    std::vector<std::int64_t> line_in(static_cast<std::size_t>(std::max(h, w)));
    std::vector<std::int64_t> line_out(line_in.size());

    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) {
            line_in[y] = grid[static_cast<std::size_t>(y) * w + x];
        }
        distance_1d(line_in.data(), line_out.data(), h, v, z);
        for (int y = 0; y < h; ++y) {
            grid[static_cast<std::size_t>(y) * w + x] = line_out[y];
        }
    }
    for (int y = 0; y < h; ++y) {
        std::int64_t* row = grid.data() + static_cast<std::size_t>(y) * w;
        std::copy(row, row + w, line_in.begin());
        distance_1d(line_in.data(), row, w, v, z);
    }
    return grid;
}

BinaryMask erode_disk(const BinaryMask& mask, int radius) {
    if (radius < 0) {
        throw ValueError("erode_disk: radius must be >= 0");
    }
    if (radius == 0) {
        return mask;
    }
    // Background plus a one-pixel frame standing in for everything outside the image.
    const int h = mask.height() + 2;
    const int w = mask.width() + 2;
    BinaryMask background(h, w, true);
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            background.set(y + 1, x + 1, !mask(y, x));
        }
    }
    const auto dist = squared_distance_transform(background);
    const std::int64_t r2 = std::int64_t{radius} * radius;
    BinaryMask out(mask.height(), mask.width());
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            out.set(y, x, dist[static_cast<std::size_t>(y + 1) * w + (x + 1)] > r2);
        }
    }
    return out;
}

BinaryMask dilate_disk(const BinaryMask& mask, int radius) {
    if (radius < 0) {
        throw ValueError("dilate_disk: radius must be >= 0");
    }
    if (radius == 0) {
        return mask;
    }
    const auto dist = squared_distance_transform(mask);
    const std::int64_t r2 = std::int64_t{radius} * radius;
    BinaryMask out(mask.height(), mask.width());
    for (std::size_t k = 0; k < dist.size(); ++k) {
        out.set(k, dist[k] <= r2);
    }
    return out;
}

BinaryMask boundary_band(const BinaryMask& mask, int width) {
    if (width < 1) {
        throw ValueError("boundary_band: width must be >= 1");
    }
    return mask_difference(mask, erode_disk(mask, width));
}

BinaryMask contour(const BinaryMask& mask) { return boundary_band(mask, 1); }

} // namespace novo
