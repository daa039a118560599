#pragma once

// Straight-from-definition reference implementations used as test oracles.
// Nothing here calls into the library's algorithms beyond the container types.

#include "novo/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

using novo::BinaryMask;
using novo::DenseMap;

inline DenseMap random_map(std::mt19937_64& rng, int h, int w, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(static_cast<std::size_t>(h) * w);
    for (auto& x : v) {
        x = u(rng);
    }
    return DenseMap(h, w, std::move(v));
}

inline BinaryMask random_mask(std::mt19937_64& rng, int h, int w, double p = 0.5) {
    std::bernoulli_distribution b(p);
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(h) * w);
    for (auto& x : bits) {
        x = b(rng) ? 1 : 0;
    }
    return BinaryMask(h, w, std::move(bits));
}

/// Random blob-like mask: union of a few random axis-aligned rectangles and discs.
inline BinaryMask random_blobs(std::mt19937_64& rng, int h, int w, int blobs = 3) {
    BinaryMask m(h, w);
    std::uniform_int_distribution<int> yy(0, h - 1), xx(0, w - 1);
    std::uniform_int_distribution<int> rr(2, std::max(3, std::min(h, w) / 4));
    for (int b = 0; b < blobs; ++b) {
        const int cy = yy(rng), cx = xx(rng), r = rr(rng);
        const bool disc = (rng() & 1) != 0;
        for (int y = std::max(0, cy - r); y <= std::min(h - 1, cy + r); ++y) {
            for (int x = std::max(0, cx - r); x <= std::min(w - 1, cx + r); ++x) {
                if (!disc || (y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r) {
                    m.set(y, x);
                }
            }
        }
    }
    return m;
}

inline BinaryMask rect(int h, int w, int top, int left, int rh, int rw) {
    BinaryMask m(h, w);
    for (int y = top; y < top + rh; ++y) {
        for (int x = left; x < left + rw; ++x) {
            if (m.contains(y, x)) {
                m.set(y, x);
            }
        }
    }
    return m;
}

/// Bilinear value as a sum of hat-function weights over every source pixel.
inline DenseMap bilinear_reference(const DenseMap& in, int out_h, int out_w) {
    DenseMap out(out_h, out_w);
    for (int y = 0; y < out_h; ++y) {
        double sy = (y + 0.5) * in.height() / static_cast<double>(out_h) - 0.5;
        sy = std::min(std::max(sy, 0.0), in.height() - 1.0);
        for (int x = 0; x < out_w; ++x) {
            double sx = (x + 0.5) * in.width() / static_cast<double>(out_w) - 0.5;
            sx = std::min(std::max(sx, 0.0), in.width() - 1.0);
            double acc = 0.0;
            for (int i = 0; i < in.height(); ++i) {
                const double wy = std::max(0.0, 1.0 - std::abs(sy - i));
                if (wy == 0.0) {
                    continue;
                }
                for (int j = 0; j < in.width(); ++j) {
                    const double wx = std::max(0.0, 1.0 - std::abs(sx - j));
                    acc += in(i, j) * wy * wx;
                }
            }
            out(y, x) = acc;
        }
    }
    return out;
}

inline std::size_t count(const BinaryMask& m) {
    std::size_t n = 0;
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            n += m(y, x) ? 1 : 0;
        }
    }
    return n;
}

inline double iou(const BinaryMask& a, const BinaryMask& b) {
    std::size_t i = 0, u = 0;
    for (int y = 0; y < a.height(); ++y) {
        for (int x = 0; x < a.width(); ++x) {
            i += (a(y, x) && b(y, x)) ? 1 : 0;
            u += (a(y, x) || b(y, x)) ? 1 : 0;
        }
    }
    return u == 0 ? 1.0 : static_cast<double>(i) / static_cast<double>(u);
}

/// Erosion by scanning the disk around every pixel; outside the image is background.
inline BinaryMask erode(const BinaryMask& m, int r) {
    BinaryMask out(m.height(), m.width());
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            bool keep = m(y, x);
            for (int dy = -r; dy <= r && keep; ++dy) {
                for (int dx = -r; dx <= r && keep; ++dx) {
                    if (dy * dy + dx * dx > r * r) {
                        continue;
                    }
                    const int ny = y + dy, nx = x + dx;
                    if (!m.contains(ny, nx) || !m(ny, nx)) {
                        keep = false;
                    }
                }
            }
            out.set(y, x, keep);
        }
    }
    return out;
}

inline BinaryMask dilate(const BinaryMask& m, int r) {
    BinaryMask out(m.height(), m.width());
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            bool hit = false;
            for (int dy = -r; dy <= r && !hit; ++dy) {
                for (int dx = -r; dx <= r && !hit; ++dx) {
                    const int ny = y + dy, nx = x + dx;
                    hit = dy * dy + dx * dx <= r * r && m.contains(ny, nx) && m(ny, nx);
                }
            }
            out.set(y, x, hit);
        }
    }
    return out;
}

inline BinaryMask band(const BinaryMask& m, int d) {
    const BinaryMask e = erode(m, d);
    BinaryMask out(m.height(), m.width());
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            out.set(y, x, m(y, x) && !e(y, x));
        }
    }
    return out;
}

inline double boundary_iou(const BinaryMask& p, const BinaryMask& g, int d) {
    return oracle::iou(band(p, d), band(g, d));
}

/// Fraction of `from` pixels with some `to` pixel within Euclidean distance d (O(n·m)).
inline double matched_fraction(const BinaryMask& from, const BinaryMask& to, int d) {
    std::vector<std::pair<int, int>> targets;
    for (int y = 0; y < to.height(); ++y) {
        for (int x = 0; x < to.width(); ++x) {
            if (to(y, x)) {
                targets.emplace_back(y, x);
            }
        }
    }
    std::size_t total = 0, hit = 0;
    for (int y = 0; y < from.height(); ++y) {
        for (int x = 0; x < from.width(); ++x) {
            if (!from(y, x)) {
                continue;
            }
            ++total;
            for (const auto& [ty, tx] : targets) {
                if ((ty - y) * (ty - y) + (tx - x) * (tx - x) <= d * d) {
                    ++hit;
                    break;
                }
            }
        }
    }
    return total == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(total);
}

inline double boundary_f1(const BinaryMask& p, const BinaryMask& g, int d) {
    const BinaryMask pc = band(p, 1);
    const BinaryMask gc = band(g, 1);
    const std::size_t np = count(pc), ng = count(gc);
    if (np == 0 && ng == 0) {
        return 1.0;
    }
    if (np == 0 || ng == 0) {
        return 0.0;
    }
    const double prec = matched_fraction(pc, gc, d);
    const double rec = matched_fraction(gc, pc, d);
    return prec + rec > 0.0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
}

/// Central finite difference of a scalar function over a parameter vector.
template <typename F>
std::vector<double> numeric_gradient(std::vector<double> params, F&& f, double step = 1e-4) {
    std::vector<double> g(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double orig = params[i];
        params[i] = orig + step;
        const double up = f(params);
        params[i] = orig - step;
        const double down = f(params);
        params[i] = orig;
        g[i] = (up - down) / (2.0 * step);
    }
    return g;
}

/// max_i |a_i − b_i| / max(|a_i|, |b_i|, floor).
inline double max_relative_error(const std::vector<double>& a, const std::vector<double>& b,
                                 double floor = 1e-3) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double scale = std::max({std::abs(a[i]), std::abs(b[i]), floor});
        worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
    }
    return worst;
}

} // namespace oracle
