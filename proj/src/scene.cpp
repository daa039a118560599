#include "novo/scene.hpp"

#include "novo/morphology.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace novo {

const char* to_string(ShapeKind k) {
    switch (k) {
    case ShapeKind::rectangle:
        return "rectangle";
    case ShapeKind::ellipse:
        return "ellipse";
    case ShapeKind::ring:
        return "ring";
    }
    return "unknown";
}

ShapeKind parse_shape_kind(const std::string& s) {
    if (s == "rectangle" || s == "rect") {
        return ShapeKind::rectangle;
    }
    if (s == "ellipse") {
        return ShapeKind::ellipse;
    }
    if (s == "ring") {
        return ShapeKind::ring;
    }
    throw ValueError("unknown shape kind '" + s + "'");
}

SyntheticScene::SyntheticScene(int height, int width, std::vector<int> labels)
    : height_(height), width_(width), labels_(std::move(labels)) {
    if (height < 1 || width < 1 ||
        labels_.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width)) {
        throw ShapeError("SyntheticScene: label buffer does not match " + std::to_string(height) +
                         "x" + std::to_string(width));
    }
    int max_label = 0;
    for (int v : labels_) {
        if (v < 0) {
            throw ValueError("SyntheticScene: negative label");
        }
        max_label = std::max(max_label, v);
    }
    objects_.assign(static_cast<std::size_t>(max_label), BinaryMask(height, width));
    for (std::size_t k = 0; k < labels_.size(); ++k) {
        if (labels_[k] > 0) {
            objects_[static_cast<std::size_t>(labels_[k] - 1)].set(k);
        }
    }
    for (int k = 1; k <= max_label; ++k) {
        if (!objects_[static_cast<std::size_t>(k - 1)].any()) {
            throw ValueError("SyntheticScene: labels are not contiguous, label " + std::to_string(k) +
                             " is missing");
        }
    }
}

BinaryMask SyntheticScene::union_of(const std::vector<int>& ids) const {
    BinaryMask out(height_, width_);
    for (int id : ids) {
        const auto& m = object(id);
        for (std::size_t k = 0; k < m.size(); ++k) {
            if (m[k]) {
                out.set(k);
            }
        }
    }
    return out;
}

SyntheticScene SyntheticScene::padded() const {
    const PadSpec spec = pad_spec_for(height_, width_);
    std::vector<int> labels(static_cast<std::size_t>(spec.padded_side) * spec.padded_side, 0);
    for (int y = 0; y < height_; ++y) {
        for (int x = 0; x < width_; ++x) {
            labels[static_cast<std::size_t>(y + spec.offset_y) * spec.padded_side + x + spec.offset_x] =
                label(y, x);
        }
    }
    return SyntheticScene(spec.padded_side, spec.padded_side, std::move(labels));
}

namespace {

// Rasterise a shape with its bounding box at (top, left) and side lengths (h, w).
BinaryMask rasterize(ShapeKind kind, int canvas_h, int canvas_w, int top, int left, int h, int w,
                     double ring_ratio) {
    BinaryMask m(canvas_h, canvas_w);
    const double cy = top + (h - 1) / 2.0;
    const double cx = left + (w - 1) / 2.0;
    const double ry = h / 2.0;
    const double rx = w / 2.0;
    for (int y = top; y < top + h; ++y) {
        for (int x = left; x < left + w; ++x) {
            bool inside = true;
            if (kind != ShapeKind::rectangle) {
                const double dy = (y - cy) / ry;
                const double dx = (x - cx) / rx;
                const double r2 = dy * dy + dx * dx;
                inside = r2 <= 1.0;
                if (kind == ShapeKind::ring) {
                    inside = inside && r2 > ring_ratio * ring_ratio;
                }
            }
            if (inside) {
                m.set(y, x);
            }
        }
    }
    return m;
}

int lattice_hits(const BinaryMask& m, int interval) {
    int hits = 0;
    for (int y = interval / 2; y < m.height(); y += interval) {
        for (int x = interval / 2; x < m.width(); x += interval) {
            hits += m(y, x) ? 1 : 0;
        }
    }
    return hits;
}

} // namespace

SyntheticScene scene_generate(std::uint64_t seed, const SceneSpec& spec) {
    if (spec.height < 1 || spec.width < 1 || spec.min_objects < 0 ||
        spec.max_objects < spec.min_objects || spec.kinds.empty() || spec.min_size < 3 ||
        spec.max_size < spec.min_size || spec.min_gap < 0) {
        throw ValueError("scene_generate: inconsistent scene spec");
    }
    std::mt19937_64 rng(seed);
    const auto uniform = [&rng](int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(rng);
    };

    const int count = uniform(spec.min_objects, spec.max_objects);
    std::vector<int> labels(static_cast<std::size_t>(spec.height) * spec.width, 0);
    BinaryMask occupied(spec.height, spec.width);

    for (int obj = 1; obj <= count; ++obj) {
        bool placed = false;
        for (int attempt = 0; attempt < spec.max_attempts && !placed; ++attempt) {
            const ShapeKind kind = spec.kinds[static_cast<std::size_t>(
                uniform(0, static_cast<int>(spec.kinds.size()) - 1))];
            const int h = uniform(spec.min_size, std::min(spec.max_size, spec.height));
            const int w = uniform(spec.min_size, std::min(spec.max_size, spec.width));
            if (h > spec.height || w > spec.width) {
                continue;
            }
            const int top = uniform(0, spec.height - h);
            const int left = uniform(0, spec.width - w);
            const double ring_ratio = std::uniform_real_distribution<double>(0.35, 0.55)(rng);
            BinaryMask shape = rasterize(kind, spec.height, spec.width, top, left, h, w, ring_ratio);
            if (!shape.any() || connected_components(shape).size() != 1) {
                continue;
            }
            if (spec.grid_interval > 0 && lattice_hits(shape, spec.grid_interval) < spec.min_grid_hits) {
                continue;
            }
            if (intersection_area(dilate_disk(shape, spec.min_gap), occupied) > 0) {
                continue;
            }
            for (std::size_t k = 0; k < shape.size(); ++k) {
                if (shape[k]) {
                    labels[k] = obj;
                    occupied.set(k);
                }
            }
            placed = true;
        }
        if (!placed) {
            throw ValueError("scene_generate: could not place object " + std::to_string(obj) + " of " +
                             std::to_string(count) + " after " + std::to_string(spec.max_attempts) +
                             " attempts");
        }
    }
    return SyntheticScene(spec.height, spec.width, std::move(labels));
}

namespace {

std::vector<double> random_direction(std::mt19937_64& rng, int dim) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(static_cast<std::size_t>(dim));
    double norm = 0.0;
    do {
        norm = 0.0;
        for (auto& c : v) {
            c = normal(rng);
            norm += c * c;
        }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (auto& c : v) {
        c /= norm;
    }
    return v;
}

} // namespace

EmbeddingSet synthesize_embeddings(const SyntheticScene& scene, const std::vector<int>& targets,
                                   const EmbeddingSynthSpec& spec, std::uint64_t seed) {
    if (scene.height() != scene.width()) {
        throw ShapeError("synthesize_embeddings: scene must be square (pad it first)");
    }
    if (spec.grid_side < 1 || spec.dim < 1 || scene.height() < spec.grid_side) {
        throw ValueError("synthesize_embeddings: invalid grid or dimension");
    }
    std::mt19937_64 rng(seed);
    const int dim = spec.dim;
    const auto target_dir = random_direction(rng, dim);
    const auto background_dir = random_direction(rng, dim);
    std::vector<std::vector<double>> object_dirs;
    for (int k = 0; k < scene.object_count(); ++k) {
        object_dirs.push_back(random_direction(rng, dim));
    }
    std::vector<bool> is_target(static_cast<std::size_t>(scene.object_count()) + 1, false);
    for (int t : targets) {
        if (t < 1 || t > scene.object_count()) {
            throw ValueError("synthesize_embeddings: target label out of range");
        }
        is_target[static_cast<std::size_t>(t)] = true;
    }

    const int g = spec.grid_side;
    const int side = scene.height();
    const double component_sigma = 1.0 / std::sqrt(static_cast<double>(dim));
    std::normal_distribution<double> patch_noise(0.0, spec.patch_noise * component_sigma);
    std::normal_distribution<double> seg_noise(0.0, spec.seg_noise * component_sigma);

    std::vector<double> patches(static_cast<std::size_t>(g) * g * dim, 0.0);
    for (int r = 0; r < g; ++r) {
        const int y0 = r * side / g;
        const int y1 = (r + 1) * side / g;
        for (int c = 0; c < g; ++c) {
            const int x0 = c * side / g;
            const int x1 = (c + 1) * side / g;
            std::map<int, int> coverage;
            for (int y = y0; y < y1; ++y) {
                for (int x = x0; x < x1; ++x) {
                    ++coverage[scene.label(y, x)];
                }
            }
            const double total = static_cast<double>((y1 - y0) * (x1 - x0));
            double* out = patches.data() + (static_cast<std::size_t>(r) * g + c) * dim;
            for (const auto& [label, n] : coverage) {
                const auto& dir = label == 0                          ? background_dir
                                  : is_target[static_cast<std::size_t>(label)] ? target_dir
                                                                      : object_dirs[static_cast<std::size_t>(label - 1)];
                for (int i = 0; i < dim; ++i) {
                    out[i] += dir[static_cast<std::size_t>(i)] * (n / total);
                }
            }
            for (int i = 0; i < dim; ++i) {
                out[i] += patch_noise(rng);
            }
        }
    }
    std::vector<double> seg = target_dir;
    for (auto& v : seg) {
        v += seg_noise(rng);
    }
    return EmbeddingSet(std::move(patches), std::move(seg), dim);
}

namespace {

DenseMap smooth_field(int h, int w, int cell, double amplitude, std::mt19937_64& rng) {
    const int gh = std::max(2, h / std::max(1, cell) + 2);
    const int gw = std::max(2, w / std::max(1, cell) + 2);
    std::uniform_real_distribution<double> u(-amplitude, amplitude);
    DenseMap coarse(gh, gw);
    for (auto& v : coarse.values()) {
        v = u(rng);
    }
    return bilinear_resize(coarse, h, w);
}

} // namespace

BinaryMask degrade_mask(const BinaryMask& mask, const DegradeSpec& spec, std::uint64_t seed) {
    if (spec.min_holes < 0 || spec.max_holes < spec.min_holes || spec.hole_radius_min < 1 ||
        spec.hole_radius_max < spec.hole_radius_min || spec.jitter < 0.0) {
        throw ValueError("degrade_mask: inconsistent degrade spec");
    }
    std::mt19937_64 rng(seed);
    const int h = mask.height();
    const int w = mask.width();

    // Signed distance with the zero level between pixel centres, displaced by a
    // smooth random field.
    BinaryMask background(h, w);
    for (std::size_t k = 0; k < mask.size(); ++k) {
        background.set(k, !mask[k]);
    }
    const auto to_bg = squared_distance_transform(background);
    const auto to_fg = squared_distance_transform(mask);
    const DenseMap field = smooth_field(h, w, spec.jitter_cell, spec.jitter, rng);
    BinaryMask out(h, w);
    for (std::size_t k = 0; k < mask.size(); ++k) {
        const double s = mask[k] ? std::sqrt(static_cast<double>(to_bg[k])) - 0.5
                                 : -(std::sqrt(static_cast<double>(to_fg[k])) - 0.5);
        out.set(k, s + field[k] > 0.0);
    }

    std::uniform_int_distribution<int> n_holes(spec.min_holes, spec.max_holes);
    std::uniform_int_distribution<int> radius(spec.hole_radius_min, spec.hole_radius_max);
    for (const auto& component : connected_components(mask)) {
        const int holes = n_holes(rng);
        for (int i = 0; i < holes; ++i) {
            const int r = radius(rng);
            // Holes stay strictly interior so they add boundary instead of notching it.
            const BinaryMask interior = erode_disk(component, r + 2);
            std::vector<std::size_t> candidates;
            for (std::size_t k = 0; k < interior.size(); ++k) {
                if (interior[k]) {
                    candidates.push_back(k);
                }
            }
            if (candidates.empty()) {
                continue;
            }
            const std::size_t centre =
                candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng)];
            const int cy = static_cast<int>(centre / static_cast<std::size_t>(w));
            const int cx = static_cast<int>(centre % static_cast<std::size_t>(w));
            for (int y = cy - r; y <= cy + r; ++y) {
                for (int x = cx - r; x <= cx + r; ++x) {
                    if (out.contains(y, x) && (y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r) {
                        out.set(y, x, false);
                    }
                }
            }
        }
    }
    return out;
}

DenseMap logits_from_mask(const BinaryMask& mask, double value) {
    DenseMap out(mask.height(), mask.width(), -value);
    for (std::size_t k = 0; k < mask.size(); ++k) {
        if (mask[k]) {
            out[k] = value;
        }
    }
    return out;
}

} // namespace novo
