#include "novo/prompt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace novo {

EmbeddingSet::EmbeddingSet(std::vector<double> patches, std::vector<double> seg, int dim)
    : patches_(std::move(patches)), seg_(std::move(seg)), dim_(dim) {
    if (dim_ < 1) {
        throw ShapeError("EmbeddingSet: embedding dimension must be >= 1");
    }
    if (seg_.size() != static_cast<std::size_t>(dim_)) {
        throw ShapeError("EmbeddingSet: segmentation embedding has " + std::to_string(seg_.size()) +
                         " components, expected " + std::to_string(dim_));
    }
    if (patches_.empty() || patches_.size() % static_cast<std::size_t>(dim_) != 0) {
        throw ShapeError("EmbeddingSet: patch buffer of " + std::to_string(patches_.size()) +
                         " values is not a nonzero multiple of " + std::to_string(dim_));
    }
    patch_count_ = static_cast<int>(patches_.size() / static_cast<std::size_t>(dim_));
    grid_side_ = static_cast<int>(std::lround(std::sqrt(static_cast<double>(patch_count_))));
    if (grid_side_ * grid_side_ != patch_count_) {
        throw ShapeError("EmbeddingSet: patch count " + std::to_string(patch_count_) +
                         " is not a perfect square");
    }
    const auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(patches_.begin(), patches_.end(), finite) ||
        !std::all_of(seg_.begin(), seg_.end(), finite)) {
        throw ValueError("EmbeddingSet: non-finite embedding component");
    }
}

SimilarityResult similarity_map(const EmbeddingSet& emb) {
    const auto seg = emb.seg_embedding();
    const double seg_norm = std::sqrt(std::inner_product(seg.begin(), seg.end(), seg.begin(), 0.0));
    const int side = emb.grid_side();
    SimilarityResult result{DenseMap(side, side), false};
    for (int k = 0; k < emb.patch_count(); ++k) {
        const auto p = emb.patch(k);
        const double dot = std::inner_product(seg.begin(), seg.end(), p.begin(), 0.0);
        const double p_norm = std::sqrt(std::inner_product(p.begin(), p.end(), p.begin(), 0.0));
        if (seg_norm == 0.0 || p_norm == 0.0) {
            result.degenerate = true;
            result.map[static_cast<std::size_t>(k)] = 0.0;
            continue;
        }
        result.map[static_cast<std::size_t>(k)] = std::clamp(dot / (seg_norm * p_norm), -1.0, 1.0);
    }
    return result;
}

DenseMap make_mask_prompt(const DenseMap& sim, int prompt_side) {
    if (sim.height() != sim.width()) {
        throw ShapeError("make_mask_prompt: similarity map must be square");
    }
    return bilinear_resize(sim, prompt_side, prompt_side);
}

std::vector<PointPrompt> sample_points(const DenseMap& sim, int k_pos, int k_neg, int image_h,
                                       int image_w) {
    const int n = static_cast<int>(sim.size());
    if (k_pos < 0 || k_neg < 0) {
        throw ValueError("sample_points: point counts must be non-negative");
    }
    if (k_pos + k_neg > n) {
        throw ValueError("sample_points: requested " + std::to_string(k_pos + k_neg) +
                         " points from " + std::to_string(n) + " patches");
    }
    if (image_h < sim.height() || image_w < sim.width()) {
        throw ShapeError("sample_points: image is smaller than the patch grid");
    }

    // One total order: score descending, then row-major index ascending.
    // Negatives are the tail of the same order so the two sets never collide.
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return sim[static_cast<std::size_t>(a)] > sim[static_cast<std::size_t>(b)]; });

    const auto to_point = [&](int k, Polarity polarity) {
        const int r = k / sim.width();
        const int c = k % sim.width();
        PointPrompt p;
        p.y = static_cast<int>(std::floor((r + 0.5) * image_h / sim.height()));
        p.x = static_cast<int>(std::floor((c + 0.5) * image_w / sim.width()));
        p.polarity = polarity;
        p.source_score = sim[static_cast<std::size_t>(k)];
        return p;
    };

    std::vector<PointPrompt> points;
    points.reserve(static_cast<std::size_t>(k_pos + k_neg));
    for (int i = 0; i < k_pos; ++i) {
        points.push_back(to_point(order[static_cast<std::size_t>(i)], Polarity::positive));
    }
    for (int i = 0; i < k_neg; ++i) {
        points.push_back(to_point(order[static_cast<std::size_t>(n - 1 - i)], Polarity::negative));
    }
    return points;
}

const char* to_string(PromptTypes t) {
    switch (t) {
    case PromptTypes::mask_only:
        return "mask-only";
    case PromptTypes::point_only:
        return "point-only";
    case PromptTypes::both:
        return "both";
    }
    return "unknown";
}

PromptTypes parse_prompt_types(const std::string& s) {
    if (s == "mask" || s == "mask-only") {
        return PromptTypes::mask_only;
    }
    if (s == "point" || s == "point-only") {
        return PromptTypes::point_only;
    }
    if (s == "both" || s == "mask,point" || s == "point,mask") {
        return PromptTypes::both;
    }
    throw ValueError("unknown prompt types '" + s + "' (expected mask-only, point-only or both)");
}

PromptBuildResult build_prompts(const EmbeddingSet& emb, int image_h, int image_w,
                                const PromptConfig& cfg) {
    auto sim = similarity_map(emb);
    PromptBuildResult out;
    out.degenerate = sim.degenerate;
    if (cfg.types != PromptTypes::point_only) {
        out.bundle.mask_prompt = make_mask_prompt(sim.map, cfg.prompt_side);
    }
    if (cfg.types != PromptTypes::mask_only) {
        out.bundle.points = sample_points(sim.map, cfg.k_pos, cfg.k_neg, image_h, image_w);
    }
    return out;
}

} // namespace novo
