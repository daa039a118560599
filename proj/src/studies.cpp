#include "novo/studies.hpp"

#include "novo/metrics.hpp"
#include "novo/parallel.hpp"

#include <random>

namespace novo {

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index)};
    std::mt19937_64 rng(seq);
    return rng();
}

} // namespace

std::vector<SuiteSample> make_suite(std::uint64_t seed, int count, const SceneSpec& spec) {
    std::vector<SuiteSample> suite;
    for (int i = 0; i < count; ++i) {
        SuiteSample s{scene_generate(derive_seed(seed, static_cast<std::uint64_t>(i)), spec), {}, {}, 0};
        s.seed = derive_seed(seed ^ 0x9e3779b97f4a7c15ULL, static_cast<std::uint64_t>(i));
        std::mt19937_64 rng(s.seed);
        const int n = s.scene.object_count();
        if (n > 0) {
            // Uniform nonempty subset.
            const std::uint64_t mask =
                std::uniform_int_distribution<std::uint64_t>(1, (std::uint64_t{1} << n) - 1)(rng);
            for (int k = 0; k < n; ++k) {
                if (mask & (std::uint64_t{1} << k)) {
                    s.targets.push_back(k + 1);
                }
            }
        }
        s.gt = s.scene.union_of(s.targets);
        suite.push_back(std::move(s));
    }
    return suite;
}

AblationSpec::AblationSpec() {
    scene.height = 144;
    scene.width = 192;
    scene.min_objects = 3;
    scene.max_objects = 6;
    scene.min_size = 16;
    scene.max_size = 48;
    scene.min_gap = 4;
    mock.noise.logit_sigma = 0.5;
    mock.noise.seed = 11;
}

std::vector<AblationRow> run_prompt_ablation(const AblationSpec& spec) {
    const auto suite = make_suite(spec.seed, spec.scenes, spec.scene);
    const PromptTypes order[3] = {PromptTypes::mask_only, PromptTypes::point_only, PromptTypes::both};
    std::vector<AblationRow> rows(3);
    std::vector<std::vector<MaskPair>> pairs(3, std::vector<MaskPair>(suite.size()));

    parallel_for(suite.size(), spec.jobs, [&](std::size_t i) {
        const auto& sample = suite[i];
        const SyntheticScene padded = sample.scene.padded();
        const EmbeddingSet emb =
            synthesize_embeddings(padded, sample.targets, spec.embedding, sample.seed);
        const MockBackend backend(sample.scene, spec.mock);
        const PadSpec pad = pad_spec_for(sample.scene.height(), sample.scene.width());
        for (int r = 0; r < 3; ++r) {
            PromptConfig cfg;
            cfg.types = order[r];
            cfg.k_pos = spec.k_pos;
            cfg.k_neg = spec.k_neg;
            BackendRequest request{"scene_" + std::to_string(i),
                                   build_prompts(emb, padded.height(), padded.width(), cfg).bundle};
            const auto response = backend.query(request);
            const BinaryMask pred = unpad(reference_mask(*response.logits, 0.0), pad);
            pairs[static_cast<std::size_t>(r)][i] = MaskPair{pred, sample.gt};
        }
    });

    for (int r = 0; r < 3; ++r) {
        auto& row = rows[static_cast<std::size_t>(r)];
        row.types = order[r];
        for (const auto& [pred, gt] : pairs[static_cast<std::size_t>(r)]) {
            row.per_scene_iou.push_back(iou(pred, gt));
        }
        row.g_iou = g_iou(pairs[static_cast<std::size_t>(r)]);
        row.c_iou = c_iou(pairs[static_cast<std::size_t>(r)]);
    }
    return rows;
}

RefinementStudySpec::RefinementStudySpec() {
    scene.height = 160;
    scene.width = 208;
    scene.min_objects = 3;
    scene.max_objects = 6;
    scene.min_size = 32;
    scene.max_size = 56;
    scene.min_gap = 6;
    scene.grid_interval = refinement.grid_interval;
    scene.min_grid_hits = 4;
}

std::vector<RefinementStudyScene> run_refinement_study(const RefinementStudySpec& spec) {
    const auto suite = make_suite(spec.seed, spec.scenes, spec.scene);
    std::vector<RefinementStudyScene> out(suite.size());
    parallel_for(suite.size(), spec.jobs, [&](std::size_t i) {
        const auto& sample = suite[i];
        const auto [gt_padded, pad] = pad_to_square(sample.gt);
        const BinaryMask degraded = degrade_mask(gt_padded, spec.degrade, sample.seed);
        const DenseMap logits = logits_from_mask(degraded, 1.0);
        const MockBackend backend(sample.scene, spec.mock);
        const auto result = refine(logits, backend, "scene_" + std::to_string(i), spec.refinement);

        const BinaryMask before = unpad(degraded, pad);
        const BinaryMask after = unpad(result.semantic_mask, pad);
        auto& s = out[i];
        s.iou_before = iou(before, sample.gt);
        s.iou_after = iou(after, sample.gt);
        s.biou_before = boundary_iou(before, sample.gt, spec.boundary_d);
        s.biou_after = boundary_iou(after, sample.gt, spec.boundary_d);
        s.bf1_before = boundary_f1(before, sample.gt, spec.boundary_d);
        s.bf1_after = boundary_f1(after, sample.gt, spec.boundary_d);
        s.fallback_used = result.fallback_used;
        s.instances = result.instances.size();
    });
    return out;
}

} // namespace novo
