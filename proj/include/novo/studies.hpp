#pragma once

#include "novo/backend.hpp"
#include "novo/prompt.hpp"
#include "novo/refinement.hpp"
#include "novo/scene.hpp"

#include <cstdint>
#include <vector>

namespace novo {

/// Seeded desk-scale experiments over synthetic scenes. Each scene picks a
/// random nonempty subset of its objects as the ground-truth target.

struct SuiteSample {
    SyntheticScene scene;
    std::vector<int> targets;
    BinaryMask gt;
    std::uint64_t seed = 0;
};

/// Scene i is generated from a seed derived from (suite seed, i).
std::vector<SuiteSample> make_suite(std::uint64_t seed, int count, const SceneSpec& spec);

struct AblationSpec {
    std::uint64_t seed = 2024;
    int scenes = 50;
    SceneSpec scene;
    EmbeddingSynthSpec embedding;
    MockConfig mock;
    int k_pos = 3;
    int k_neg = 3;
    int jobs = 1;

    AblationSpec();
};

struct AblationRow {
    PromptTypes types = PromptTypes::both;
    double g_iou = 0.0;
    double c_iou = 0.0;
    std::vector<double> per_scene_iou;
};

/// One row per prompt configuration, ordered mask-only, point-only, both.
std::vector<AblationRow> run_prompt_ablation(const AblationSpec& spec);

struct RefinementStudySpec {
    std::uint64_t seed = 7;
    int scenes = 50;
    SceneSpec scene;
    DegradeSpec degrade;
    RefinementConfig refinement;
    MockConfig mock;
    int boundary_d = 3;
    int jobs = 1;

    RefinementStudySpec();
};

struct RefinementStudyScene {
    double iou_before = 0.0;
    double iou_after = 0.0;
    double biou_before = 0.0;
    double biou_after = 0.0;
    double bf1_before = 0.0;
    double bf1_after = 0.0;
    bool fallback_used = false;
    std::size_t instances = 0;
};

/// Reference logits are ±1 on a degraded copy of the ground truth; the
/// "before" prediction is that degraded mask and "after" is the refined one.
std::vector<RefinementStudyScene> run_refinement_study(const RefinementStudySpec& spec);

} // namespace novo
