// novo: command-line front end for prompt generation, segmentation backends,
// refinement, evaluation and the desk-scale studies. See docs/cli.md.

#include "novo/backend.hpp"
#include "novo/io.hpp"
#include "novo/losses.hpp"
#include "novo/metrics.hpp"
#include "novo/parallel.hpp"
#include "novo/prompt.hpp"
#include "novo/refinement.hpp"
#include "novo/scene.hpp"
#include "novo/studies.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace novo;

namespace {

constexpr const char* kToolVersion = "1.0.0";

enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kUsage = 2,
    kIo = 3,
    kFormat = 4,
    kNotFound = 5,
    kValidation = 6,
    kCheckFailed = 7,
};

/// Raised for inconsistent flag combinations; carries remediation text.
class UsageError : public Error {
  public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// provenance and report writing

/// Effective configuration of the running subcommand: every option with its
/// parsed or default value. The output location is not part of it.
KeyValues effective_config(const CLI::App& sub) {
    KeyValues kv;
    for (const CLI::Option* opt : sub.get_options()) {
        const std::string name = opt->get_single_name();
        if (name.empty() || name == "help" || name == "out") {
            continue;
        }
        std::string value;
        if (opt->count() > 0) {
            const auto res = opt->reduced_results();
            for (std::size_t i = 0; i < res.size(); ++i) {
                value += (i ? "," : "") + res[i];
            }
        } else {
            value = opt->get_default_str();
        }
        kv.emplace_back(name, value);
    }
    std::sort(kv.begin(), kv.end());
    return kv;
}

KeyValues provenance(const std::string& command, const KeyValues& config) {
    KeyValues kv{
        {"tool", "novo"},
        {"tool_version", kToolVersion},
        {"command", command},
        {"format.tensor", "NVT1"},
        {"format.rle", "coco-uncompressed-colmajor"},
        {"format.points", "1"},
        {"format.instances", "1"},
        {"format.manifest", "1"},
        {"format.replay_index", "1"},
        {"format.report", "1"},
    };
    for (const auto& [k, v] : config) {
        kv.emplace_back("config." + k, v);
    }
    return kv;
}

struct RunContext {
    std::string command;
    KeyValues config;

    KeyValues provenance_kv() const { return provenance(command, config); }

    json provenance_json() const {
        json j = json::object();
        for (const auto& [k, v] : provenance_kv()) {
            j[k] = v;
        }
        return j;
    }

    std::string provenance_comment() const {
        std::string out;
        for (const auto& [k, v] : provenance_kv()) {
            out += "# " + k + "=" + v + "\n";
        }
        return out;
    }

    /// Provenance for a directory output.
    void stamp_dir(const fs::path& dir) const {
        write_text_file(dir / "provenance.txt", format_key_values(provenance_kv()));
    }

    /// Provenance for a single-file output, written next to it.
    void stamp_file(const fs::path& file) const {
        write_text_file(file.string() + ".provenance.txt", format_key_values(provenance_kv()));
    }

    /// report.txt (provenance as comments, then metrics) and report.json.
    void write_report(const fs::path& dir, const KeyValues& metrics, json extra = json::object()) const {
        write_text_file(dir / "report.txt", provenance_comment() + format_key_values(metrics));
        json j = json::object();
        j["provenance"] = provenance_json();
        json m = json::object();
        for (const auto& [k, v] : metrics) {
            m[k] = v;
        }
        j["metrics"] = m;
        for (auto& [k, v] : extra.items()) {
            j[k] = v;
        }
        write_text_file(dir / "report.json", j.dump(2) + "\n");
    }
};

std::string fmt(double v) { return format_double(v); }

std::string fmt_opt(const std::optional<double>& v) { return v ? format_double(*v) : "n/a"; }

json json_opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        out += c == '"' ? std::string("\"\"") : std::string(1, c);
    }
    return out + "\"";
}

// ---------------------------------------------------------------------------
// shared option groups

struct BackendOptions {
    std::string kind = "mock";
    std::string scene;
    std::string store;
    double logit_magnitude = 4.0;
    double prompt_threshold = 0.5;
    double shape_overlap = 0.5;
    int erosion = 0;
    int dilation = 0;
    double logit_sigma = 0.0;
    std::uint64_t noise_seed = 0;

    void add_to(CLI::App* sub) {
        sub->add_option("--backend", kind, "Segmentation backend")->check(CLI::IsMember({"mock", "replay"}));
        sub->add_option("--scene", scene, "Mock backend: scene label tensor (u8 HxW .nvt)");
        sub->add_option("--store", store, "Replay backend: replay store root directory");
        sub->add_option("--logit-magnitude", logit_magnitude, "Mock: magnitude L of the +-L logits");
        sub->add_option("--prompt-threshold", prompt_threshold, "Mock: mask-prompt binarisation threshold");
        sub->add_option("--shape-overlap", shape_overlap, "Mock: covered fraction needed for a mask-prompt vote");
        sub->add_option("--erosion", erosion, "Mock: candidate erosion radius (px)");
        sub->add_option("--dilation", dilation, "Mock: candidate dilation radius (px)");
        sub->add_option("--logit-sigma", logit_sigma, "Mock: std-dev of additive logit noise");
        sub->add_option("--noise-seed", noise_seed, "Mock: noise seed");
    }

    MockConfig mock_config() const {
        MockConfig cfg;
        cfg.logit_magnitude = logit_magnitude;
        cfg.prompt_threshold = prompt_threshold;
        cfg.shape_overlap = shape_overlap;
        cfg.noise = MockNoise{erosion, dilation, logit_sigma, noise_seed};
        return cfg;
    }

    std::unique_ptr<SegmentationBackend> make() const {
        if (kind == "mock") {
            if (scene.empty()) {
                throw UsageError("--backend mock needs --scene <labels.nvt> (written by `novo synth`)");
            }
            if (!store.empty()) {
                throw UsageError("--store applies to --backend replay only; drop it or switch backends");
            }
            return std::make_unique<MockBackend>(scene_from_tensor(read_tensor(scene), scene), mock_config());
        }
        if (store.empty()) {
            throw UsageError("--backend replay needs --store <dir> (a replay store root)");
        }
        if (!scene.empty()) {
            throw UsageError("--scene applies to --backend mock only; drop it or switch backends");
        }
        return std::make_unique<ReplayBackend>(store);
    }
};

struct SceneOptions {
    SceneSpec spec;
    std::vector<std::string> kinds{"rectangle", "ellipse", "ring"};

    void add_to(CLI::App* sub) {
        sub->add_option("--height", spec.height, "Canvas height");
        sub->add_option("--width", spec.width, "Canvas width");
        sub->add_option("--min-objects", spec.min_objects, "Minimum objects per scene");
        sub->add_option("--max-objects", spec.max_objects, "Maximum objects per scene");
        sub->add_option("--kinds", kinds, "Shape kinds (rectangle, ellipse, ring)")->delimiter(',');
        sub->add_option("--min-size", spec.min_size, "Minimum shape bounding-box side");
        sub->add_option("--max-size", spec.max_size, "Maximum shape bounding-box side");
        sub->add_option("--min-gap", spec.min_gap, "Minimum background gap between shapes");
        sub->add_option("--grid-hits", spec.min_grid_hits, "Lattice points each shape must cover");
        sub->add_option("--hit-interval", spec.grid_interval, "Lattice spacing for --grid-hits (0 = off)");
    }

    SceneSpec resolve() const {
        SceneSpec s = spec;
        s.kinds.clear();
        for (const auto& k : kinds) {
            s.kinds.push_back(parse_shape_kind(k));
        }
        return s;
    }
};

struct EmbeddingOptions {
    EmbeddingSynthSpec spec;

    void add_to(CLI::App* sub) {
        sub->add_option("--grid-side", spec.grid_side, "Patch grid side of synthetic embeddings");
        sub->add_option("--dim", spec.dim, "Embedding dimension");
        sub->add_option("--patch-noise", spec.patch_noise, "Patch embedding noise std-dev");
        sub->add_option("--seg-noise", spec.seg_noise, "Segmentation-token noise std-dev");
    }
};

// ---------------------------------------------------------------------------
// subcommands

struct SynthArgs {
    std::uint64_t seed = 7;
    int scenes = 8;
    std::string out;
    SceneOptions scene;
    EmbeddingOptions embedding;
    DegradeSpec degrade;
    std::string split = "val";
    int jobs = 1;
};

/// Writes a self-contained synthetic dataset: per-scene labels, GT masks,
/// embeddings, oracle and degraded logits, plus a manifest.
int run_synth(const SynthArgs& a, const RunContext& ctx) {
    const fs::path out(a.out);
    fs::create_directories(out);
    const auto suite = make_suite(a.seed, a.scenes, a.scene.resolve());
    std::vector<SampleRecord> records(suite.size());

    parallel_for(suite.size(), a.jobs, [&](std::size_t i) {
        const auto& s = suite[i];
        char name[32];
        std::snprintf(name, sizeof name, "scene_%03zu", i);
        const fs::path dir = out / name;
        fs::create_directories(dir / "gt");
        write_tensor(dir / "labels.nvt", tensor_from_scene(s.scene));
        write_mask_png(dir / "gt.png", s.gt);

        SampleRecord& r = records[i];
        r.image_id = name;
        r.image_path = std::string(name) + "/labels.nvt";
        r.height = s.scene.height();
        r.width = s.scene.width();
        r.split = a.split;
        r.query = "objects";
        for (int t : s.targets) {
            const std::string ref = std::string(name) + "/gt/object_" + std::to_string(t) + ".png";
            write_mask_png(out / ref, s.scene.object(t));
            r.mask_refs.push_back(ref);
            r.query += " " + std::to_string(t);
        }

        const SyntheticScene padded = s.scene.padded();
        const PadSpec pad = pad_spec_for(s.scene.height(), s.scene.width());
        write_pad_spec(dir / "pad.txt", pad);
        write_tensor(dir / "embeddings.nvt",
                     tensor_from_embeddings(synthesize_embeddings(padded, s.targets, a.embedding.spec, s.seed)));
        const BinaryMask gt_padded = pad_to_square(s.gt).first;
        write_tensor(dir / "oracle_logits.nvt", tensor_from_map(logits_from_mask(gt_padded, 1.0)));
        const BinaryMask degraded = degrade_mask(gt_padded, a.degrade, s.seed);
        write_tensor(dir / "degraded_logits.nvt", tensor_from_map(logits_from_mask(degraded, 1.0)));
        write_mask_png(dir / "degraded.png", unpad(degraded, pad));
    });

    write_manifest(out / "manifest.tsv", records);
    ctx.stamp_dir(out);
    std::cout << "synth: wrote " << records.size() << " scenes to " << out.string() << "\n";
    return kOk;
}

struct PromptArgs {
    std::string embeddings;
    std::string canvas;
    std::string pad;
    std::string types = "both";
    int k_pos = 3;
    int k_neg = 3;
    int prompt_side = 256;
    std::string out;
};

int run_prompt(const PromptArgs& a, const RunContext& ctx) {
    if (a.canvas.empty() == a.pad.empty()) {
        throw UsageError("give exactly one of --canvas <HxW> or --pad <pad.txt> to fix the point coordinate frame");
    }
    int h = 0, w = 0;
    if (!a.pad.empty()) {
        const PadSpec spec = read_pad_spec(a.pad);
        h = w = spec.padded_side;
    } else {
        std::tie(h, w) = parse_dims(a.canvas);
    }
    const EmbeddingSet emb = embeddings_from_tensor(read_tensor(a.embeddings), a.embeddings);
    PromptConfig cfg;
    cfg.types = parse_prompt_types(a.types);
    cfg.k_pos = a.k_pos;
    cfg.k_neg = a.k_neg;
    cfg.prompt_side = a.prompt_side;
    const auto built = build_prompts(emb, h, w, cfg);
    const fs::path out(a.out);
    write_bundle(out, built.bundle);
    ctx.stamp_dir(out);
    if (built.degenerate) {
        std::cerr << "prompt: warning: zero-norm embedding(s), affected similarities set to 0\n";
    }
    std::cout << "prompt: " << to_string(cfg.types) << ", " << built.bundle.points.size() << " points -> "
              << out.string() << "\n";
    return kOk;
}

struct SegmentArgs {
    std::string bundle;
    std::string image_id;
    BackendOptions backend;
    std::string out;
};

int run_segment(const SegmentArgs& a, const RunContext& ctx) {
    const auto backend = a.backend.make();
    const PromptBundle bundle = read_bundle(a.bundle);
    const BackendResponse r = backend->query(BackendRequest{a.image_id, bundle});
    if (!r.logits) {
        throw FormatError(a.bundle, 0, "backend returned no logits for a prompt-segmentation request");
    }
    const fs::path out(a.out);
    if (out.has_parent_path()) {
        fs::create_directories(out.parent_path());
    }
    write_tensor(out, tensor_from_map(*r.logits));
    ctx.stamp_file(out);
    std::cout << "segment: " << r.logits->height() << "x" << r.logits->width() << " logits -> " << out.string()
              << "\n";
    return kOk;
}

struct RefineArgs {
    std::string logits;
    std::string image_id;
    BackendOptions backend;
    RefinementConfig cfg;
    std::string pad;
    std::string instances_format = "rle";
    std::string out;
};

int run_refine(const RefineArgs& a, const RunContext& ctx) {
    a.cfg.validate();
    const auto backend = a.backend.make();
    const DenseMap logits = map_from_tensor(read_tensor(a.logits), a.logits);
    const RefinementResult r = refine(logits, *backend, a.image_id, a.cfg);

    std::optional<PadSpec> pad;
    if (!a.pad.empty()) {
        pad = read_pad_spec(a.pad);
    }
    const auto restore = [&](const BinaryMask& m) { return pad ? unpad(m, *pad) : m; };

    const fs::path out(a.out);
    fs::create_directories(out);
    write_mask_png(out / "semantic.png", restore(r.semantic_mask));
    std::vector<ScoredMask> inst;
    for (const auto& i : r.instances) {
        inst.push_back({restore(i.mask), i.confidence});
    }
    write_instances(out / "instances.txt", inst, a.instances_format == "png");

    std::string scores, selected;
    for (std::size_t i = 0; i < r.per_candidate_scores.size(); ++i) {
        scores += (i ? "," : "") + fmt(r.per_candidate_scores[i]);
        selected += (i ? "," : "") + std::string(r.selected[i] ? "1" : "0");
    }
    const KeyValues metrics{
        {"points", std::to_string(r.points.size())},
        {"candidate_count", std::to_string(r.candidate_count)},
        {"selected_count", std::to_string(r.selected_count)},
        {"dropped_empty", std::to_string(r.dropped_empty)},
        {"dropped_duplicate", std::to_string(r.dropped_duplicate)},
        {"fallback_used", r.fallback_used ? "true" : "false"},
        {"instance_count", std::to_string(r.instances.size())},
        {"semantic_area", std::to_string(restore(r.semantic_mask).area())},
        {"scores", scores},
        {"selected", selected},
    };
    json extra = json::object();
    extra["per_candidate_scores"] = r.per_candidate_scores;
    json conf = json::array();
    for (const auto& i : r.instances) {
        conf.push_back(i.confidence);
    }
    extra["instance_confidences"] = conf;
    ctx.write_report(out, metrics, extra);
    ctx.stamp_dir(out);
    std::cout << "refine: " << r.selected_count << "/" << r.candidate_count << " candidates selected, "
              << r.instances.size() << " instance(s)" << (r.fallback_used ? ", fallback to reference mask" : "")
              << "\n";
    return kOk;
}

/// Samples in manifest order, optionally restricted to one split.
std::vector<SampleRecord> select_samples(const SampleManifest& m, const std::string& split) {
    std::vector<SampleRecord> out;
    for (const auto& s : m.samples) {
        if (split.empty() || s.split == split) {
            out.push_back(s);
        }
    }
    if (out.empty()) {
        throw ValidationError({"no samples" + (split.empty() ? std::string() : " in split '" + split + "'")});
    }
    return out;
}

/// id → reference, from a `id<TAB>ref` file; refs are relative to that file.
std::map<std::string, std::string> read_prediction_list(const fs::path& path) {
    std::map<std::string, std::string> out;
    std::istringstream in(read_text_file(path));
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw FormatError(path.string(), n, "expected 'image_id<TAB>prediction'");
        }
        const std::string ref = line.substr(tab + 1);
        const bool inline_ref = ref.rfind("rle:", 0) == 0 || fs::path(ref).is_absolute();
        out[line.substr(0, tab)] = inline_ref ? ref : (path.parent_path() / ref).string();
    }
    return out;
}

struct PredictionSource {
    std::string pred_dir;
    std::string pred_name;
    std::string predictions;

    void add_to(CLI::App* sub, const std::string& default_name) {
        pred_name = default_name;
        sub->add_option("--pred-dir", pred_dir, "Directory with one <image_id>/ subdirectory per sample");
        sub->add_option("--pred-name", pred_name, "File name inside each <image_id>/ directory");
        sub->add_option("--predictions", predictions, "Alternative: list file of 'image_id<TAB>path'");
    }

    /// Resolved path (or inline RLE) of the prediction for every sample.
    std::vector<std::string> resolve(const std::vector<SampleRecord>& samples) const {
        if (pred_dir.empty() == predictions.empty()) {
            throw UsageError("give exactly one of --pred-dir <dir> or --predictions <list.tsv>");
        }
        std::vector<std::string> out;
        std::vector<std::string> missing;
        std::map<std::string, std::string> listed;
        if (!predictions.empty()) {
            listed = read_prediction_list(predictions);
        }
        for (const auto& s : samples) {
            if (!pred_dir.empty()) {
                out.push_back((fs::path(pred_dir) / s.image_id / pred_name).string());
                continue;
            }
            const auto it = listed.find(s.image_id);
            if (it == listed.end()) {
                missing.push_back(s.image_id + ": no prediction listed");
                continue;
            }
            out.push_back(it->second);
        }
        if (!missing.empty()) {
            throw ValidationError(missing);
        }
        return out;
    }
};

void require_dims(const BinaryMask& m, const SampleRecord& s, const std::string& what) {
    if (m.height() != s.height || m.width() != s.width) {
        throw ShapeError(s.image_id + ": " + what + " is " + std::to_string(m.height()) + "x" +
                         std::to_string(m.width()) + ", manifest says " + std::to_string(s.height) + "x" +
                         std::to_string(s.width));
    }
}

struct EvalSemanticArgs {
    std::string manifest;
    PredictionSource preds;
    std::string split;
    int d = 3;
    int jobs = 1;
    std::string out;
};

int run_eval_semantic(const EvalSemanticArgs& a, const RunContext& ctx) {
    const SampleManifest manifest = load_manifest(a.manifest);
    const auto samples = select_samples(manifest, a.split);
    const auto refs = a.preds.resolve(samples);
    std::vector<MaskPair> pairs(samples.size());
    std::vector<std::string> ids(samples.size());
    parallel_for(samples.size(), a.jobs, [&](std::size_t i) {
        const auto& s = samples[i];
        ids[i] = s.image_id;
        BinaryMask gt(s.height, s.width);
        for (const auto& m : manifest.load_masks(s)) {
            require_dims(m, s, "ground-truth mask");
            gt = mask_union(gt, m);
        }
        BinaryMask pred = load_mask_ref(refs[i], ".");
        require_dims(pred, s, "prediction");
        pairs[i] = MaskPair{std::move(pred), std::move(gt)};
    });
    const SemanticEvalReport r = evaluate_semantic(ids, pairs, a.d, a.jobs);

    const fs::path out(a.out);
    fs::create_directories(out);
    const KeyValues metrics{
        {"n_samples", std::to_string(r.n_samples)},
        {"giou", fmt(r.g_iou)},
        {"ciou", fmt(r.c_iou)},
        {"boundary_iou", fmt(r.boundary_iou)},
        {"boundary_f1", fmt(r.boundary_f1)},
        {"boundary_d", std::to_string(r.boundary_d)},
        {"intersection_sum", std::to_string(r.intersection_sum)},
        {"union_sum", std::to_string(r.union_sum)},
        {"warnings", std::to_string(r.warnings.size())},
    };
    json extra = json::object();
    extra["warnings"] = r.warnings;
    json per = json::array();
    std::string csv = "image_id,iou,boundary_iou,boundary_f1,intersection,union\n";
    for (const auto& s : r.per_sample) {
        per.push_back({{"image_id", s.id},
                       {"iou", s.iou},
                       {"boundary_iou", s.boundary_iou},
                       {"boundary_f1", s.boundary_f1},
                       {"intersection", s.intersection},
                       {"union", s.union_}});
        csv += csv_field(s.id) + "," + fmt(s.iou) + "," + fmt(s.boundary_iou) + "," + fmt(s.boundary_f1) + "," +
               std::to_string(s.intersection) + "," + std::to_string(s.union_) + "\n";
    }
    extra["per_sample"] = per;
    ctx.write_report(out, metrics, extra);
    write_text_file(out / "per_sample.csv", csv);
    ctx.stamp_dir(out);
    for (const auto& w : r.warnings) {
        std::cerr << "eval-semantic: warning: " << w << "\n";
    }
    std::cout << "gIoU=" << fmt(r.g_iou) << " cIoU=" << fmt(r.c_iou) << " B-IoU=" << fmt(r.boundary_iou)
              << " B-F1=" << fmt(r.boundary_f1) << " (n=" << r.n_samples << ")\n";
    return kOk;
}

struct EvalInstanceArgs {
    std::string manifest;
    PredictionSource preds;
    std::string split;
    std::string interp = "coco101";
    int jobs = 1;
    std::string out;
};

int run_eval_instance(const EvalInstanceArgs& a, const RunContext& ctx) {
    const SampleManifest manifest = load_manifest(a.manifest);
    const auto samples = select_samples(manifest, a.split);
    const auto refs = a.preds.resolve(samples);
    std::vector<InstanceSet> preds(samples.size());
    std::vector<std::vector<BinaryMask>> gts(samples.size());
    parallel_for(samples.size(), a.jobs, [&](std::size_t i) {
        gts[i] = manifest.load_masks(samples[i]);
        for (const auto& g : gts[i]) {
            require_dims(g, samples[i], "ground-truth mask");
        }
        for (auto& sm : read_instances(refs[i])) {
            require_dims(sm.mask, samples[i], "predicted instance");
            preds[i].push_back(Instance{std::move(sm.mask), sm.confidence});
        }
    });
    const ApInterpolation interp = parse_ap_interpolation(a.interp);
    const InstanceEvalReport r = instance_ap(preds, gts, interp);

    const fs::path out(a.out);
    fs::create_directories(out);
    const KeyValues metrics{
        {"n_samples", std::to_string(samples.size())},
        {"gt_count", std::to_string(r.gt_count)},
        {"prediction_count", std::to_string(r.prediction_count)},
        {"interpolation", to_string(interp)},
        {"ap50", fmt(r.ap50)},
        {"ap75", fmt(r.ap75)},
        {"map", fmt(r.map)},
        {"ap_s", fmt_opt(r.ap_s)},
        {"ap_m", fmt_opt(r.ap_m)},
        {"ap_l", fmt_opt(r.ap_l)},
    };
    json extra = json::object();
    extra["ap_s"] = json_opt(r.ap_s);
    extra["ap_m"] = json_opt(r.ap_m);
    extra["ap_l"] = json_opt(r.ap_l);
    json curves = json::array();
    std::string csv = "iou_threshold,ap,true_positives,gt_count\n";
    for (std::size_t t = 0; t < r.curves.size(); ++t) {
        const auto& c = r.curves[t];
        curves.push_back({{"iou_threshold", c.iou_threshold},
                          {"ap", r.ap_per_threshold[t]},
                          {"precision", c.precision},
                          {"recall", c.recall}});
        csv += fmt(c.iou_threshold) + "," + fmt(r.ap_per_threshold[t]) + "," + std::to_string(c.true_positives) +
               "," + std::to_string(c.gt_count) + "\n";
    }
    extra["curves"] = curves;
    ctx.write_report(out, metrics, extra);
    write_text_file(out / "per_threshold.csv", csv);
    ctx.stamp_dir(out);
    std::cout << "AP50=" << fmt(r.ap50) << " AP75=" << fmt(r.ap75) << " mAP=" << fmt(r.map)
              << " AP-S=" << fmt_opt(r.ap_s) << " AP-M=" << fmt_opt(r.ap_m) << " AP-L=" << fmt_opt(r.ap_l) << "\n";
    return kOk;
}

struct LossCheckArgs {
    std::uint64_t seed = 1;
    int fixtures = 20;
    double step = 1e-4;
    double tolerance = 1e-4;
    std::string out;
};

template <typename F>
std::vector<double> central_difference(std::vector<double> x, double h, F&& f) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + h;
        const double up = f(x);
        x[i] = keep - h;
        const double down = f(x);
        x[i] = keep;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double scale = std::max({std::abs(a[i]), std::abs(b[i]), 1e-3});
        worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
    }
    return worst;
}

/// Finite-difference check of the three loss gradients on random fixtures.
int run_loss_check(const LossCheckArgs& a, const RunContext& ctx) {
    if (a.fixtures < 1 || !(a.step > 0.0) || !(a.tolerance > 0.0)) {
        throw ValueError("loss-check: --fixtures, --step and --tolerance must be positive");
    }
    std::mt19937_64 rng(a.seed);
    std::normal_distribution<double> normal(0.0, 1.5);
    double ce_err = 0.0, bce_err = 0.0, dice_err = 0.0;
    for (int f = 0; f < a.fixtures; ++f) {
        const int T = 1 + static_cast<int>(rng() % 8);
        const int V = 2 + static_cast<int>(rng() % 15);
        TokenSequence seq{T, V, {}, {}};
        for (int i = 0; i < T * V; ++i) {
            seq.logits.push_back(normal(rng));
        }
        for (int t = 0; t < T; ++t) {
            seq.targets.push_back(static_cast<int>(rng() % static_cast<std::uint64_t>(V)));
        }
        if (T > 1 && rng() % 2 == 0) {
            seq.targets[rng() % static_cast<std::uint64_t>(T)] = TokenSequence::kIgnoreIndex;
        }
        const auto ce_num = central_difference(seq.logits, a.step, [&](const std::vector<double>& p) {
            TokenSequence s = seq;
            s.logits = p;
            return ce_loss(s).value;
        });
        ce_err = std::max(ce_err, relative_error(ce_loss(seq).grad, ce_num));

        const int h = 1 + static_cast<int>(rng() % 16);
        const int w = 1 + static_cast<int>(rng() % 16);
        std::vector<double> s(static_cast<std::size_t>(h * w));
        std::vector<std::uint8_t> t(s.size());
        for (std::size_t k = 0; k < s.size(); ++k) {
            s[k] = normal(rng);
            t[k] = rng() % 2;
        }
        const DenseMap logits(h, w, s);
        const BinaryMask target(h, w, t);
        const auto bce_num = central_difference(s, a.step, [&](const std::vector<double>& p) {
            return bce_loss(DenseMap(h, w, p), target).value;
        });
        bce_err = std::max(bce_err, relative_error(bce_loss(logits, target).grad, bce_num));
        const auto dice_num = central_difference(s, a.step, [&](const std::vector<double>& p) {
            return dice_loss(DenseMap(h, w, p), target).value;
        });
        dice_err = std::max(dice_err, relative_error(dice_loss(logits, target).grad, dice_num));
    }
    const bool pass = ce_err <= a.tolerance && bce_err <= a.tolerance && dice_err <= a.tolerance;
    const KeyValues metrics{
        {"fixtures", std::to_string(a.fixtures)},
        {"ce_max_rel_err", fmt(ce_err)},
        {"bce_max_rel_err", fmt(bce_err)},
        {"dice_max_rel_err", fmt(dice_err)},
        {"tolerance", fmt(a.tolerance)},
        {"pass", pass ? "true" : "false"},
    };
    if (!a.out.empty()) {
        fs::create_directories(a.out);
        ctx.write_report(a.out, metrics);
        ctx.stamp_dir(a.out);
    }
    std::cout << format_key_values(metrics);
    return pass ? kOk : kCheckFailed;
}

struct AblateArgs {
    AblationSpec spec;
    SceneOptions scene;
    EmbeddingOptions embedding;
    std::string out;
};

int run_ablate(AblateArgs a, const RunContext& ctx) {
    a.spec.scene = a.scene.resolve();
    a.spec.embedding = a.embedding.spec;
    const auto rows = run_prompt_ablation(a.spec);

    KeyValues metrics{{"scenes", std::to_string(a.spec.scenes)}};
    json table = json::array();
    std::string csv = "scene";
    for (const auto& r : rows) {
        const std::string key = to_string(r.types);
        metrics.emplace_back(key + ".giou", fmt(r.g_iou));
        metrics.emplace_back(key + ".ciou", fmt(r.c_iou));
        table.push_back({{"prompts", key}, {"giou", r.g_iou}, {"ciou", r.c_iou}});
        csv += "," + key;
    }
    csv += "\n";
    for (std::size_t i = 0; i < rows[0].per_scene_iou.size(); ++i) {
        csv += std::to_string(i);
        for (const auto& r : rows) {
            csv += "," + fmt(r.per_scene_iou[i]);
        }
        csv += "\n";
    }
    json extra = json::object();
    extra["rows"] = table;

    std::cout << "prompts      gIoU      cIoU\n";
    for (const auto& r : rows) {
        char line[96];
        std::snprintf(line, sizeof line, "%-11s  %.4f    %.4f\n", to_string(r.types), r.g_iou, r.c_iou);
        std::cout << line;
    }
    if (!a.out.empty()) {
        fs::create_directories(a.out);
        ctx.write_report(a.out, metrics, extra);
        write_text_file(fs::path(a.out) / "per_scene.csv", csv);
        ctx.stamp_dir(a.out);
    }
    return kOk;
}

// ---------------------------------------------------------------------------
// argument plumbing

/// Moves `--config FILE` out of argv and expands the file's key=value lines
/// into `--key=value` tokens placed right after the subcommand name, ahead of
/// the user's own flags, so explicit flags override the file.
std::vector<std::string> expand_config(const std::vector<std::string>& args, const std::set<std::string>& subcommands,
                                       std::string& config_path) {
    std::vector<std::string> rest;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config") {
            if (i + 1 >= args.size()) {
                throw UsageError("--config needs a file argument");
            }
            config_path = args[++i];
        } else if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
        } else {
            rest.push_back(args[i]);
        }
    }
    if (config_path.empty()) {
        return rest;
    }
    const KeyValues kv = parse_key_values(read_text_file(config_path), config_path);
    const auto sub = std::find_if(rest.begin(), rest.end(), [&](const std::string& a) { return subcommands.count(a) > 0; });
    if (sub == rest.end()) {
        throw UsageError("--config needs a subcommand to apply to");
    }
    std::vector<std::string> injected;
    for (const auto& [k, v] : kv) {
        injected.push_back("--" + k + "=" + v);
    }
    rest.insert(sub + 1, injected.begin(), injected.end());
    return rest;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"novo: reasoning-segmentation engine (prompts, backends, refinement, evaluation)"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a seeded synthetic scene dataset");
    synth_cmd->add_option("--seed", synth.seed, "Dataset seed");
    synth_cmd->add_option("--scenes", synth.scenes, "Number of scenes")->check(CLI::PositiveNumber);
    synth_cmd->add_option("--split", synth.split, "Split tag written to the manifest");
    synth.scene.spec.grid_interval = RefinementConfig{}.grid_interval;
    synth.scene.add_to(synth_cmd);
    synth.embedding.add_to(synth_cmd);
    synth_cmd->add_option("--holes-min", synth.degrade.min_holes, "Degraded logits: minimum holes");
    synth_cmd->add_option("--holes-max", synth.degrade.max_holes, "Degraded logits: maximum holes");
    synth_cmd->add_option("--hole-radius-min", synth.degrade.hole_radius_min, "Degraded logits: minimum hole radius");
    synth_cmd->add_option("--hole-radius-max", synth.degrade.hole_radius_max, "Degraded logits: maximum hole radius");
    synth_cmd->add_option("--jitter", synth.degrade.jitter, "Degraded logits: boundary jitter amplitude (px)");
    synth_cmd->add_option("--jitter-cell", synth.degrade.jitter_cell, "Degraded logits: jitter field spacing (px)");
    synth_cmd->add_option("--jobs", synth.jobs, "Worker threads")->check(CLI::PositiveNumber);
    synth_cmd->add_option("--out", synth.out, "Output directory")->required();

    PromptArgs prompt;
    auto* prompt_cmd = app.add_subcommand("prompt", "Build mask and point prompts from embeddings");
    prompt_cmd->add_option("--embeddings", prompt.embeddings, "Embeddings tensor ((N+1)xd, row 0 = seg token)")
        ->required();
    prompt_cmd->add_option("--canvas", prompt.canvas, "Padded canvas size HxW for point coordinates");
    prompt_cmd->add_option("--pad", prompt.pad, "pad.txt giving the padded canvas (alternative to --canvas)");
    prompt_cmd->add_option("--types", prompt.types, "Prompt types: mask-only, point-only or both");
    prompt_cmd->add_option("--k-pos", prompt.k_pos, "Positive points")->check(CLI::NonNegativeNumber);
    prompt_cmd->add_option("--k-neg", prompt.k_neg, "Negative points")->check(CLI::NonNegativeNumber);
    prompt_cmd->add_option("--prompt-side", prompt.prompt_side, "Mask prompt side")->check(CLI::PositiveNumber);
    prompt_cmd->add_option("--out", prompt.out, "Output bundle directory")->required();

    SegmentArgs segment;
    auto* segment_cmd = app.add_subcommand("segment", "Query a backend with a prompt bundle for logits");
    segment_cmd->add_option("--bundle", segment.bundle, "Prompt bundle directory")->required();
    segment_cmd->add_option("--image-id", segment.image_id, "Image id (replay lookup key)")->required();
    segment.backend.add_to(segment_cmd);
    segment_cmd->add_option("--out", segment.out, "Output logits tensor (.nvt)")->required();

    RefineArgs refine_args;
    auto* refine_cmd = app.add_subcommand("refine", "Logit-guided candidate selection and instance assembly");
    refine_cmd->add_option("--logits", refine_args.logits, "Logits tensor at padded resolution")->required();
    refine_cmd->add_option("--image-id", refine_args.image_id, "Image id (replay lookup key)")->required();
    refine_args.backend.add_to(refine_cmd);
    refine_cmd->add_option("--grid-interval", refine_args.cfg.grid_interval, "Grid spacing in pixels");
    refine_cmd->add_option("--tau", refine_args.cfg.tau, "Logit threshold");
    refine_cmd->add_option("--delta", refine_args.cfg.delta, "Overlap threshold (strict)");
    refine_cmd->add_option("--pad", refine_args.pad, "pad.txt; outputs are cropped back to the original size");
    refine_cmd->add_option("--instances-format", refine_args.instances_format, "Instance masks as rle or png")
        ->check(CLI::IsMember({"rle", "png"}));
    refine_cmd->add_option("--out", refine_args.out, "Output directory")->required();

    EvalSemanticArgs sem;
    auto* sem_cmd = app.add_subcommand("eval-semantic", "gIoU, cIoU, Boundary-IoU and Boundary-F1");
    sem_cmd->add_option("--manifest", sem.manifest, "Sample manifest (TSV)")->required();
    sem.preds.add_to(sem_cmd, "semantic.png");
    sem_cmd->add_option("--split", sem.split, "Only evaluate this split");
    sem_cmd->add_option("--boundary-d", sem.d, "Boundary band width / tolerance (px)")->check(CLI::PositiveNumber);
    sem_cmd->add_option("--jobs", sem.jobs, "Worker threads")->check(CLI::PositiveNumber);
    sem_cmd->add_option("--out", sem.out, "Output directory")->required();

    EvalInstanceArgs ins;
    auto* ins_cmd = app.add_subcommand("eval-instance", "COCO-style mask AP");
    ins_cmd->add_option("--manifest", ins.manifest, "Sample manifest (TSV)")->required();
    ins.preds.add_to(ins_cmd, "instances.txt");
    ins_cmd->add_option("--split", ins.split, "Only evaluate this split");
    ins_cmd->add_option("--interp", ins.interp, "PR interpolation: coco101 or all-points");
    ins_cmd->add_option("--jobs", ins.jobs, "Worker threads")->check(CLI::PositiveNumber);
    ins_cmd->add_option("--out", ins.out, "Output directory")->required();

    LossCheckArgs loss;
    auto* loss_cmd = app.add_subcommand("loss-check", "Finite-difference check of the loss gradients");
    loss_cmd->add_option("--seed", loss.seed, "Fixture seed");
    loss_cmd->add_option("--fixtures", loss.fixtures, "Random fixtures per loss");
    loss_cmd->add_option("--step", loss.step, "Central-difference step");
    loss_cmd->add_option("--tolerance", loss.tolerance, "Maximum relative error");
    loss_cmd->add_option("--out", loss.out, "Optional report directory");

    AblateArgs ablate;
    auto* ablate_cmd = app.add_subcommand("ablate-prompts", "Mask-only / point-only / both prompt ablation on mock scenes");
    ablate.scene.spec = ablate.spec.scene;
    ablate.embedding.spec = ablate.spec.embedding;
    ablate_cmd->add_option("--seed", ablate.spec.seed, "Suite seed");
    ablate_cmd->add_option("--scenes", ablate.spec.scenes, "Number of scenes")->check(CLI::PositiveNumber);
    ablate_cmd->add_option("--k-pos", ablate.spec.k_pos, "Positive points")->check(CLI::NonNegativeNumber);
    ablate_cmd->add_option("--k-neg", ablate.spec.k_neg, "Negative points")->check(CLI::NonNegativeNumber);
    ablate.scene.add_to(ablate_cmd);
    ablate.embedding.add_to(ablate_cmd);
    ablate_cmd->add_option("--logit-magnitude", ablate.spec.mock.logit_magnitude, "Mock: logit magnitude");
    ablate_cmd->add_option("--logit-sigma", ablate.spec.mock.noise.logit_sigma, "Mock: logit noise std-dev");
    ablate_cmd->add_option("--noise-seed", ablate.spec.mock.noise.seed, "Mock: noise seed");
    ablate_cmd->add_option("--jobs", ablate.spec.jobs, "Worker threads")->check(CLI::PositiveNumber);
    ablate_cmd->add_option("--out", ablate.out, "Optional report directory");

    std::set<std::string> names;
    for (const auto* sub : app.get_subcommands({})) {
        names.insert(sub->get_name());
    }

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        std::string config_path;
        args = expand_config(args, names, config_path);
        std::reverse(args.begin(), args.end());
        try {
            app.parse(args);
        } catch (const CLI::ParseError& e) {
            const int rc = app.exit(e);
            return rc == 0 ? kOk : kUsage;
        }

        CLI::App* sub = app.get_subcommands().front();
        RunContext ctx{sub->get_name(), effective_config(*sub)};
        if (!config_path.empty()) {
            ctx.config.emplace_back("config_file", config_path);
        }
        const std::string& name = ctx.command;
        if (name == "synth") {
            return run_synth(synth, ctx);
        }
        if (name == "prompt") {
            return run_prompt(prompt, ctx);
        }
        if (name == "segment") {
            return run_segment(segment, ctx);
        }
        if (name == "refine") {
            return run_refine(refine_args, ctx);
        }
        if (name == "eval-semantic") {
            return run_eval_semantic(sem, ctx);
        }
        if (name == "eval-instance") {
            return run_eval_instance(ins, ctx);
        }
        if (name == "loss-check") {
            return run_loss_check(loss, ctx);
        }
        if (name == "ablate-prompts") {
            return run_ablate(ablate, ctx);
        }
        return kUsage;
    } catch (const UsageError& e) {
        std::cerr << "novo: usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const ValidationError& e) {
        std::cerr << "novo: validation failed: " << e.what() << "\n";
        return kValidation;
    } catch (const ShapeError& e) {
        std::cerr << "novo: shape mismatch: " << e.what() << "\n";
        return kValidation;
    } catch (const ValueError& e) {
        std::cerr << "novo: invalid value: " << e.what() << "\n";
        return kUsage;
    } catch (const FormatError& e) {
        std::cerr << "novo: malformed input: " << e.what() << "\n";
        return kFormat;
    } catch (const NotFoundError& e) {
        std::cerr << "novo: not found: " << e.what() << "\n";
        return kNotFound;
    } catch (const IoError& e) {
        std::cerr << "novo: i/o error: " << e.what() << "\n";
        return kIo;
    } catch (const std::exception& e) {
        std::cerr << "novo: internal error: " << e.what() << "\n";
        return kInternal;
    }
}
