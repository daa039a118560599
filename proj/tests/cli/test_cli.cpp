// End-to-end tests of the `novo` executable: determinism, file-chain versus
// in-process equivalence, replay parity and exit codes.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "novo/backend.hpp"
#include "novo/io.hpp"
#include "novo/metrics.hpp"
#include "novo/prompt.hpp"
#include "novo/refinement.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace novo;

namespace {

const std::string kCli = NOVO_CLI_PATH;

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("novo_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

/// Runs the CLI with stdout/stderr captured to `log`; returns the exit status.
int run(const std::string& args, const fs::path& log = fs::temp_directory_path() / "novo_cli_last.log") {
    const std::string cmd = kCli + " " + args + " >" + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

std::vector<char> bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// relative path → contents for every regular file under root.
std::map<std::string, std::vector<char>> snapshot(const fs::path& root) {
    std::map<std::string, std::vector<char>> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) {
            out[fs::relative(e.path(), root).string()] = bytes(e.path());
        }
    }
    return out;
}

std::map<std::string, std::string> report(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& [k, v] : parse_key_values(read_text_file(dir / "report.txt"))) {
        out[k] = v;
    }
    return out;
}

/// Same f32 rounding a map undergoes when written to and read from a file.
DenseMap through_f32(const DenseMap& m) { return map_from_tensor(decode_tensor(encode_tensor(tensor_from_map(m)))); }

struct Dataset {
    fs::path root;
    SampleManifest manifest;
};

Dataset synth(const std::string& name, int scenes) {
    const fs::path root = scratch(name) / "data";
    REQUIRE(run("synth --seed 7 --scenes " + std::to_string(scenes) + " --out " + q(root)) == 0);
    return {root, load_manifest(root / "manifest.tsv")};
}

} // namespace

TEST_CASE("synth is byte-identical for a fixed seed") {
    const fs::path a = scratch("synth_a"), b = scratch("synth_b");
    REQUIRE(run("synth --seed 7 --scenes 4 --out " + q(a / "d")) == 0);
    REQUIRE(run("synth --seed 7 --scenes 4 --out " + q(b / "d") + " --jobs 3") == 0);
    const auto sa = snapshot(a / "d"), sb = snapshot(b / "d");
    CHECK(sa.size() > 4 * 6);
    // Provenance records the job count, everything else must match exactly.
    auto strip = [](auto s) {
        s.erase("provenance.txt");
        return s;
    };
    CHECK(strip(sa) == strip(sb));

    const fs::path c = scratch("synth_c");
    REQUIRE(run("synth --seed 8 --scenes 4 --out " + q(c / "d")) == 0);
    CHECK(strip(snapshot(c / "d")) != strip(sa));
}

TEST_CASE("prompt, segment, refine and eval-semantic match the in-process composition") {
    const Dataset ds = synth("chain", 3);
    const fs::path work = ds.root.parent_path();
    std::vector<std::string> ids;
    std::vector<MaskPair> pairs;
    for (const auto& s : ds.manifest.samples) {
        const fs::path scene_dir = ds.root / s.image_id;
        const fs::path out = work / "pred" / s.image_id;
        const std::string mock = " --image-id " + s.image_id + " --scene " + q(scene_dir / "labels.nvt");
        REQUIRE(run("prompt --embeddings " + q(scene_dir / "embeddings.nvt") + " --pad " + q(scene_dir / "pad.txt") +
                    " --out " + q(out / "bundle")) == 0);
        REQUIRE(run("segment --bundle " + q(out / "bundle") + mock + " --out " + q(out / "logits.nvt")) == 0);
        REQUIRE(run("refine --logits " + q(out / "logits.nvt") + mock + " --pad " + q(scene_dir / "pad.txt") +
                    " --out " + q(out)) == 0);

        // The same computation in memory; only file boundaries quantise to f32.
        const EmbeddingSet emb = embeddings_from_tensor(read_tensor(scene_dir / "embeddings.nvt"));
        const PadSpec pad = read_pad_spec(scene_dir / "pad.txt");
        PromptBundle bundle = build_prompts(emb, pad.padded_side, pad.padded_side).bundle;
        bundle.mask_prompt = through_f32(*bundle.mask_prompt);
        CHECK(bundle == read_bundle(out / "bundle"));
        const MockBackend backend(scene_from_tensor(read_tensor(scene_dir / "labels.nvt")));
        const DenseMap logits = through_f32(*backend.query(BackendRequest{s.image_id, bundle}).logits);
        CHECK(logits == map_from_tensor(read_tensor(out / "logits.nvt")));
        const RefinementResult r = refine(logits, backend, s.image_id);
        const BinaryMask semantic = unpad(r.semantic_mask, pad);
        CHECK(semantic == read_mask_png(out / "semantic.png"));
        CHECK(report(out)["instance_count"] == std::to_string(r.instances.size()));

        BinaryMask gt(s.height, s.width);
        for (const auto& m : ds.manifest.load_masks(s)) {
            gt = mask_union(gt, m);
        }
        ids.push_back(s.image_id);
        pairs.emplace_back(semantic, gt);
    }
    REQUIRE(run("eval-semantic --manifest " + q(ds.root / "manifest.tsv") + " --pred-dir " + q(work / "pred") +
                " --out " + q(work / "eval")) == 0);
    const auto rep = report(work / "eval");
    const SemanticEvalReport expected = evaluate_semantic(ids, pairs);
    CHECK(parse_double(rep.at("giou")) == expected.g_iou);
    CHECK(parse_double(rep.at("ciou")) == expected.c_iou);
    CHECK(parse_double(rep.at("boundary_iou")) == expected.boundary_iou);
    CHECK(parse_double(rep.at("boundary_f1")) == expected.boundary_f1);
    CHECK(fs::exists(work / "eval" / "report.json"));
    CHECK(fs::exists(work / "eval" / "per_sample.csv"));

    // Thread count never changes the numbers.
    REQUIRE(run("eval-semantic --manifest " + q(ds.root / "manifest.tsv") + " --pred-dir " + q(work / "pred") +
                " --jobs 4 --out " + q(work / "eval4")) == 0);
    const auto rep4 = report(work / "eval4");
    for (const char* key : {"giou", "ciou", "boundary_iou", "boundary_f1"}) {
        CHECK(rep4.at(key) == rep.at(key));
    }

    REQUIRE(run("eval-instance --manifest " + q(ds.root / "manifest.tsv") + " --pred-dir " + q(work / "pred") +
                " --out " + q(work / "inst")) == 0);
    const auto inst = report(work / "inst");
    CHECK(inst.count("ap50") == 1);
    CHECK(inst.count("ap_l") == 1);
}

TEST_CASE("replay backend reproduces recorded mock outputs") {
    const Dataset ds = synth("replay", 1);
    const auto& s = ds.manifest.samples.front();
    const fs::path scene_dir = ds.root / s.image_id;
    const fs::path work = ds.root.parent_path();
    REQUIRE(run("prompt --embeddings " + q(scene_dir / "embeddings.nvt") + " --pad " + q(scene_dir / "pad.txt") +
                " --out " + q(work / "bundle")) == 0);

    // Record every response the mock would give for this bundle and the grid.
    const MockBackend mock(scene_from_tensor(read_tensor(scene_dir / "labels.nvt")));
    ReplayStoreWriter writer(work / "store");
    const PromptBundle bundle = read_bundle(work / "bundle");
    const DenseMap logits = through_f32(*mock.query(BackendRequest{s.image_id, bundle}).logits);
    writer.record_logits(BackendRequest{s.image_id, bundle}, logits);
    for (const auto& p : sample_grid_points(logits, RefinementConfig{}.grid_interval)) {
        std::vector<BinaryMask> masks;
        for (const auto& c : mock.query(BackendRequest{s.image_id, p}).candidates) {
            masks.push_back(c.mask);
        }
        writer.record_candidates(BackendRequest{s.image_id, p}, masks);
    }

    const std::string replay = " --image-id " + s.image_id + " --backend replay --store " + q(work / "store");
    const std::string via_mock = " --image-id " + s.image_id + " --scene " + q(scene_dir / "labels.nvt");
    REQUIRE(run("segment --bundle " + q(work / "bundle") + replay + " --out " + q(work / "replay.nvt")) == 0);
    REQUIRE(run("segment --bundle " + q(work / "bundle") + via_mock + " --out " + q(work / "mock.nvt")) == 0);
    CHECK(bytes(work / "replay.nvt") == bytes(work / "mock.nvt"));

    REQUIRE(run("refine --logits " + q(work / "mock.nvt") + replay + " --out " + q(work / "r_replay")) == 0);
    REQUIRE(run("refine --logits " + q(work / "mock.nvt") + via_mock + " --out " + q(work / "r_mock")) == 0);
    CHECK(bytes(work / "r_replay" / "semantic.png") == bytes(work / "r_mock" / "semantic.png"));
    CHECK(bytes(work / "r_replay" / "instances.txt") == bytes(work / "r_mock" / "instances.txt"));

    // A request that was never recorded.
    REQUIRE(run("prompt --embeddings " + q(scene_dir / "embeddings.nvt") + " --pad " + q(scene_dir / "pad.txt") +
                " --k-pos 1 --out " + q(work / "other")) == 0);
    CHECK(run("segment --bundle " + q(work / "other") + replay + " --out " + q(work / "x.nvt")) == 5);
}

TEST_CASE("config files supply defaults that flags override") {
    const Dataset ds = synth("config", 1);
    const auto& s = ds.manifest.samples.front();
    const fs::path scene_dir = ds.root / s.image_id;
    const fs::path work = ds.root.parent_path();
    write_text_file(work / "refine.conf", "delta = 0.9\ntau = 0.5\n");
    REQUIRE(run("refine --config " + q(work / "refine.conf") + " --logits " + q(scene_dir / "degraded_logits.nvt") +
                " --image-id x --scene " + q(scene_dir / "labels.nvt") + " --delta 0.6 --out " + q(work / "r")) == 0);
    const auto prov = parse_key_values(read_text_file(work / "r" / "provenance.txt"));
    const std::map<std::string, std::string> p(prov.begin(), prov.end());
    CHECK(p.at("config.delta") == "0.6");
    CHECK(p.at("config.tau") == "0.5");
    CHECK(p.at("tool") == "novo");
    CHECK(p.at("command") == "refine");
    CHECK(p.count("config.out") == 0);

    write_text_file(work / "bad.conf", "no-such-flag = 1\n");
    CHECK(run("refine --config " + q(work / "bad.conf") + " --logits a --image-id x --out b") == 2);
}

TEST_CASE("exit codes classify failures") {
    const Dataset ds = synth("exit", 1);
    const auto& s = ds.manifest.samples.front();
    const fs::path scene_dir = ds.root / s.image_id;
    const fs::path work = ds.root.parent_path();
    const std::string scene = " --image-id x --scene " + q(scene_dir / "labels.nvt");

    CHECK(run("--help") == 0);
    CHECK(run("") == 2);
    CHECK(run("refine --bogus") == 2);
    CHECK(run("refine --logits " + q(scene_dir / "oracle_logits.nvt") + " --image-id x --out " + q(work / "o")) == 2);
    CHECK(run("refine --logits " + q(scene_dir / "oracle_logits.nvt") + scene + " --delta 1.5 --out " +
              q(work / "o")) == 2);
    CHECK(run("refine --logits " + q(work / "missing.nvt") + scene + " --out " + q(work / "o")) == 3);

    write_text_file(work / "junk.nvt", "not a tensor");
    CHECK(run("refine --logits " + q(work / "junk.nvt") + scene + " --out " + q(work / "o")) == 4);

    write_text_file(work / "bad.tsv", "a\tb\n");
    CHECK(run("eval-semantic --manifest " + q(work / "bad.tsv") + " --pred-dir " + q(work) + " --out " +
              q(work / "e")) == 6);

    CHECK(run("loss-check --fixtures 3") == 0);
    CHECK(run("loss-check --fixtures 3 --tolerance 1e-30") == 7);
}
