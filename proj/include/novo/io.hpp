#pragma once

#include "novo/prompt.hpp"
#include "novo/scene.hpp"
#include "novo/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace novo {

// ---------------------------------------------------------------------------
// Tensor container (.nvt)
//
//   bytes 0..3   magic "NVT1"
//   byte  4      dtype code (1 = f32, 2 = u8)
//   byte  5      rank
//   then rank × little-endian u32 dims, then the row-major payload
//   (f32 little-endian IEEE-754, or raw u8).
// ---------------------------------------------------------------------------

enum class DType : std::uint8_t { f32 = 1, u8 = 2 };

struct Tensor {
    DType dtype = DType::f32;
    std::vector<std::uint32_t> dims;
    std::vector<float> f32;
    std::vector<std::uint8_t> u8;

    std::size_t element_count() const;
    bool operator==(const Tensor&) const = default;
};

std::vector<std::uint8_t> encode_tensor(const Tensor& t);
/// `source` names the origin in error messages.
Tensor decode_tensor(std::span<const std::uint8_t> bytes, const std::string& source = "<memory>");

void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

Tensor tensor_from_map(const DenseMap& map);
/// Accepts rank-2 f32 tensors (or rank 3 with a leading 1).
DenseMap map_from_tensor(const Tensor& t, const std::string& source = "<tensor>");
Tensor tensor_from_mask(const BinaryMask& mask);
BinaryMask mask_from_tensor(const Tensor& t, const std::string& source = "<tensor>");

/// EmbeddingSet as one (N+1)×d f32 tensor: row 0 is the segmentation token,
/// rows 1..N the patches in row-major grid order.
Tensor tensor_from_embeddings(const EmbeddingSet& emb);
EmbeddingSet embeddings_from_tensor(const Tensor& t, const std::string& source = "<tensor>");

/// Scene label image as a u8 H×W tensor (0 = background, k = object k).
Tensor tensor_from_scene(const SyntheticScene& scene);
SyntheticScene scene_from_tensor(const Tensor& t, const std::string& source = "<tensor>");

// ---------------------------------------------------------------------------
// Run-length encoding (COCO uncompressed): column-major runs, first run counts
// zeros (possibly 0).
// ---------------------------------------------------------------------------

struct RleMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint32_t> counts;

    bool operator==(const RleMask&) const = default;
};

RleMask rle_encode(const BinaryMask& mask);
BinaryMask rle_decode(const RleMask& rle);

/// Text form used in manifests and instance lists: `rle:<H>x<W>:<c0>,<c1>,...`.
std::string format_rle(const RleMask& rle);
RleMask parse_rle(const std::string& text, const std::string& source = "<rle>");

// ---------------------------------------------------------------------------
// Mask image files: single-channel PNG, 0 = false, 255 = true. On read any
// value > 127 is true; RGB(A) and palette images are reduced to gray first.
// ---------------------------------------------------------------------------

void write_mask_png(const std::filesystem::path& path, const BinaryMask& mask);
BinaryMask read_mask_png(const std::filesystem::path& path);

/// A mask reference: `rle:...` inline, otherwise a PNG path relative to `base`.
BinaryMask load_mask_ref(const std::string& ref, const std::filesystem::path& base);

// ---------------------------------------------------------------------------
// Points file: one `y x polarity score` record per line, polarity `+` or `-`,
// score printed round-trip exact. `#` starts a comment line.
// ---------------------------------------------------------------------------

void write_points(const std::filesystem::path& path, const std::vector<PointPrompt>& points);
std::vector<PointPrompt> read_points(const std::filesystem::path& path);

/// Prompt bundle directory: `mask_prompt.nvt` (absent for point-only) and `points.txt`.
void write_bundle(const std::filesystem::path& dir, const PromptBundle& bundle);
PromptBundle read_bundle(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Instance lists: one `confidence<TAB>mask_ref` record per line.
// ---------------------------------------------------------------------------

struct ScoredMask {
    BinaryMask mask;
    double confidence = 1.0;
};

void write_instances(const std::filesystem::path& path, const std::vector<ScoredMask>& instances,
                     bool as_png = false);
std::vector<ScoredMask> read_instances(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Sample manifests: tab-separated, one sample per line,
//
//   image_id  image_path  query  <H>x<W>  split  mask_ref[;mask_ref...]
//
// Paths are relative to the manifest's directory. `#` starts a comment.
// Splits `val` and `test` are evaluation splits and need ≥ 1 GT mask.
// ---------------------------------------------------------------------------

struct SampleRecord {
    std::string image_id;
    std::string image_path;
    std::string query;
    int height = 0;
    int width = 0;
    std::string split;
    std::vector<std::string> mask_refs;

    bool operator==(const SampleRecord&) const = default;
};

struct SampleManifest {
    std::filesystem::path base_dir;
    std::vector<SampleRecord> samples;

    /// Decode every GT mask of one sample.
    std::vector<BinaryMask> load_masks(const SampleRecord& s) const;
};

std::string format_manifest(const std::vector<SampleRecord>& samples);
/// Parses and validates eagerly; all violations are collected into one ValidationError.
SampleManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir,
                              bool check_files = true);
SampleManifest load_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<SampleRecord>& samples);

bool is_eval_split(const std::string& split);

// ---------------------------------------------------------------------------
// key=value text (configs and reports). Blank lines and `#` comments ignored.
// ---------------------------------------------------------------------------

using KeyValues = std::vector<std::pair<std::string, std::string>>;

KeyValues parse_key_values(const std::string& text, const std::string& source = "<kv>");
std::string format_key_values(const KeyValues& kv);

void write_pad_spec(const std::filesystem::path& path, const PadSpec& spec);
PadSpec read_pad_spec(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double v);
/// Strict full-string parse. Throws ValueError.
double parse_double(const std::string& s);
int parse_int(const std::string& s);
/// `<H>x<W>`.
std::pair<int, int> parse_dims(const std::string& s);

} // namespace novo
