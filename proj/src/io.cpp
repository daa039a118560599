#include "novo/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

namespace novo {

namespace fs = std::filesystem;

// --- text helpers ----------------------------------------------------------

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') {
        ++first;
    }
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last || s.empty()) {
        throw ValueError("not a number: '" + s + "'");
    }
    return v;
}

int parse_int(const std::string& s) {
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) {
        throw ValueError("not an integer: '" + s + "'");
    }
    return v;
}

std::pair<int, int> parse_dims(const std::string& s) {
    const auto x = s.find('x');
    if (x == std::string::npos) {
        throw ValueError("dimensions must look like <H>x<W>, got '" + s + "'");
    }
    const int h = parse_int(s.substr(0, x));
    const int w = parse_int(s.substr(x + 1));
    if (h < 1 || w < 1) {
        throw ValueError("dimensions must be positive, got '" + s + "'");
    }
    return {h, w};
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw IoError("short write to " + path.string());
    }
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

std::vector<std::string> lines_of(const std::string& text) {
    auto lines = split(text, '\n');
    if (!lines.empty() && lines.back().empty()) {
        lines.pop_back();
    }
    for (auto& l : lines) {
        if (!l.empty() && l.back() == '\r') {
            l.pop_back();
        }
    }
    return lines;
}

bool skippable(const std::string& line) {
    const auto first = line.find_first_not_of(" \t");
    return first == std::string::npos || line[first] == '#';
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t");
    if (a == std::string::npos) {
        return {};
    }
    const auto b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

} // namespace

// --- tensors ---------------------------------------------------------------

std::size_t Tensor::element_count() const {
    std::size_t n = 1;
    for (auto d : dims) {
        n *= d;
    }
    return n;
}

namespace {

constexpr char kMagic[4] = {'N', 'V', 'T', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
           (std::uint32_t{p[3]} << 24);
}

} // namespace

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
    const std::size_t n = t.element_count();
    if (t.dims.size() > 255) {
        throw ValueError("encode_tensor: rank exceeds 255");
    }
    if ((t.dtype == DType::f32 && t.f32.size() != n) || (t.dtype == DType::u8 && t.u8.size() != n)) {
        throw ShapeError("encode_tensor: payload does not match dims");
    }
    std::vector<std::uint8_t> out(kMagic, kMagic + 4);
    out.push_back(static_cast<std::uint8_t>(t.dtype));
    out.push_back(static_cast<std::uint8_t>(t.dims.size()));
    for (auto d : t.dims) {
        put_u32(out, d);
    }
    if (t.dtype == DType::f32) {
        out.reserve(out.size() + n * 4);
        for (float f : t.f32) {
            put_u32(out, std::bit_cast<std::uint32_t>(f));
        }
    } else {
        out.insert(out.end(), t.u8.begin(), t.u8.end());
    }
    return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes, const std::string& source) {
    if (bytes.size() < 6) {
        throw FormatError(source, bytes.size(), "truncated header (need 6 bytes)");
    }
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw FormatError(source, 0, "bad magic, expected NVT1");
    }
    Tensor t;
    const std::uint8_t code = bytes[4];
    if (code != 1 && code != 2) {
        throw FormatError(source, 4, "unknown dtype code " + std::to_string(code));
    }
    t.dtype = static_cast<DType>(code);
    const std::size_t rank = bytes[5];
    const std::size_t header = 6 + 4 * rank;
    if (bytes.size() < header) {
        throw FormatError(source, bytes.size(), "truncated dims (rank " + std::to_string(rank) + ")");
    }
    for (std::size_t i = 0; i < rank; ++i) {
        t.dims.push_back(get_u32(bytes.data() + 6 + 4 * i));
    }
    const std::size_t width = t.dtype == DType::f32 ? 4 : 1;
    // Bound the element count by the bytes present before multiplying, so a
    // hostile header cannot overflow the size computation.
    const std::size_t room = (bytes.size() - header) / width;
    const bool has_zero = std::find(t.dims.begin(), t.dims.end(), 0u) != t.dims.end();
    std::size_t n = has_zero ? 0 : 1;
    for (auto d : t.dims) {
        if (has_zero) {
            break;
        }
        if (n > room / d) {
            n = room + 1;
            break;
        }
        n *= d;
    }
    if (n > room) {
        throw FormatError(source, bytes.size(), "truncated payload for dims of " + std::to_string(rank) +
                                                    "-d tensor");
    }
    const std::size_t expected = header + n * width;
    if (bytes.size() < expected) {
        throw FormatError(source, bytes.size(),
                          "truncated payload, expected " + std::to_string(expected) + " bytes");
    }
    if (bytes.size() > expected) {
        throw FormatError(source, expected, "trailing bytes after payload");
    }
    if (t.dtype == DType::f32) {
        t.f32.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            t.f32[i] = std::bit_cast<float>(get_u32(bytes.data() + header + 4 * i));
        }
    } else {
        t.u8.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end());
    }
    return t;
}

void write_tensor(const fs::path& path, const Tensor& t) {
    const auto bytes = encode_tensor(t);
    write_text_file(path, std::string(bytes.begin(), bytes.end()));
}

Tensor read_tensor(const fs::path& path) {
    const std::string raw = read_text_file(path);
    return decode_tensor(std::span(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()),
                         path.string());
}

Tensor tensor_from_map(const DenseMap& map) {
    Tensor t;
    t.dtype = DType::f32;
    t.dims = {static_cast<std::uint32_t>(map.height()), static_cast<std::uint32_t>(map.width())};
    t.f32.reserve(map.size());
    for (double v : map.values()) {
        t.f32.push_back(static_cast<float>(v));
    }
    return t;
}

namespace {

std::pair<int, int> plane_dims(const Tensor& t, const std::string& source) {
    if (t.dims.size() == 2) {
        return {static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1])};
    }
    if (t.dims.size() == 3 && t.dims[0] == 1) {
        return {static_cast<int>(t.dims[1]), static_cast<int>(t.dims[2])};
    }
    throw FormatError(source, 5, "expected a rank-2 tensor, got rank " + std::to_string(t.dims.size()));
}

} // namespace

DenseMap map_from_tensor(const Tensor& t, const std::string& source) {
    if (t.dtype != DType::f32) {
        throw FormatError(source, 4, "expected f32 tensor");
    }
    const auto [h, w] = plane_dims(t, source);
    return DenseMap(h, w, std::vector<double>(t.f32.begin(), t.f32.end()));
}

Tensor tensor_from_mask(const BinaryMask& mask) {
    Tensor t;
    t.dtype = DType::u8;
    t.dims = {static_cast<std::uint32_t>(mask.height()), static_cast<std::uint32_t>(mask.width())};
    t.u8.assign(mask.bits().begin(), mask.bits().end());
    return t;
}

BinaryMask mask_from_tensor(const Tensor& t, const std::string& source) {
    if (t.dtype != DType::u8) {
        throw FormatError(source, 4, "expected u8 tensor");
    }
    const auto [h, w] = plane_dims(t, source);
    return BinaryMask(h, w, t.u8);
}

Tensor tensor_from_embeddings(const EmbeddingSet& emb) {
    Tensor t;
    t.dtype = DType::f32;
    t.dims = {static_cast<std::uint32_t>(emb.patch_count() + 1), static_cast<std::uint32_t>(emb.dim())};
    t.f32.reserve(t.element_count());
    for (double v : emb.seg_embedding()) {
        t.f32.push_back(static_cast<float>(v));
    }
    for (double v : emb.patches()) {
        t.f32.push_back(static_cast<float>(v));
    }
    return t;
}

EmbeddingSet embeddings_from_tensor(const Tensor& t, const std::string& source) {
    if (t.dtype != DType::f32 || t.dims.size() != 2 || t.dims[0] < 2 || t.dims[1] < 1) {
        throw FormatError(source, 4, "embeddings must be an f32 (N+1)xd tensor with N >= 1");
    }
    const std::size_t d = t.dims[1];
    std::vector<double> seg(t.f32.begin(), t.f32.begin() + static_cast<std::ptrdiff_t>(d));
    std::vector<double> patches(t.f32.begin() + static_cast<std::ptrdiff_t>(d), t.f32.end());
    return EmbeddingSet(std::move(patches), std::move(seg), static_cast<int>(d));
}

Tensor tensor_from_scene(const SyntheticScene& scene) {
    if (scene.object_count() > 255) {
        throw ValueError("tensor_from_scene: more than 255 objects do not fit a u8 label image");
    }
    Tensor t;
    t.dtype = DType::u8;
    t.dims = {static_cast<std::uint32_t>(scene.height()), static_cast<std::uint32_t>(scene.width())};
    t.u8.assign(scene.labels().begin(), scene.labels().end());
    return t;
}

SyntheticScene scene_from_tensor(const Tensor& t, const std::string& source) {
    if (t.dtype != DType::u8 || t.dims.size() != 2 || t.dims[0] == 0 || t.dims[1] == 0) {
        throw FormatError(source, 4, "scene labels must be a non-empty u8 HxW tensor");
    }
    try {
        return SyntheticScene(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]),
                              std::vector<int>(t.u8.begin(), t.u8.end()));
    } catch (const ValueError& e) {
        throw FormatError(source, 6, e.what());
    }
}

// --- RLE -------------------------------------------------------------------

RleMask rle_encode(const BinaryMask& mask) {
    RleMask rle{mask.height(), mask.width(), {}};
    bool current = false;
    std::uint32_t run = 0;
    for (int x = 0; x < mask.width(); ++x) {
        for (int y = 0; y < mask.height(); ++y) {
            const bool v = mask(y, x);
            if (v != current) {
                rle.counts.push_back(run);
                run = 0;
                current = v;
            }
            ++run;
        }
    }
    rle.counts.push_back(run);
    return rle;
}

BinaryMask rle_decode(const RleMask& rle) {
    if (rle.height < 1 || rle.width < 1) {
        throw FormatError("<rle>", 0, "dimensions must be positive");
    }
    const std::uint64_t total = static_cast<std::uint64_t>(rle.height) * rle.width;
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < rle.counts.size(); ++i) {
        sum += rle.counts[i];
        if (sum > total) {
            throw FormatError("<rle>", i, "run lengths exceed " + std::to_string(total) + " pixels");
        }
    }
    if (sum != total) {
        throw FormatError("<rle>", rle.counts.size(),
                          "run lengths sum to " + std::to_string(sum) + ", expected " +
                              std::to_string(total));
    }
    BinaryMask mask(rle.height, rle.width);
    std::uint64_t pos = 0;
    bool value = false;
    for (auto run : rle.counts) {
        if (value) {
            for (std::uint64_t i = pos; i < pos + run; ++i) {
                mask.set(static_cast<int>(i % static_cast<std::uint64_t>(rle.height)),
                         static_cast<int>(i / static_cast<std::uint64_t>(rle.height)));
            }
        }
        pos += run;
        value = !value;
    }
    return mask;
}

std::string format_rle(const RleMask& rle) {
    std::string out = "rle:" + std::to_string(rle.height) + "x" + std::to_string(rle.width) + ":";
    for (std::size_t i = 0; i < rle.counts.size(); ++i) {
        if (i) {
            out += ',';
        }
        out += std::to_string(rle.counts[i]);
    }
    return out;
}

RleMask parse_rle(const std::string& text, const std::string& source) {
    if (text.rfind("rle:", 0) != 0) {
        throw FormatError(source, 0, "RLE reference must start with 'rle:'");
    }
    const auto colon = text.find(':', 4);
    if (colon == std::string::npos) {
        throw FormatError(source, 4, "RLE reference missing ':' after dimensions");
    }
    RleMask rle;
    try {
        std::tie(rle.height, rle.width) = parse_dims(text.substr(4, colon - 4));
    } catch (const ValueError& e) {
        throw FormatError(source, 4, e.what());
    }
    const std::string body = text.substr(colon + 1);
    if (!body.empty()) {
        std::size_t offset = colon + 1;
        for (const auto& tok : split(body, ',')) {
            std::uint32_t v = 0;
            const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (tok.empty() || res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
                throw FormatError(source, offset, "bad run length '" + tok + "'");
            }
            rle.counts.push_back(v);
            offset += tok.size() + 1;
        }
    }
    std::uint64_t sum = 0;
    for (auto c : rle.counts) {
        sum += c;
    }
    if (sum != static_cast<std::uint64_t>(rle.height) * rle.width) {
        throw FormatError(source, colon + 1,
                          "run lengths sum to " + std::to_string(sum) + ", expected " +
                              std::to_string(static_cast<std::uint64_t>(rle.height) * rle.width));
    }
    return rle;
}

// --- PNG -------------------------------------------------------------------

void write_mask_png(const fs::path& path, const BinaryMask& mask) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::vector<png_byte> pixels(mask.size());
    for (std::size_t k = 0; k < pixels.size(); ++k) {
        pixels[k] = mask[k] ? 255 : 0;
    }
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(mask.width());
    image.height = static_cast<png_uint_32>(mask.height());
    image.format = PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, pixels.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw IoError("png write failed for " + path.string() + ": " + msg);
    }
}

BinaryMask read_mask_png(const fs::path& path) {
    if (!fs::exists(path)) {
        throw IoError("cannot open " + path.string());
    }
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw FormatError(path.string(), 0, "png decode failed: " + msg);
    }
    image.format = PNG_FORMAT_GRAY;
    std::vector<png_byte> pixels(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw FormatError(path.string(), 0, "png decode failed: " + msg);
    }
    std::vector<std::uint8_t> bits(pixels.size());
    for (std::size_t k = 0; k < bits.size(); ++k) {
        bits[k] = pixels[k] > 127 ? 1 : 0;
    }
    return BinaryMask(static_cast<int>(image.height), static_cast<int>(image.width), std::move(bits));
}

BinaryMask load_mask_ref(const std::string& ref, const fs::path& base) {
    if (ref.rfind("rle:", 0) == 0) {
        return rle_decode(parse_rle(ref));
    }
    const fs::path p(ref);
    return read_mask_png(p.is_absolute() ? p : base / p);
}

// --- points and bundles ----------------------------------------------------

void write_points(const fs::path& path, const std::vector<PointPrompt>& points) {
    std::string out = "# y x polarity score\n";
    for (const auto& p : points) {
        out += std::to_string(p.y) + ' ' + std::to_string(p.x) + ' ' +
               (p.polarity == Polarity::positive ? '+' : '-') + ' ' + format_double(p.source_score) +
               '\n';
    }
    write_text_file(path, out);
}

std::vector<PointPrompt> read_points(const fs::path& path) {
    const auto lines = lines_of(read_text_file(path));
    std::vector<PointPrompt> points;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (skippable(lines[i])) {
            continue;
        }
        std::istringstream ls(lines[i]);
        std::string y, x, pol, score, extra;
        if (!(ls >> y >> x >> pol >> score) || (ls >> extra)) {
            throw FormatError(path.string(), i + 1, "expected 'y x polarity score'");
        }
        PointPrompt p;
        try {
            p.y = parse_int(y);
            p.x = parse_int(x);
            p.source_score = parse_double(score);
        } catch (const ValueError& e) {
            throw FormatError(path.string(), i + 1, e.what());
        }
        if (pol == "+") {
            p.polarity = Polarity::positive;
        } else if (pol == "-") {
            p.polarity = Polarity::negative;
        } else {
            throw FormatError(path.string(), i + 1, "polarity must be '+' or '-'");
        }
        points.push_back(p);
    }
    return points;
}

void write_bundle(const fs::path& dir, const PromptBundle& bundle) {
    fs::create_directories(dir);
    const fs::path mask_path = dir / "mask_prompt.nvt";
    if (bundle.mask_prompt) {
        write_tensor(mask_path, tensor_from_map(*bundle.mask_prompt));
    } else if (fs::exists(mask_path)) {
        fs::remove(mask_path);
    }
    write_points(dir / "points.txt", bundle.points);
}

PromptBundle read_bundle(const fs::path& dir) {
    PromptBundle bundle;
    const fs::path mask_path = dir / "mask_prompt.nvt";
    if (fs::exists(mask_path)) {
        bundle.mask_prompt = map_from_tensor(read_tensor(mask_path), mask_path.string());
    }
    const fs::path points_path = dir / "points.txt";
    if (fs::exists(points_path)) {
        bundle.points = read_points(points_path);
    }
    if (!bundle.mask_prompt && !fs::exists(points_path)) {
        throw IoError("no prompt bundle in " + dir.string() + " (need mask_prompt.nvt or points.txt)");
    }
    return bundle;
}

// --- instances -------------------------------------------------------------

void write_instances(const fs::path& path, const std::vector<ScoredMask>& instances, bool as_png) {
    std::string out = "# confidence\tmask\n";
    for (std::size_t i = 0; i < instances.size(); ++i) {
        std::string ref;
        if (as_png) {
            ref = "instance_" + std::to_string(i) + ".png";
            write_mask_png(path.parent_path() / ref, instances[i].mask);
        } else {
            ref = format_rle(rle_encode(instances[i].mask));
        }
        out += format_double(instances[i].confidence) + '\t' + ref + '\n';
    }
    write_text_file(path, out);
}

std::vector<ScoredMask> read_instances(const fs::path& path) {
    const auto lines = lines_of(read_text_file(path));
    std::vector<ScoredMask> out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (skippable(lines[i])) {
            continue;
        }
        const auto tab = lines[i].find('\t');
        if (tab == std::string::npos) {
            throw FormatError(path.string(), i + 1, "expected 'confidence<TAB>mask'");
        }
        ScoredMask s;
        try {
            s.confidence = parse_double(lines[i].substr(0, tab));
        } catch (const ValueError& e) {
            throw FormatError(path.string(), i + 1, e.what());
        }
        s.mask = load_mask_ref(lines[i].substr(tab + 1), path.parent_path());
        out.push_back(std::move(s));
    }
    return out;
}

// --- manifests -------------------------------------------------------------

bool is_eval_split(const std::string& split) { return split == "val" || split == "test"; }

std::vector<BinaryMask> SampleManifest::load_masks(const SampleRecord& s) const {
    std::vector<BinaryMask> masks;
    for (const auto& ref : s.mask_refs) {
        masks.push_back(load_mask_ref(ref, base_dir));
    }
    return masks;
}

std::string format_manifest(const std::vector<SampleRecord>& samples) {
    std::string out = "# image_id\timage_path\tquery\tHxW\tsplit\tmasks\n";
    for (const auto& s : samples) {
        std::string masks;
        for (std::size_t i = 0; i < s.mask_refs.size(); ++i) {
            if (i) {
                masks += ';';
            }
            masks += s.mask_refs[i];
        }
        out += s.image_id + '\t' + s.image_path + '\t' + s.query + '\t' + std::to_string(s.height) +
               'x' + std::to_string(s.width) + '\t' + s.split + '\t' + masks + '\n';
    }
    return out;
}

SampleManifest parse_manifest(const std::string& text, const fs::path& base_dir, bool check_files) {
    SampleManifest manifest;
    manifest.base_dir = base_dir;
    std::vector<std::string> violations;
    std::set<std::string> seen_ids;
    const auto lines = lines_of(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (skippable(lines[i])) {
            continue;
        }
        const std::string where = "line " + std::to_string(i + 1) + ": ";
        const auto fields = split(lines[i], '\t');
        if (fields.size() != 6) {
            violations.push_back(where + "expected 6 tab-separated fields, got " +
                                 std::to_string(fields.size()));
            continue;
        }
        SampleRecord s;
        s.image_id = fields[0];
        s.image_path = fields[1];
        s.query = fields[2];
        s.split = fields[4];
        if (s.image_id.empty()) {
            violations.push_back(where + "empty image_id");
        } else if (!seen_ids.insert(s.image_id).second) {
            violations.push_back(where + "duplicate image_id '" + s.image_id + "'");
        }
        bool dims_ok = true;
        try {
            std::tie(s.height, s.width) = parse_dims(fields[3]);
        } catch (const ValueError& e) {
            violations.push_back(where + e.what());
            dims_ok = false;
        }
        if (!fields[5].empty()) {
            s.mask_refs = split(fields[5], ';');
        }
        if (check_files && !s.image_path.empty()) {
            const fs::path p(s.image_path);
            if (!fs::exists(p.is_absolute() ? p : base_dir / p)) {
                violations.push_back(where + "image file not found: " + s.image_path);
            }
        }
        if (is_eval_split(s.split) && s.mask_refs.empty()) {
            violations.push_back(where + "evaluation split '" + s.split + "' needs at least one GT mask");
        }
        for (const auto& ref : s.mask_refs) {
            if (ref.rfind("rle:", 0) == 0) {
                try {
                    const RleMask rle = parse_rle(ref, "rle");
                    if (dims_ok && (rle.height != s.height || rle.width != s.width)) {
                        violations.push_back(where + "RLE dims " + std::to_string(rle.height) + "x" +
                                             std::to_string(rle.width) + " differ from sample dims " +
                                             fields[3]);
                    }
                } catch (const FormatError& e) {
                    violations.push_back(where + e.what());
                }
            } else if (check_files) {
                const fs::path p(ref);
                if (!fs::exists(p.is_absolute() ? p : base_dir / p)) {
                    violations.push_back(where + "mask file not found: " + ref);
                }
            }
        }
        manifest.samples.push_back(std::move(s));
    }
    if (!violations.empty()) {
        throw ValidationError(std::move(violations));
    }
    return manifest;
}

SampleManifest load_manifest(const fs::path& path) {
    return parse_manifest(read_text_file(path), path.parent_path(), true);
}

void write_manifest(const fs::path& path, const std::vector<SampleRecord>& samples) {
    write_text_file(path, format_manifest(samples));
}

// --- key=value -------------------------------------------------------------

KeyValues parse_key_values(const std::string& text, const std::string& source) {
    KeyValues kv;
    const auto lines = lines_of(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (skippable(lines[i])) {
            continue;
        }
        const auto eq = lines[i].find('=');
        if (eq == std::string::npos) {
            throw FormatError(source, i + 1, "expected key=value");
        }
        kv.emplace_back(trim(lines[i].substr(0, eq)), trim(lines[i].substr(eq + 1)));
    }
    return kv;
}

std::string format_key_values(const KeyValues& kv) {
    std::string out;
    for (const auto& [k, v] : kv) {
        out += k + '=' + v + '\n';
    }
    return out;
}

void write_pad_spec(const fs::path& path, const PadSpec& spec) {
    write_text_file(path, format_key_values({{"original_h", std::to_string(spec.original_h)},
                                             {"original_w", std::to_string(spec.original_w)},
                                             {"padded_side", std::to_string(spec.padded_side)},
                                             {"offset_y", std::to_string(spec.offset_y)},
                                             {"offset_x", std::to_string(spec.offset_x)}}));
}

PadSpec read_pad_spec(const fs::path& path) {
    PadSpec spec;
    for (const auto& [k, v] : parse_key_values(read_text_file(path), path.string())) {
        const int n = parse_int(v);
        if (k == "original_h") {
            spec.original_h = n;
        } else if (k == "original_w") {
            spec.original_w = n;
        } else if (k == "padded_side") {
            spec.padded_side = n;
        } else if (k == "offset_y") {
            spec.offset_y = n;
        } else if (k == "offset_x") {
            spec.offset_x = n;
        }
    }
    return spec;
}

} // namespace novo
