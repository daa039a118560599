#include "novo/backend.hpp"

#include "novo/io.hpp"
#include "novo/morphology.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cmath>
#include <random>
#include <sstream>

namespace novo {

namespace fs = std::filesystem;

namespace {

void put_u8(std::vector<std::uint8_t>& out, std::uint8_t v) { out.push_back(v); }

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

void put_point(std::vector<std::uint8_t>& out, const PointPrompt& p) {
    put_u32(out, static_cast<std::uint32_t>(p.y));
    put_u32(out, static_cast<std::uint32_t>(p.x));
    put_u8(out, p.polarity == Polarity::positive ? 1 : 0);
}

} // namespace

std::vector<std::uint8_t> serialize_request(const BackendRequest& request) {
    std::vector<std::uint8_t> out = {'N', 'V', 'R', 'Q', '1'};
    put_u8(out, request.mode() == RequestMode::prompt_segmentation ? 1 : 2);
    put_u32(out, static_cast<std::uint32_t>(request.image_id.size()));
    out.insert(out.end(), request.image_id.begin(), request.image_id.end());
    if (const auto* bundle = std::get_if<PromptBundle>(&request.prompts)) {
        put_u8(out, bundle->mask_prompt ? 1 : 0);
        if (bundle->mask_prompt) {
            const auto& m = *bundle->mask_prompt;
            put_u32(out, static_cast<std::uint32_t>(m.height()));
            put_u32(out, static_cast<std::uint32_t>(m.width()));
            for (double v : m.values()) {
                put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
            }
        }
        put_u32(out, static_cast<std::uint32_t>(bundle->points.size()));
        for (const auto& p : bundle->points) {
            put_point(out, p);
        }
    } else {
        put_point(out, std::get<PointPrompt>(request.prompts));
    }
    return out;
}

std::string request_digest(const BackendRequest& request) {
    const auto bytes = serialize_request(request);
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("request_digest: SHA-256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 0xF];
    }
    return out;
}

// --- mock ------------------------------------------------------------------

MockBackend::MockBackend(const SyntheticScene& scene, MockConfig cfg)
    : scene_(scene.padded()), cfg_(cfg) {
    if (!(cfg_.logit_magnitude > 0.0) || cfg_.noise.erosion_radius < 0 ||
        cfg_.noise.dilation_radius < 0 || cfg_.noise.logit_sigma < 0.0) {
        throw ValueError("MockBackend: invalid configuration");
    }
}

BackendResponse MockBackend::query(const BackendRequest& request) const {
    if (const auto* bundle = std::get_if<PromptBundle>(&request.prompts)) {
        return segment(request, *bundle);
    }
    return candidates(std::get<PointPrompt>(request.prompts));
}

BackendResponse MockBackend::segment(const BackendRequest& request, const PromptBundle& bundle) const {
    const int side = scene_.height();
    const int n_objects = scene_.object_count();
    std::vector<int> votes(static_cast<std::size_t>(n_objects) + 1, 0);

    if (bundle.mask_prompt) {
        const DenseMap prompt = bilinear_resize(*bundle.mask_prompt, side, side);
        std::vector<std::size_t> covered(votes.size(), 0);
        for (std::size_t k = 0; k < prompt.size(); ++k) {
            if (prompt[k] > cfg_.prompt_threshold) {
                ++covered[static_cast<std::size_t>(scene_.labels()[k])];
            }
        }
        for (int obj = 1; obj <= n_objects; ++obj) {
            const double frac = static_cast<double>(covered[static_cast<std::size_t>(obj)]) /
                                static_cast<double>(scene_.object(obj).area());
            if (frac > cfg_.shape_overlap) {
                votes[static_cast<std::size_t>(obj)] += 1;
            }
        }
    }
    std::vector<bool> pos_hit(votes.size(), false);
    std::vector<bool> neg_hit(votes.size(), false);
    for (const auto& p : bundle.points) {
        if (p.y < 0 || p.x < 0 || p.y >= side || p.x >= side) {
            throw ValueError("MockBackend: point (" + std::to_string(p.y) + ", " + std::to_string(p.x) +
                             ") is outside the " + std::to_string(side) + "x" + std::to_string(side) +
                             " image");
        }
        const auto label = static_cast<std::size_t>(scene_.label(p.y, p.x));
        (p.polarity == Polarity::positive ? pos_hit : neg_hit)[label] = true;
    }
    for (std::size_t obj = 1; obj < votes.size(); ++obj) {
        votes[obj] += (pos_hit[obj] ? 1 : 0) - (neg_hit[obj] ? 1 : 0);
    }

    const double L = cfg_.logit_magnitude;
    DenseMap logits(side, side, -L);
    for (std::size_t k = 0; k < logits.size(); ++k) {
        const int label = scene_.labels()[k];
        if (label > 0 && votes[static_cast<std::size_t>(label)] > 0) {
            logits[k] = L;
        }
    }
    if (cfg_.noise.logit_sigma > 0.0) {
        // Seeded by the request so identical requests give identical noise.
        const std::string digest = request_digest(request);
        std::vector<std::uint32_t> words(digest.begin(), digest.end());
        words.push_back(static_cast<std::uint32_t>(cfg_.noise.seed));
        words.push_back(static_cast<std::uint32_t>(cfg_.noise.seed >> 32));
        std::seed_seq seq(words.begin(), words.end());
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> normal(0.0, cfg_.noise.logit_sigma);
        for (auto& v : logits.values()) {
            v += normal(rng);
        }
    }
    return BackendResponse{std::move(logits), {}};
}

BackendResponse MockBackend::candidates(const PointPrompt& point) const {
    const int side = scene_.height();
    if (point.y < 0 || point.x < 0 || point.y >= side || point.x >= side) {
        throw ValueError("MockBackend: point (" + std::to_string(point.y) + ", " +
                         std::to_string(point.x) + ") is outside the " + std::to_string(side) + "x" +
                         std::to_string(side) + " image");
    }
    const int label = scene_.label(point.y, point.x);
    BackendResponse response;
    if (label == 0) {
        response.candidates.push_back(Candidate{BinaryMask(side, side), true});
        return response;
    }
    BinaryMask mask = scene_.object(label);
    mask = erode_disk(mask, cfg_.noise.erosion_radius);
    mask = dilate_disk(mask, cfg_.noise.dilation_radius);
    const bool empty = !mask.any();
    response.candidates.push_back(Candidate{std::move(mask), empty});
    return response;
}

// --- replay ----------------------------------------------------------------

ReplayBackend::ReplayBackend(fs::path root) : root_(std::move(root)) {
    if (!fs::is_directory(root_)) {
        throw IoError("replay store not found: " + root_.string());
    }
    for (const auto& dir : fs::directory_iterator(root_)) {
        if (!dir.is_directory()) {
            continue;
        }
        const fs::path index_path = dir.path() / "index.txt";
        if (!fs::exists(index_path)) {
            continue;
        }
        auto& entries = index_[dir.path().filename().string()];
        std::istringstream lines(read_text_file(index_path));
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(lines, line)) {
            ++line_no;
            if (line.empty() || line[0] == '#') {
                continue;
            }
            std::istringstream ls(line);
            Entry e;
            std::string digest;
            if (!(ls >> e.kind >> digest) || (e.kind != "logits" && e.kind != "candidates")) {
                throw FormatError(index_path.string(), line_no,
                                  "expected 'logits <digest> <path>' or 'candidates <digest> <paths...>'");
            }
            std::string rel;
            while (ls >> rel) {
                e.paths.push_back(dir.path() / rel);
            }
            if (e.kind == "logits" && e.paths.size() != 1) {
                throw FormatError(index_path.string(), line_no, "logits entry needs exactly one path");
            }
            entries[digest] = std::move(e);
        }
    }
}

BackendResponse ReplayBackend::query(const BackendRequest& request) const {
    const std::string digest = request_digest(request);
    const auto image = index_.find(request.image_id);
    if (image == index_.end()) {
        throw NotFoundError("replay: no records for image '" + request.image_id + "' (digest " +
                            digest + ")");
    }
    const auto entry = image->second.find(digest);
    const char* kind = request.mode() == RequestMode::prompt_segmentation ? "logits" : "candidates";
    if (entry == image->second.end() || entry->second.kind != kind) {
        throw NotFoundError("replay: no " + std::string(kind) + " record for image '" +
                            request.image_id + "' with digest " + digest);
    }
    BackendResponse response;
    if (request.mode() == RequestMode::prompt_segmentation) {
        const auto& path = entry->second.paths.front();
        response.logits = map_from_tensor(read_tensor(path), path.string());
        return response;
    }
    for (const auto& path : entry->second.paths) {
        BinaryMask m = read_mask_png(path);
        const bool empty = !m.any();
        response.candidates.push_back(Candidate{std::move(m), empty});
    }
    return response;
}

ReplayStoreWriter::ReplayStoreWriter(fs::path root) : root_(std::move(root)) {
    fs::create_directories(root_);
}

void ReplayStoreWriter::append_index(const std::string& image_id, const std::string& line) {
    const fs::path path = root_ / image_id / "index.txt";
    std::string text = fs::exists(path) ? read_text_file(path) : std::string();
    text += line + '\n';
    write_text_file(path, text);
}

std::string ReplayStoreWriter::record_logits(const BackendRequest& request, const DenseMap& logits) {
    if (request.mode() != RequestMode::prompt_segmentation) {
        throw ValueError("record_logits: request is not a prompt-segmentation request");
    }
    const std::string digest = request_digest(request);
    const fs::path dir = root_ / request.image_id;
    std::string rel = "logits.nvt";
    if (fs::exists(dir / rel)) {
        rel = "logits_" + digest + ".nvt";
    }
    write_tensor(dir / rel, tensor_from_map(logits));
    append_index(request.image_id, "logits " + digest + " " + rel);
    return digest;
}

std::string ReplayStoreWriter::record_candidates(const BackendRequest& request,
                                                 const std::vector<BinaryMask>& candidates) {
    if (request.mode() != RequestMode::point_candidates) {
        throw ValueError("record_candidates: request is not a point-candidates request");
    }
    const std::string digest = request_digest(request);
    std::string line = "candidates " + digest;
    for (std::size_t j = 0; j < candidates.size(); ++j) {
        const std::string rel = "candidates/" + digest + "/mask_" + std::to_string(j) + ".png";
        write_mask_png(root_ / request.image_id / rel, candidates[j]);
        line += " " + rel;
    }
    append_index(request.image_id, line);
    return digest;
}

} // namespace novo
