#include "alignru/neural_backend.hpp"

#include "alignru/onnx/graph.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace alignru {

namespace {

[[noreturn]] void load_fail(const std::string& message) { throw Error(ErrorCode::ModelLoadFailure, message); }

constexpr std::array<std::string_view, 3> kHeads{"probs3", "prob_bin", "regression"};

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& model_path) {
    auto appended = model_path;
    appended += ".json";
    if (std::filesystem::exists(appended)) {
        return appended;
    }
    auto replaced = model_path;
    replaced.replace_extension(".json");
    if (std::filesystem::exists(replaced)) {
        return replaced;
    }
    return appended;
}

ModelSidecar read_sidecar(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        load_fail("cannot read model metadata " + path.string());
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        load_fail("model metadata " + path.string() + " is not valid JSON: " + e.what());
    }
    if (!j.is_object()) {
        load_fail("model metadata " + path.string() + " must be a JSON object");
    }
    ModelSidecar s;
    try {
        const auto& max_tokens = j.at("max_input_tokens");
        if (!max_tokens.is_number_integer() || max_tokens.get<int64_t>() < 4) {
            load_fail("max_input_tokens must be an integer >= 4");
        }
        s.max_input_tokens = max_tokens.get<std::size_t>();
        s.vocab_path = path.parent_path() / j.at("vocab").get<std::string>();
        s.do_lower_case = j.value("do_lower_case", false);
        if (j.contains("strip_accents") && !j["strip_accents"].is_null()) {
            s.strip_accents = j["strip_accents"].get<bool>();
        }
        if (j.contains("vocab_size")) {
            s.vocab_size = j["vocab_size"].get<std::size_t>();
        }
    } catch (const nlohmann::json::exception& e) {
        load_fail("model metadata " + path.string() + ": " + e.what());
    }
    return s;
}

PairEncoding encode_pair(const WordPieceTokenizer& tokenizer, std::string_view context, std::string_view claim,
                         std::size_t max_tokens) {
    auto ctx = tokenizer.encode(context);
    auto clm = tokenizer.encode(claim);
    PairEncoding enc;
    const std::size_t room = max_tokens > 3 ? max_tokens - 3 : 0;
    if (ctx.size() + clm.size() > room) {
        enc.truncated = true;
        const std::size_t claim_keep = std::min(clm.size(), room);
        clm.resize(claim_keep);
        ctx.resize(std::min(ctx.size(), room - claim_keep));
    }
    enc.context_tokens = ctx.size();
    enc.input_ids.reserve(ctx.size() + clm.size() + 3);
    enc.input_ids.push_back(tokenizer.cls_id());
    enc.input_ids.insert(enc.input_ids.end(), ctx.begin(), ctx.end());
    enc.input_ids.push_back(tokenizer.sep_id());
    enc.token_type_ids.assign(enc.input_ids.size(), 0);
    enc.input_ids.insert(enc.input_ids.end(), clm.begin(), clm.end());
    enc.input_ids.push_back(tokenizer.sep_id());
    enc.token_type_ids.resize(enc.input_ids.size(), 1);
    return enc;
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        load_fail("cannot read model file " + path.string());
    }
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
        load_fail("SHA-256 unavailable");
    }
    std::vector<char> buffer(1 << 16);
    while (in) {
        in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
        const auto n = static_cast<std::size_t>(in.gcount());
        if (n > 0) {
            EVP_DigestUpdate(ctx.get(), buffer.data(), n);
        }
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int length = 0;
    EVP_DigestFinal_ex(ctx.get(), digest.data(), &length);
    std::string hex;
    for (unsigned int i = 0; i < length; ++i) {
        char byte[3];
        std::snprintf(byte, sizeof byte, "%02x", digest[i]);
        hex += byte;
    }
    return hex;
}

struct NeuralBackend::Model {
    explicit Model(onnx::Session s) : session(std::move(s)) {}
    onnx::Session session;
    bool has_mask = false;
    bool has_segments = false;
};

NeuralBackend::NeuralBackend(const std::filesystem::path& model_path, std::size_t batch_size)
    : Backend(batch_size) {
    if (model_path.empty()) {
        load_fail("neural backend needs a model path");
    }
    if (!std::filesystem::is_regular_file(model_path)) {
        load_fail("model file not found: " + model_path.string());
    }
    sidecar_ = read_sidecar(sidecar_path(model_path));

    WordPieceOptions options;
    options.do_lower_case = sidecar_.do_lower_case;
    options.strip_accents = sidecar_.strip_accents;
    try {
        tokenizer_ = WordPieceTokenizer::from_file(sidecar_.vocab_path, options);
        if (!tokenizer_.loaded()) {
            load_fail("vocabulary " + sidecar_.vocab_path.string() + " is empty");
        }
        tokenizer_.cls_id();
        tokenizer_.sep_id();
        tokenizer_.pad_id();
        tokenizer_.unk_id();
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ModelLoadFailure) throw;
        load_fail("vocabulary mismatch: " + e.message());
    }
    if (sidecar_.vocab_size && *sidecar_.vocab_size != tokenizer_.vocab_size()) {
        load_fail("vocabulary mismatch: metadata declares " + std::to_string(*sidecar_.vocab_size) +
                  " tokens, " + sidecar_.vocab_path.string() + " has " + std::to_string(tokenizer_.vocab_size()));
    }

    model_ = std::make_unique<Model>(onnx::Session::from_file(model_path));
    const auto& session = model_->session;
    for (auto head : kHeads) {
        if (session.find_output(head) == nullptr) {
            load_fail("model is missing the '" + std::string(head) + "' head");
        }
    }
    if (session.find_input("input_ids") == nullptr) {
        load_fail("model has no 'input_ids' input");
    }
    model_->has_mask = session.find_input("attention_mask") != nullptr;
    model_->has_segments = session.find_input("token_type_ids") != nullptr;
    for (const auto& input : session.inputs()) {
        if (input.name != "input_ids" && input.name != "attention_mask" && input.name != "token_type_ids") {
            load_fail("model has unexpected input '" + input.name + "'");
        }
    }
    const auto meta = session.metadata().find("vocab_size");
    if (meta != session.metadata().end() && std::to_string(tokenizer_.vocab_size()) != meta->second) {
        load_fail("vocabulary mismatch: model metadata declares " + meta->second + " tokens, vocabulary has " +
                  std::to_string(tokenizer_.vocab_size()));
    }
    hash_ = sha256_file(model_path);
}

NeuralBackend::~NeuralBackend() = default;

bool NeuralBackend::fits(std::string_view context, std::string_view claim) const {
    return tokenizer_.count(context) + tokenizer_.count(claim) + 3 <= sidecar_.max_input_tokens;
}

HeadOutputs NeuralBackend::predict_checked(std::string_view context, std::string_view claim) const {
    const auto enc = encode_pair(tokenizer_, context, claim, sidecar_.max_input_tokens);
    return run(std::span(&enc, 1)).front();
}

std::vector<HeadOutputs> NeuralBackend::predict_group(std::span<const TextPair> group, std::size_t offset) const {
    std::vector<PairEncoding> encodings;
    encodings.reserve(group.size());
    for (const auto& pair : group) {
        encodings.push_back(encode_pair(tokenizer_, pair.context, pair.claim, sidecar_.max_input_tokens));
    }
    try {
        return run(encodings);
    } catch (const Error& e) {
        if (group.size() == 1) {
            throw BatchItemError(offset, e);
        }
    }
    // Rerun one by one to attribute the failure.
    std::vector<HeadOutputs> out;
    for (std::size_t i = 0; i < encodings.size(); ++i) {
        try {
            out.push_back(run(std::span(&encodings[i], 1)).front());
        } catch (const Error& e) {
            throw BatchItemError(offset + i, e);
        }
    }
    return out;
}

namespace {

std::vector<double> head_values(const onnx::Tensor& t, std::string_view name, std::size_t batch, std::size_t width) {
    const auto& shape = t.shape();
    const bool ok = (width == 1 && shape.size() == 1 && shape[0] == static_cast<int64_t>(batch)) ||
                    (shape.size() == 2 && shape[0] == static_cast<int64_t>(batch) &&
                     shape[1] == static_cast<int64_t>(width));
    if (!ok) {
        throw Error(ErrorCode::InferenceFailure, "head '" + std::string(name) + "' has shape " +
                                                     onnx::shape_string(shape) + ", expected batch " +
                                                     std::to_string(batch) + " x " + std::to_string(width));
    }
    auto values = t.to_double();
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw Error(ErrorCode::InferenceFailure, "head '" + std::string(name) + "' produced a non-finite value");
        }
    }
    return values;
}

double clamp_unit(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

std::vector<HeadOutputs> NeuralBackend::run(std::span<const PairEncoding> encodings) const {
    const std::size_t batch = encodings.size();
    std::size_t width = 0;
    for (const auto& e : encodings) width = std::max(width, e.input_ids.size());

    const int64_t pad = tokenizer_.pad_id();
    std::vector<int64_t> ids(batch * width, pad);
    std::vector<int64_t> mask(batch * width, 0);
    std::vector<int64_t> segments(batch * width, 0);
    for (std::size_t b = 0; b < batch; ++b) {
        const auto& e = encodings[b];
        std::copy(e.input_ids.begin(), e.input_ids.end(), ids.begin() + static_cast<std::ptrdiff_t>(b * width));
        std::fill_n(mask.begin() + static_cast<std::ptrdiff_t>(b * width), e.input_ids.size(), 1);
        std::copy(e.token_type_ids.begin(), e.token_type_ids.end(),
                  segments.begin() + static_cast<std::ptrdiff_t>(b * width));
    }
    const onnx::Shape shape{static_cast<int64_t>(batch), static_cast<int64_t>(width)};
    std::vector<std::pair<std::string, onnx::Tensor>> feeds;
    feeds.emplace_back("input_ids", onnx::Tensor(shape, std::move(ids)));
    if (model_->has_mask) feeds.emplace_back("attention_mask", onnx::Tensor(shape, std::move(mask)));
    if (model_->has_segments) feeds.emplace_back("token_type_ids", onnx::Tensor(shape, std::move(segments)));

    const auto outputs = model_->session.run(feeds, {"probs3", "prob_bin", "regression"});
    const auto probs = head_values(outputs[0], "probs3", batch, 3);
    const auto binary = head_values(outputs[1], "prob_bin", batch, 1);
    const auto regression = head_values(outputs[2], "regression", batch, 1);

    std::vector<HeadOutputs> result(batch);
    for (std::size_t b = 0; b < batch; ++b) {
        std::array<double, 3> p{probs[b * 3], probs[b * 3 + 1], probs[b * 3 + 2]};
        const double total = p[0] + p[1] + p[2];
        if (std::abs(total - 1.0) > 1e-3 || *std::min_element(p.begin(), p.end()) < -1e-3) {
            throw Error(ErrorCode::InferenceFailure,
                        "head 'probs3' is not a probability distribution (sum " + std::to_string(total) + ")");
        }
        for (auto& v : p) v = clamp_unit(v);
        const double norm = p[0] + p[1] + p[2];
        for (auto& v : p) v /= norm;
        result[b].probs3 = p;
        result[b].prob_bin = clamp_unit(binary[b]);
        result[b].regression = clamp_unit(regression[b]);
    }
    return result;
}

std::unique_ptr<Backend> load_backend(const BackendConfig& config) {
    if (config.kind == BackendKind::Reference) {
        return std::make_unique<ReferenceBackend>(config.batch_size);
    }
    return std::make_unique<NeuralBackend>(config.model_path, config.batch_size);
}

}  // namespace alignru
