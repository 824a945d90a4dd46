#ifndef ALIGNRU_BACKEND_HPP
#define ALIGNRU_BACKEND_HPP

#include "alignru/error.hpp"
#include "alignru/tokenizer.hpp"
#include "alignru/unicode.hpp"

#include <array>
#include <cstddef>
#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

namespace alignru {

enum class NliClass : std::size_t { Aligned = 0, Neutral = 1, Contradict = 2 };

// Prediction of the three task heads for one (context, claim) pair.
struct HeadOutputs {
    std::array<double, 3> probs3{0.0, 1.0, 0.0};  // aligned, neutral, contradict
    double prob_bin = 0.0;                          // P(aligned) from the binary head
    double regression = 0.0;                        // similarity in [0, 1]

    double p_aligned() const { return probs3[0]; }
    double p_neutral() const { return probs3[1]; }
    double p_contradict() const { return probs3[2]; }

    friend bool operator==(const HeadOutputs&, const HeadOutputs&) = default;
};

enum class BackendKind { Reference, Neural };

inline std::string_view to_string(BackendKind kind) {
    return kind == BackendKind::Reference ? "reference" : "neural";
}

inline std::optional<BackendKind> parse_backend_kind(std::string_view name) {
    if (name == "reference") return BackendKind::Reference;
    if (name == "neural") return BackendKind::Neural;
    return std::nullopt;
}

struct BackendConfig {
    BackendKind kind = BackendKind::Reference;
    std::filesystem::path model_path;
    std::size_t batch_size = 16;
};

struct TextPair {
    std::string context;
    std::string claim;
};

class Backend {
public:
    explicit Backend(std::size_t batch_size) : batch_size_(batch_size) {
        if (batch_size_ == 0) {
            throw Error(ErrorCode::InvalidArgument, "batch_size must be >= 1");
        }
    }
    virtual ~Backend() = default;

    Backend(const Backend&) = delete;
    Backend& operator=(const Backend&) = delete;

    virtual BackendKind kind() const = 0;
    virtual const Tokenizer& tokenizer() const = 0;

    // Largest encoded pair the model accepts; unbounded for backends without a limit.
    virtual std::size_t max_input_tokens() const { return std::numeric_limits<std::size_t>::max(); }

    // Whether the pair, encoded with special tokens, fits max_input_tokens untruncated.
    virtual bool fits(std::string_view /*context*/, std::string_view /*claim*/) const { return true; }

    virtual std::string model_hash() const = 0;

    std::size_t batch_size() const { return batch_size_; }

    HeadOutputs predict(std::string_view context, std::string_view claim) const {
        check_input(context, claim);
        return predict_checked(context, claim);
    }

    // Output order matches input order; failures carry the index of the pair.
    std::vector<HeadOutputs> predict_batch(std::span<const TextPair> pairs) const {
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            try {
                check_input(pairs[i].context, pairs[i].claim);
            } catch (const Error& e) {
                throw BatchItemError(i, e);
            }
        }
        std::vector<HeadOutputs> out;
        out.reserve(pairs.size());
        for (std::size_t offset = 0; offset < pairs.size(); offset += batch_size_) {
            const auto group = pairs.subspan(offset, std::min(batch_size_, pairs.size() - offset));
            auto results = predict_group(group, offset);
            out.insert(out.end(), results.begin(), results.end());
        }
        return out;
    }

protected:
    virtual HeadOutputs predict_checked(std::string_view context, std::string_view claim) const = 0;

    // One batch of at most batch_size pairs. The default evaluates pairs one by one.
    virtual std::vector<HeadOutputs> predict_group(std::span<const TextPair> group, std::size_t offset) const {
        std::vector<HeadOutputs> out;
        out.reserve(group.size());
        for (std::size_t i = 0; i < group.size(); ++i) {
            try {
                out.push_back(predict_checked(group[i].context, group[i].claim));
            } catch (const Error& e) {
                throw BatchItemError(offset + i, e);
            }
        }
        return out;
    }

private:
    static void check_input(std::string_view context, std::string_view claim) {
        if (unicode::is_blank(context)) {
            throw Error(ErrorCode::EmptyInput, "context is empty");
        }
        if (unicode::is_blank(claim)) {
            throw Error(ErrorCode::EmptyInput, "claim is empty");
        }
    }

    std::size_t batch_size_;
};

// Deterministic lexical-coverage backend. With T(x) the set of lowercased
// whitespace tokens, coverage c = |T(claim) ∩ T(context)| / |T(claim)| and
// every head reports c (p_contradict is always 0).
class ReferenceBackend final : public Backend {
public:
    explicit ReferenceBackend(std::size_t batch_size = 16) : Backend(batch_size) {}

    BackendKind kind() const override { return BackendKind::Reference; }
    const Tokenizer& tokenizer() const override { return tokenizer_; }
    std::string model_hash() const override { return "reference"; }

    static double coverage(std::string_view context, std::string_view claim) {
        const auto context_tokens = token_set(context);
        const auto claim_tokens = token_set(claim);
        if (claim_tokens.empty()) {
            return 0.0;
        }
        std::size_t hits = 0;
        for (const auto& t : claim_tokens) {
            hits += context_tokens.count(t);
        }
        return static_cast<double>(hits) / static_cast<double>(claim_tokens.size());
    }

protected:
    HeadOutputs predict_checked(std::string_view context, std::string_view claim) const override {
        const double c = coverage(context, claim);
        HeadOutputs out;
        out.probs3 = {c, 1.0 - c, 0.0};
        out.prob_bin = c;
        out.regression = c;
        return out;
    }

private:
    static std::unordered_set<std::string> token_set(std::string_view text) {
        std::unordered_set<std::string> tokens;
        for (auto piece : unicode::split_whitespace(text)) {
            tokens.insert(unicode::to_lower(piece));
        }
        return tokens;
    }

    WhitespaceTokenizer tokenizer_;
};

// Builds the backend described by `config`. Neural models are loaded and
// validated eagerly; failures raise ModelLoadFailure naming the cause.
std::unique_ptr<Backend> load_backend(const BackendConfig& config);

}  // namespace alignru

#endif  // ALIGNRU_BACKEND_HPP
