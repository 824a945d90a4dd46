#ifndef ALIGNRU_NEURAL_BACKEND_HPP
#define ALIGNRU_NEURAL_BACKEND_HPP

#include "alignru/backend.hpp"
#include "alignru/tokenizer.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace alignru {

// JSON metadata shipped next to the serialized model.
struct ModelSidecar {
    std::size_t max_input_tokens = 0;
    std::filesystem::path vocab_path;  // resolved against the sidecar directory
    bool do_lower_case = false;
    std::optional<bool> strip_accents;
    std::optional<std::size_t> vocab_size;
};

// "<model>.json", falling back to the model path with a .json extension.
std::filesystem::path sidecar_path(const std::filesystem::path& model_path);
ModelSidecar read_sidecar(const std::filesystem::path& path);

// Encoded sentence pair: [CLS] context [SEP] claim [SEP].
struct PairEncoding {
    std::vector<int64_t> input_ids;
    std::vector<int64_t> token_type_ids;
    std::size_t context_tokens = 0;  // kept after truncation
    bool truncated = false;
};

// Truncates the context first; the claim is cut only if it alone overflows.
PairEncoding encode_pair(const WordPieceTokenizer& tokenizer, std::string_view context, std::string_view claim,
                         std::size_t max_tokens);

std::string sha256_file(const std::filesystem::path& path);

class NeuralBackend final : public Backend {
public:
    NeuralBackend(const std::filesystem::path& model_path, std::size_t batch_size = 16);
    ~NeuralBackend() override;

    BackendKind kind() const override { return BackendKind::Neural; }
    const Tokenizer& tokenizer() const override { return tokenizer_; }
    std::size_t max_input_tokens() const override { return sidecar_.max_input_tokens; }
    bool fits(std::string_view context, std::string_view claim) const override;
    std::string model_hash() const override { return hash_; }

    const WordPieceTokenizer& wordpiece() const { return tokenizer_; }
    const ModelSidecar& sidecar() const { return sidecar_; }

protected:
    HeadOutputs predict_checked(std::string_view context, std::string_view claim) const override;
    std::vector<HeadOutputs> predict_group(std::span<const TextPair> group, std::size_t offset) const override;

private:
    std::vector<HeadOutputs> run(std::span<const PairEncoding> encodings) const;

    struct Model;
    ModelSidecar sidecar_;
    WordPieceTokenizer tokenizer_;
    std::unique_ptr<Model> model_;
    std::string hash_;
};

}  // namespace alignru

#endif  // ALIGNRU_NEURAL_BACKEND_HPP
