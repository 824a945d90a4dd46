#ifndef ALIGNRU_ONNX_GRAPH_HPP
#define ALIGNRU_ONNX_GRAPH_HPP

// Minimal ONNX inference: model parsing into an in-memory graph and a
// session that executes it on the CPU. Covers the operator set emitted for
// BERT-family encoders with classification/regression heads.

#include "alignru/onnx/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

namespace alignru::onnx {

struct Attribute {
    std::variant<int64_t, float, std::string, Tensor, std::vector<int64_t>, std::vector<float>,
                 std::vector<std::string>>
        value;
};

struct Node {
    std::string name;
    std::string op_type;
    std::string domain;
    std::vector<std::string> inputs;   // "" marks an omitted optional input
    std::vector<std::string> outputs;
    std::map<std::string, Attribute> attributes;

    bool has_attr(const std::string& key) const { return attributes.count(key) != 0; }
    int64_t attr_int(const std::string& key, int64_t fallback) const;
    float attr_float(const std::string& key, float fallback) const;
    std::string attr_string(const std::string& key, const std::string& fallback) const;
    std::optional<std::vector<int64_t>> attr_ints(const std::string& key) const;
    const Tensor* attr_tensor(const std::string& key) const;
    std::string label() const;
};

struct ValueInfo {
    std::string name;
    DType dtype = DType::Float;
    // Unknown or symbolic dimensions are nullopt.
    std::vector<std::optional<int64_t>> dims;
};

struct Graph {
    std::vector<Node> nodes;
    std::unordered_map<std::string, Tensor> initializers;
    std::vector<ValueInfo> inputs;  // excludes initializers
    std::vector<ValueInfo> outputs;
    int64_t opset = 0;  // default-domain opset
    std::map<std::string, std::string> metadata;
};

// Parses a serialized ModelProto. Tensors stored as external data are
// resolved relative to `base_dir`. Throws Error(ModelLoadFailure).
Graph parse_model(std::string_view bytes, const std::filesystem::path& base_dir = {});
Graph load_model(const std::filesystem::path& path);

class Session {
public:
    explicit Session(Graph graph);
    static Session from_file(const std::filesystem::path& path) { return Session(load_model(path)); }

    Session(Session&&) noexcept;
    Session& operator=(Session&&) noexcept;
    ~Session();

    const std::vector<ValueInfo>& inputs() const;
    const std::vector<ValueInfo>& outputs() const;
    const ValueInfo* find_input(std::string_view name) const;
    const ValueInfo* find_output(std::string_view name) const;
    int64_t opset() const;
    const std::map<std::string, std::string>& metadata() const;
    const std::unordered_map<std::string, Tensor>& constants() const;

    // Runs the graph; every graph input must be fed. Thread-safe: a session
    // holds no per-run state. Throws Error(InferenceFailure) naming the node.
    std::vector<Tensor> run(const std::vector<std::pair<std::string, Tensor>>& feeds,
                            const std::vector<std::string>& output_names) const;

    struct Plan;

private:
    std::unique_ptr<Plan> plan_;
};

}  // namespace alignru::onnx

#endif  // ALIGNRU_ONNX_GRAPH_HPP
