#include "alignru/error.hpp"
#include "alignru/onnx/graph.hpp"

#include "onnx.pb.h"

#include <google/protobuf/io/coded_stream.h>
#include <google/protobuf/io/zero_copy_stream_impl_lite.h>

#include <climits>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace alignru::onnx {

namespace {

[[noreturn]] void fail(const std::string& message) { throw Error(ErrorCode::ModelLoadFailure, message); }

DType convert_dtype(int32_t data_type, const std::string& what) {
    switch (data_type) {
        case ::onnx::TensorProto::FLOAT: return DType::Float;
        case ::onnx::TensorProto::UINT8: return DType::Uint8;
        case ::onnx::TensorProto::INT8: return DType::Int8;
        case ::onnx::TensorProto::INT32: return DType::Int32;
        case ::onnx::TensorProto::INT64: return DType::Int64;
        case ::onnx::TensorProto::BOOL: return DType::Bool;
        case ::onnx::TensorProto::DOUBLE: return DType::Double;
        default: fail(what + ": unsupported element type " + std::to_string(data_type));
    }
}

std::string read_external(const ::onnx::TensorProto& proto, const std::filesystem::path& base_dir) {
    std::string location;
    std::size_t offset = 0;
    std::optional<std::size_t> length;
    for (const auto& entry : proto.external_data()) {
        if (entry.key() == "location") location = entry.value();
        else if (entry.key() == "offset") offset = std::stoull(entry.value());
        else if (entry.key() == "length") length = std::stoull(entry.value());
    }
    if (location.empty()) {
        fail("tensor " + proto.name() + ": external data without a location");
    }
    const auto path = base_dir / location;
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail("tensor " + proto.name() + ": cannot open external data " + path.string());
    }
    in.seekg(0, std::ios::end);
    const auto file_size = static_cast<std::size_t>(in.tellg());
    const std::size_t n = length.value_or(file_size - std::min(offset, file_size));
    if (offset + n > file_size) {
        fail("tensor " + proto.name() + ": external data range exceeds " + path.string());
    }
    std::string bytes(n, '\0');
    in.seekg(static_cast<std::streamoff>(offset));
    in.read(bytes.data(), static_cast<std::streamsize>(n));
    return bytes;
}

template <typename T, typename Field>
std::vector<T> from_field(const Field& field) {
    return std::vector<T>(field.begin(), field.end());
}

Tensor convert_tensor(const ::onnx::TensorProto& proto, const std::filesystem::path& base_dir) {
    const std::string what = "tensor '" + proto.name() + "'";
    const DType dtype = convert_dtype(proto.data_type(), what);
    Shape shape(proto.dims().begin(), proto.dims().end());
    const auto count = static_cast<std::size_t>(element_count(shape));

    const bool external = proto.data_location() == ::onnx::TensorProto::EXTERNAL;
    if (external || proto.has_raw_data()) {
        const std::string bytes = external ? read_external(proto, base_dir) : proto.raw_data();
        return dispatch(dtype, [&]<typename T>() {
            if (bytes.size() != count * sizeof(T)) {
                fail(what + ": raw data holds " + std::to_string(bytes.size()) + " bytes, expected " +
                     std::to_string(count * sizeof(T)));
            }
            std::vector<T> values(count);
            if (count != 0) {
                std::memcpy(values.data(), bytes.data(), bytes.size());
            }
            if constexpr (std::is_same_v<T, uint8_t>) {
                if (dtype == DType::Bool) {
                    return Tensor::boolean(shape, std::move(values));
                }
            }
            return Tensor(shape, std::move(values));
        });
    }

    Tensor t;
    switch (dtype) {
        case DType::Float: t = Tensor(shape, from_field<float>(proto.float_data())); break;
        case DType::Double: t = Tensor(shape, from_field<double>(proto.double_data())); break;
        case DType::Int64: t = Tensor(shape, from_field<int64_t>(proto.int64_data())); break;
        case DType::Int32: t = Tensor(shape, from_field<int32_t>(proto.int32_data())); break;
        case DType::Int8: t = Tensor(shape, from_field<int8_t>(proto.int32_data())); break;
        case DType::Uint8: t = Tensor(shape, from_field<uint8_t>(proto.int32_data())); break;
        case DType::Bool: t = Tensor::boolean(shape, from_field<uint8_t>(proto.int32_data())); break;
    }
    return t;
}

Attribute convert_attribute(const ::onnx::AttributeProto& proto, const std::filesystem::path& base_dir,
                            const std::string& node) {
    using A = ::onnx::AttributeProto;
    switch (proto.type()) {
        case A::INT: return {proto.i()};
        case A::FLOAT: return {proto.f()};
        case A::STRING: return {proto.s()};
        case A::TENSOR: return {convert_tensor(proto.t(), base_dir)};
        case A::INTS: return {std::vector<int64_t>(proto.ints().begin(), proto.ints().end())};
        case A::FLOATS: return {std::vector<float>(proto.floats().begin(), proto.floats().end())};
        case A::STRINGS: return {std::vector<std::string>(proto.strings().begin(), proto.strings().end())};
        default:
            fail("node " + node + ": attribute '" + proto.name() + "' has unsupported type " +
                 std::to_string(proto.type()));
    }
}

ValueInfo convert_value_info(const ::onnx::ValueInfoProto& proto) {
    ValueInfo info;
    info.name = proto.name();
    if (proto.type().has_tensor_type()) {
        const auto& tt = proto.type().tensor_type();
        info.dtype = convert_dtype(tt.elem_type(), "value '" + proto.name() + "'");
        for (const auto& dim : tt.shape().dim()) {
            if (dim.has_dim_value()) {
                info.dims.emplace_back(dim.dim_value());
            } else {
                info.dims.emplace_back(std::nullopt);
            }
        }
    }
    return info;
}

}  // namespace

Graph parse_model(std::string_view bytes, const std::filesystem::path& base_dir) {
    ::onnx::ModelProto model;
    google::protobuf::io::ArrayInputStream raw(bytes.data(), static_cast<int>(bytes.size()));
    google::protobuf::io::CodedInputStream coded(&raw);
    coded.SetTotalBytesLimit(INT_MAX);
    if (!model.ParseFromCodedStream(&coded) || !model.has_graph()) {
        fail("not a valid ONNX model");
    }

    Graph graph;
    for (const auto& opset : model.opset_import()) {
        if (opset.domain().empty() || opset.domain() == "ai.onnx") {
            graph.opset = opset.version();
        }
    }
    if (graph.opset == 0) {
        fail("model does not import the default ONNX operator set");
    }
    for (const auto& prop : model.metadata_props()) {
        graph.metadata[prop.key()] = prop.value();
    }

    const auto& g = model.graph();
    for (const auto& init : g.initializer()) {
        graph.initializers.emplace(init.name(), convert_tensor(init, base_dir));
    }
    for (const auto& input : g.input()) {
        if (graph.initializers.count(input.name()) == 0) {
            graph.inputs.push_back(convert_value_info(input));
        }
    }
    for (const auto& output : g.output()) {
        graph.outputs.push_back(convert_value_info(output));
    }
    for (std::size_t i = 0; i < static_cast<std::size_t>(g.node_size()); ++i) {
        const auto& proto = g.node(static_cast<int>(i));
        Node node;
        node.name = proto.name().empty() ? proto.op_type() + "_" + std::to_string(i) : proto.name();
        node.op_type = proto.op_type();
        node.domain = proto.domain();
        node.inputs.assign(proto.input().begin(), proto.input().end());
        node.outputs.assign(proto.output().begin(), proto.output().end());
        for (const auto& attr : proto.attribute()) {
            node.attributes.emplace(attr.name(), convert_attribute(attr, base_dir, node.name));
        }
        graph.nodes.push_back(std::move(node));
    }
    return graph;
}

Graph load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail("cannot read model file " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    try {
        return parse_model(buffer.str(), path.parent_path());
    } catch (const Error& e) {
        fail(path.string() + ": " + e.message());
    }
}

}  // namespace alignru::onnx
