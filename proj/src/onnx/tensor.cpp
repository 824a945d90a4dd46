#include "alignru/onnx/tensor.hpp"

#include <sstream>

namespace alignru::onnx {

std::string dtype_name(DType dtype) {
    switch (dtype) {
        case DType::Float: return "float32";
        case DType::Uint8: return "uint8";
        case DType::Int8: return "int8";
        case DType::Int32: return "int32";
        case DType::Int64: return "int64";
        case DType::Bool: return "bool";
        case DType::Double: return "float64";
    }
    return "dtype(" + std::to_string(static_cast<int32_t>(dtype)) + ")";
}

std::string shape_string(const Shape& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        out << (i ? "," : "") << shape[i];
    }
    out << ']';
    return out.str();
}

Tensor Tensor::zeros(DType dtype, Shape shape) {
    const auto n = static_cast<std::size_t>(element_count(shape));
    Tensor t = dispatch(dtype, [&]<typename T>() { return Tensor(shape, std::vector<T>(n)); });
    t.dtype_ = dtype;
    return t;
}

void Tensor::check_size() const {
    for (auto d : shape_) {
        if (d < 0) {
            throw std::invalid_argument("negative dimension in shape " + shape_string(shape_));
        }
    }
    const auto stored = std::visit([](const auto& v) { return v.size(); }, storage_);
    if (static_cast<int64_t>(stored) != element_count(shape_)) {
        throw std::invalid_argument("tensor of shape " + shape_string(shape_) + " holds " + std::to_string(stored) +
                                    " elements");
    }
}

Tensor Tensor::reshaped(Shape shape) const {
    Tensor t = *this;
    t.reshape_in_place(std::move(shape));
    return t;
}

void Tensor::reshape_in_place(Shape shape) {
    if (element_count(shape) != size()) {
        throw std::invalid_argument("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    }
    shape_ = std::move(shape);
}

std::vector<int64_t> Tensor::to_int64() const {
    return std::visit(
        [](const auto& v) -> std::vector<int64_t> {
            using T = typename std::decay_t<decltype(v)>::value_type;
            if constexpr (std::is_floating_point_v<T>) {
                throw std::invalid_argument("expected an integer tensor");
            } else {
                return std::vector<int64_t>(v.begin(), v.end());
            }
        },
        storage_);
}

std::vector<double> Tensor::to_double() const {
    return std::visit([](const auto& v) { return std::vector<double>(v.begin(), v.end()); }, storage_);
}

}  // namespace alignru::onnx
