#ifndef ALIGNRU_ONNX_TENSOR_HPP
#define ALIGNRU_ONNX_TENSOR_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

namespace alignru::onnx {

using Shape = std::vector<int64_t>;

// Values follow onnx.TensorProto.DataType.
enum class DType : int32_t {
    Float = 1,
    Uint8 = 2,
    Int8 = 3,
    Int32 = 6,
    Int64 = 7,
    Bool = 9,
    Double = 11,
};

std::string dtype_name(DType dtype);

template <typename T>
struct dtype_of;
template <> struct dtype_of<float> { static constexpr DType value = DType::Float; };
template <> struct dtype_of<double> { static constexpr DType value = DType::Double; };
template <> struct dtype_of<int64_t> { static constexpr DType value = DType::Int64; };
template <> struct dtype_of<int32_t> { static constexpr DType value = DType::Int32; };
template <> struct dtype_of<int8_t> { static constexpr DType value = DType::Int8; };
// uint8_t storage doubles as Bool; see Tensor::boolean.
template <> struct dtype_of<uint8_t> { static constexpr DType value = DType::Uint8; };

inline int64_t element_count(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), int64_t{1}, std::multiplies<>());
}

// Row-major strides.
inline std::vector<int64_t> strides_of(const Shape& shape) {
    std::vector<int64_t> strides(shape.size(), 1);
    for (std::size_t i = shape.size(); i-- > 1;) {
        strides[i - 1] = strides[i] * shape[i];
    }
    return strides;
}

std::string shape_string(const Shape& shape);

class Tensor {
public:
    using Storage = std::variant<std::vector<float>, std::vector<double>, std::vector<int64_t>,
                                 std::vector<int32_t>, std::vector<int8_t>, std::vector<uint8_t>>;

    Tensor() : dtype_(DType::Float), storage_(std::vector<float>{}) {}

    template <typename T>
    Tensor(Shape shape, std::vector<T> values)
        : dtype_(dtype_of<T>::value), shape_(std::move(shape)), storage_(std::move(values)) {
        check_size();
    }

    static Tensor boolean(Shape shape, std::vector<uint8_t> values) {
        Tensor t(std::move(shape), std::move(values));
        t.dtype_ = DType::Bool;
        return t;
    }

    template <typename T>
    static Tensor scalar(T value) {
        return Tensor(Shape{}, std::vector<T>{value});
    }

    // Zero-initialized tensor of the given type.
    static Tensor zeros(DType dtype, Shape shape);

    DType dtype() const { return dtype_; }
    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    int64_t size() const { return element_count(shape_); }

    template <typename T>
    std::span<const T> data() const {
        return std::get<std::vector<T>>(storage_);
    }

    template <typename T>
    std::span<T> data() {
        return std::get<std::vector<T>>(storage_);
    }

    template <typename T>
    bool holds() const {
        return std::holds_alternative<std::vector<T>>(storage_);
    }

    // Same data, new shape with equal element count.
    Tensor reshaped(Shape shape) const;
    void reshape_in_place(Shape shape);

    // Integer contents (int64/int32/int8/uint8/bool) widened to int64.
    std::vector<int64_t> to_int64() const;
    // Numeric contents converted to double.
    std::vector<double> to_double() const;

private:
    void check_size() const;

    DType dtype_;
    Shape shape_;
    Storage storage_;
};

// Calls fn.template operator()<T>() with T the storage type of `dtype`.
template <typename Fn>
decltype(auto) dispatch(DType dtype, Fn&& fn) {
    switch (dtype) {
        case DType::Float: return fn.template operator()<float>();
        case DType::Double: return fn.template operator()<double>();
        case DType::Int64: return fn.template operator()<int64_t>();
        case DType::Int32: return fn.template operator()<int32_t>();
        case DType::Int8: return fn.template operator()<int8_t>();
        case DType::Uint8:
        case DType::Bool: return fn.template operator()<uint8_t>();
    }
    throw std::invalid_argument("unsupported tensor element type");
}

}  // namespace alignru::onnx

#endif  // ALIGNRU_ONNX_TENSOR_HPP
