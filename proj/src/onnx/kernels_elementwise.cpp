#include "kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <type_traits>

namespace alignru::onnx {

namespace {

template <typename T>
constexpr bool is_float_v = std::is_floating_point_v<T>;

void require_same_dtype(const Tensor& a, const Tensor& b) {
    if (a.dtype() != b.dtype()) {
        kernel_fail("operand types differ: " + dtype_name(a.dtype()) + " vs " + dtype_name(b.dtype()));
    }
}

// Elementwise a op b with broadcasting; R is the result storage type.
template <typename T, typename R, typename Op>
std::vector<R> binary_map(const Tensor& a, const Tensor& b, const Shape& out, Op op) {
    const auto A = a.data<T>();
    const auto B = b.data<T>();
    std::vector<R> result(static_cast<std::size_t>(element_count(out)));
    if (a.shape() == out && b.shape() == out) {
        for (std::size_t i = 0; i < result.size(); ++i) result[i] = static_cast<R>(op(A[i], B[i]));
    } else if (a.shape() == out && b.size() == 1) {
        const T y = B[0];
        for (std::size_t i = 0; i < result.size(); ++i) result[i] = static_cast<R>(op(A[i], y));
    } else if (b.shape() == out && a.size() == 1) {
        const T x = A[0];
        for (std::size_t i = 0; i < result.size(); ++i) result[i] = static_cast<R>(op(x, B[i]));
    } else {
        broadcast_for_each<2>(out, {&a.shape(), &b.shape()}, [&](int64_t i, const std::array<int64_t, 2>& o) {
            result[i] = static_cast<R>(op(A[o[0]], B[o[1]]));
        });
    }
    return result;
}

enum class Accept { Numeric, FloatOnly, Any };

template <Accept accept, typename Op>
Tensor arithmetic(const Tensor& a, const Tensor& b, Op op) {
    require_same_dtype(a, b);
    if (a.dtype() == DType::Bool && accept != Accept::Any) {
        kernel_fail("arithmetic on bool tensors");
    }
    const Shape out = broadcast_shape(a.shape(), b.shape());
    return dispatch(a.dtype(), [&]<typename T>() -> Tensor {
        if constexpr (accept == Accept::FloatOnly && !is_float_v<T>) {
            kernel_fail("expected a floating-point tensor, got " + dtype_name(a.dtype()));
        } else {
            return make_tensor_like(a.dtype(), out, binary_map<T, T>(a, b, out, op));
        }
    });
}

template <typename Op>
Tensor compare(const Tensor& a, const Tensor& b, Op op) {
    require_same_dtype(a, b);
    const Shape out = broadcast_shape(a.shape(), b.shape());
    return dispatch(a.dtype(), [&]<typename T>() {
        return Tensor::boolean(out, binary_map<T, uint8_t>(a, b, out, [&](T x, T y) { return op(x, y) ? 1 : 0; }));
    });
}

template <typename Op>
std::vector<Tensor> binary_kernel(const KernelContext& ctx, Op op) {
    return {arithmetic<Accept::Numeric>(ctx.input(0), ctx.input(1), op)};
}

std::vector<Tensor> add(const KernelContext& ctx) {
    return binary_kernel(ctx, [](auto x, auto y) { return x + y; });
}
std::vector<Tensor> sub(const KernelContext& ctx) {
    return binary_kernel(ctx, [](auto x, auto y) { return x - y; });
}
std::vector<Tensor> mul(const KernelContext& ctx) {
    return binary_kernel(ctx, [](auto x, auto y) { return x * y; });
}
std::vector<Tensor> div(const KernelContext& ctx) {
    return binary_kernel(ctx, [](auto x, auto y) {
        if constexpr (std::is_integral_v<decltype(y)>) {
            if (y == 0) {
                kernel_fail("integer division by zero");
            }
        }
        return x / y;
    });
}
std::vector<Tensor> max(const KernelContext& ctx) {
    Tensor acc = ctx.input(0);
    for (std::size_t i = 1; i < ctx.input_count(); ++i) {
        acc = arithmetic<Accept::Numeric>(acc, ctx.input(i), [](auto x, auto y) { return std::max(x, y); });
    }
    return {acc};
}
std::vector<Tensor> min(const KernelContext& ctx) {
    Tensor acc = ctx.input(0);
    for (std::size_t i = 1; i < ctx.input_count(); ++i) {
        acc = arithmetic<Accept::Numeric>(acc, ctx.input(i), [](auto x, auto y) { return std::min(x, y); });
    }
    return {acc};
}
std::vector<Tensor> sum(const KernelContext& ctx) {
    Tensor acc = ctx.input(0);
    for (std::size_t i = 1; i < ctx.input_count(); ++i) {
        acc = arithmetic<Accept::Numeric>(acc, ctx.input(i), [](auto x, auto y) { return x + y; });
    }
    return {acc};
}

std::vector<Tensor> pow(const KernelContext& ctx) {
    const Tensor& base = ctx.input(0);
    const Tensor& exponent = ctx.input(1);
    const Shape out = broadcast_shape(base.shape(), exponent.shape());
    const auto exps = exponent.to_double();
    const Tensor exp_as_double(exponent.shape(), exps);
    return {dispatch(base.dtype(), [&]<typename T>() -> Tensor {
        if constexpr (std::is_same_v<T, uint8_t>) {
            kernel_fail("Pow on uint8/bool");
        } else {
            const auto B = base.data<T>();
            const auto E = exp_as_double.data<double>();
            std::vector<T> result(static_cast<std::size_t>(element_count(out)));
            broadcast_for_each<2>(out, {&base.shape(), &exponent.shape()}, [&](int64_t i, const std::array<int64_t, 2>& o) {
                const double e = E[o[1]];
                if constexpr (std::is_same_v<T, float>) {
                    // Common exporter patterns; exact for squares.
                    result[i] = e == 2.0 ? B[o[0]] * B[o[0]] : std::pow(B[o[0]], static_cast<float>(e));
                } else {
                    result[i] = static_cast<T>(std::pow(static_cast<double>(B[o[0]]), e));
                }
            });
            return Tensor(out, std::move(result));
        }
    })};
}

std::vector<Tensor> equal(const KernelContext& ctx) {
    return {compare(ctx.input(0), ctx.input(1), [](auto x, auto y) { return x == y; })};
}
std::vector<Tensor> less(const KernelContext& ctx) {
    return {compare(ctx.input(0), ctx.input(1), [](auto x, auto y) { return x < y; })};
}
std::vector<Tensor> less_equal(const KernelContext& ctx) {
    return {compare(ctx.input(0), ctx.input(1), [](auto x, auto y) { return x <= y; })};
}
std::vector<Tensor> greater(const KernelContext& ctx) {
    return {compare(ctx.input(0), ctx.input(1), [](auto x, auto y) { return x > y; })};
}
std::vector<Tensor> greater_equal(const KernelContext& ctx) {
    return {compare(ctx.input(0), ctx.input(1), [](auto x, auto y) { return x >= y; })};
}

template <typename Op>
std::vector<Tensor> logical(const KernelContext& ctx, Op op) {
    const Tensor& a = ctx.input(0);
    const Tensor& b = ctx.input(1);
    if (a.dtype() != DType::Bool || b.dtype() != DType::Bool) {
        kernel_fail("logical operators need bool tensors");
    }
    const Shape out = broadcast_shape(a.shape(), b.shape());
    return {Tensor::boolean(out, binary_map<uint8_t, uint8_t>(a, b, out, [&](uint8_t x, uint8_t y) {
        return op(x != 0, y != 0) ? 1 : 0;
    }))};
}

std::vector<Tensor> logical_and(const KernelContext& ctx) {
    return logical(ctx, [](bool x, bool y) { return x && y; });
}
std::vector<Tensor> logical_or(const KernelContext& ctx) {
    return logical(ctx, [](bool x, bool y) { return x || y; });
}
std::vector<Tensor> logical_xor(const KernelContext& ctx) {
    return logical(ctx, [](bool x, bool y) { return x != y; });
}

std::vector<Tensor> logical_not(const KernelContext& ctx) {
    const Tensor& a = ctx.input(0);
    if (a.dtype() != DType::Bool) {
        kernel_fail("Not needs a bool tensor");
    }
    std::vector<uint8_t> out(a.data<uint8_t>().begin(), a.data<uint8_t>().end());
    for (auto& v : out) v = v ? 0 : 1;
    return {Tensor::boolean(a.shape(), std::move(out))};
}

// Unary map over floating-point tensors.
template <typename Op>
std::vector<Tensor> float_unary(const KernelContext& ctx, Op op) {
    const Tensor& x = ctx.input(0);
    return {dispatch(x.dtype(), [&]<typename T>() -> Tensor {
        if constexpr (!is_float_v<T>) {
            kernel_fail(ctx.node().op_type + " needs a floating-point tensor, got " + dtype_name(x.dtype()));
        } else {
            const auto in = x.data<T>();
            std::vector<T> out(in.size());
            for (std::size_t i = 0; i < in.size(); ++i) out[i] = static_cast<T>(op(in[i]));
            return Tensor(x.shape(), std::move(out));
        }
    })};
}

// Unary map over any signed numeric tensor.
template <typename Op>
std::vector<Tensor> numeric_unary(const KernelContext& ctx, Op op) {
    const Tensor& x = ctx.input(0);
    if (x.dtype() == DType::Bool) {
        kernel_fail(ctx.node().op_type + " on a bool tensor");
    }
    return {dispatch(x.dtype(), [&]<typename T>() {
        const auto in = x.data<T>();
        std::vector<T> out(in.size());
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = static_cast<T>(op(in[i]));
        return Tensor(x.shape(), std::move(out));
    })};
}

std::vector<Tensor> sqrt_kernel(const KernelContext& ctx) {
    return float_unary(ctx, [](auto v) { return std::sqrt(v); });
}
std::vector<Tensor> erf_kernel(const KernelContext& ctx) {
    return float_unary(ctx, [](auto v) { return std::erf(v); });
}
std::vector<Tensor> tanh_kernel(const KernelContext& ctx) {
    return float_unary(ctx, [](auto v) { return std::tanh(v); });
}
std::vector<Tensor> exp_kernel(const KernelContext& ctx) {
    return float_unary(ctx, [](auto v) { return std::exp(v); });
}
std::vector<Tensor> log_kernel(const KernelContext& ctx) {
    return float_unary(ctx, [](auto v) { return std::log(v); });
}
std::vector<Tensor> reciprocal(const KernelContext& ctx) {
    return float_unary(ctx, [](auto v) { return decltype(v)(1) / v; });
}
std::vector<Tensor> floor_kernel(const KernelContext& ctx) {
    return float_unary(ctx, [](auto v) { return std::floor(v); });
}
std::vector<Tensor> ceil_kernel(const KernelContext& ctx) {
    return float_unary(ctx, [](auto v) { return std::ceil(v); });
}
std::vector<Tensor> sigmoid(const KernelContext& ctx) {
    return float_unary(ctx, [](auto v) {
        using T = decltype(v);
        // Split by sign so exp never overflows.
        if (v >= T(0)) {
            return T(1) / (T(1) + std::exp(-v));
        }
        const T e = std::exp(v);
        return e / (T(1) + e);
    });
}
std::vector<Tensor> softplus(const KernelContext& ctx) {
    return float_unary(ctx, [](auto v) { return std::log1p(std::exp(-std::abs(v))) + std::max(v, decltype(v)(0)); });
}
std::vector<Tensor> relu(const KernelContext& ctx) {
    return numeric_unary(ctx, [](auto v) { return v > 0 ? v : decltype(v)(0); });
}
std::vector<Tensor> neg(const KernelContext& ctx) {
    return numeric_unary(ctx, [](auto v) { return -v; });
}
std::vector<Tensor> abs_kernel(const KernelContext& ctx) {
    return numeric_unary(ctx, [](auto v) { return v < 0 ? -v : v; });
}
std::vector<Tensor> sign(const KernelContext& ctx) {
    return numeric_unary(ctx, [](auto v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); });
}

std::vector<Tensor> gelu(const KernelContext& ctx) {
    const bool tanh_approx = ctx.node().attr_string("approximate", "none") == "tanh";
    if (tanh_approx) {
        return float_unary(ctx, [](auto v) {
            using T = decltype(v);
            const T c = static_cast<T>(0.7978845608028654);  // sqrt(2 / pi)
            return T(0.5) * v * (T(1) + std::tanh(c * (v + T(0.044715) * v * v * v)));
        });
    }
    return float_unary(ctx, [](auto v) {
        using T = decltype(v);
        return T(0.5) * v * (T(1) + std::erf(v * static_cast<T>(0.7071067811865476)));
    });
}

std::vector<Tensor> leaky_relu(const KernelContext& ctx) {
    const float alpha = ctx.node().attr_float("alpha", 0.01f);
    return float_unary(ctx, [alpha](auto v) { return v >= 0 ? v : static_cast<decltype(v)>(alpha) * v; });
}

std::vector<Tensor> is_nan(const KernelContext& ctx) {
    const Tensor& x = ctx.input(0);
    return {dispatch(x.dtype(), [&]<typename T>() -> Tensor {
        const auto in = x.data<T>();
        std::vector<uint8_t> out(in.size(), 0);
        if constexpr (is_float_v<T>) {
            for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::isnan(in[i]) ? 1 : 0;
        }
        return Tensor::boolean(x.shape(), std::move(out));
    })};
}

std::vector<Tensor> is_inf(const KernelContext& ctx) {
    const Tensor& x = ctx.input(0);
    const bool detect_pos = ctx.node().attr_int("detect_positive", 1) != 0;
    const bool detect_neg = ctx.node().attr_int("detect_negative", 1) != 0;
    return {dispatch(x.dtype(), [&]<typename T>() -> Tensor {
        const auto in = x.data<T>();
        std::vector<uint8_t> out(in.size(), 0);
        if constexpr (is_float_v<T>) {
            for (std::size_t i = 0; i < in.size(); ++i) {
                out[i] = std::isinf(in[i]) && ((in[i] > 0 && detect_pos) || (in[i] < 0 && detect_neg)) ? 1 : 0;
            }
        }
        return Tensor::boolean(x.shape(), std::move(out));
    })};
}

std::vector<Tensor> clip(const KernelContext& ctx) {
    const Tensor& x = ctx.input(0);
    return {dispatch(x.dtype(), [&]<typename T>() -> Tensor {
        T lo = std::numeric_limits<T>::lowest();
        T hi = std::numeric_limits<T>::max();
        if (ctx.opset() < 11) {
            lo = static_cast<T>(ctx.node().attr_float("min", static_cast<float>(lo)));
            hi = static_cast<T>(ctx.node().attr_float("max", static_cast<float>(hi)));
        } else {
            if (ctx.has_input(1)) lo = static_cast<T>(ctx.input(1).to_double().at(0));
            if (ctx.has_input(2)) hi = static_cast<T>(ctx.input(2).to_double().at(0));
        }
        const auto in = x.data<T>();
        std::vector<T> out(in.size());
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = std::min(std::max(in[i], lo), hi);
        return make_tensor_like(x.dtype(), x.shape(), std::move(out));
    })};
}

std::vector<Tensor> where(const KernelContext& ctx) {
    const Tensor& cond = ctx.input(0);
    const Tensor& x = ctx.input(1);
    const Tensor& y = ctx.input(2);
    if (cond.dtype() != DType::Bool) {
        kernel_fail("Where condition must be bool");
    }
    require_same_dtype(x, y);
    const Shape out = broadcast_shape(broadcast_shape(cond.shape(), x.shape()), y.shape());
    return {dispatch(x.dtype(), [&]<typename T>() {
        const auto C = cond.data<uint8_t>();
        const auto X = x.data<T>();
        const auto Y = y.data<T>();
        std::vector<T> result(static_cast<std::size_t>(element_count(out)));
        broadcast_for_each<3>(out, {&cond.shape(), &x.shape(), &y.shape()},
                              [&](int64_t i, const std::array<int64_t, 3>& o) { result[i] = C[o[0]] ? X[o[1]] : Y[o[2]]; });
        return make_tensor_like(x.dtype(), out, std::move(result));
    })};
}

std::vector<Tensor> cast(const KernelContext& ctx) {
    const Tensor& x = ctx.input(0);
    const auto to = static_cast<DType>(ctx.node().attr_int("to", 0));
    return {dispatch(to, [&]<typename To>() {
        return dispatch(x.dtype(), [&]<typename From>() {
            const auto in = x.data<From>();
            std::vector<To> out(in.size());
            for (std::size_t i = 0; i < in.size(); ++i) {
                if (to == DType::Bool) {
                    out[i] = in[i] != From(0) ? 1 : 0;
                } else {
                    out[i] = static_cast<To>(in[i]);
                }
            }
            return make_tensor_like(to, x.shape(), std::move(out));
        });
    })};
}

}  // namespace

void register_elementwise_kernels(KernelRegistry& r) {
    r["Add"] = add;
    r["Sub"] = sub;
    r["Mul"] = mul;
    r["Div"] = div;
    r["Pow"] = pow;
    r["Max"] = max;
    r["Min"] = min;
    r["Sum"] = sum;
    r["Equal"] = equal;
    r["Less"] = less;
    r["LessOrEqual"] = less_equal;
    r["Greater"] = greater;
    r["GreaterOrEqual"] = greater_equal;
    r["And"] = logical_and;
    r["Or"] = logical_or;
    r["Xor"] = logical_xor;
    r["Not"] = logical_not;
    r["Sqrt"] = sqrt_kernel;
    r["Erf"] = erf_kernel;
    r["Tanh"] = tanh_kernel;
    r["Exp"] = exp_kernel;
    r["Log"] = log_kernel;
    r["Reciprocal"] = reciprocal;
    r["Floor"] = floor_kernel;
    r["Ceil"] = ceil_kernel;
    r["Sigmoid"] = sigmoid;
    r["Softplus"] = softplus;
    r["Relu"] = relu;
    r["LeakyRelu"] = leaky_relu;
    r["Gelu"] = gelu;
    r["Neg"] = neg;
    r["Abs"] = abs_kernel;
    r["Sign"] = sign;
    r["IsNaN"] = is_nan;
    r["IsInf"] = is_inf;
    r["Clip"] = clip;
    r["Where"] = where;
    r["Cast"] = cast;
}

}  // namespace alignru::onnx
