#include "kernels.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>

namespace alignru::onnx {

namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
void gemm_block(const T* a, const T* b, T* c, int64_t m, int64_t k, int64_t n) {
    Eigen::Map<const RowMatrix<T>> A(a, m, k);
    Eigen::Map<const RowMatrix<T>> B(b, k, n);
    Eigen::Map<RowMatrix<T>> C(c, m, n);
    C.noalias() = A * B;
}

std::vector<Tensor> matmul(const KernelContext& ctx) {
    const Tensor& a = ctx.input(0);
    const Tensor& b = ctx.input(1);
    if (a.dtype() != b.dtype()) {
        kernel_fail("MatMul operand types differ");
    }
    if (a.rank() == 0 || b.rank() == 0) {
        kernel_fail("MatMul on a scalar");
    }
    // Promote vectors to matrices, remembering to drop the added dimension.
    Shape as = a.shape();
    Shape bs = b.shape();
    const bool a_vector = as.size() == 1;
    const bool b_vector = bs.size() == 1;
    if (a_vector) as.insert(as.begin(), 1);
    if (b_vector) bs.push_back(1);

    const int64_t m = as[as.size() - 2];
    const int64_t k = as[as.size() - 1];
    const int64_t n = bs[bs.size() - 1];
    if (bs[bs.size() - 2] != k) {
        kernel_fail("MatMul inner dimensions differ: " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
    }
    const Shape a_batch(as.begin(), as.end() - 2);
    const Shape b_batch(bs.begin(), bs.end() - 2);
    const Shape batch = broadcast_shape(a_batch, b_batch);

    Shape out = batch;
    if (!a_vector) out.push_back(m);
    if (!b_vector) out.push_back(n);

    return {dispatch(a.dtype(), [&]<typename T>() -> Tensor {
        if constexpr (!std::is_floating_point_v<T>) {
            kernel_fail("MatMul supports floating-point tensors only");
        } else {
            const auto A = a.data<T>();
            const auto B = b.data<T>();
            std::vector<T> C(static_cast<std::size_t>(element_count(batch) * m * n));
            if (b_batch.empty() || element_count(b_batch) == 1) {
                // Shared right operand: fold the batch into the row dimension.
                if (a_batch == batch) {
                    gemm_block(A.data(), B.data(), C.data(), element_count(batch) * m, k, n);
                    return Tensor(out, std::move(C));
                }
            }
            broadcast_for_each<2>(batch, {&a_batch, &b_batch}, [&](int64_t i, const std::array<int64_t, 2>& o) {
                gemm_block(A.data() + o[0] * m * k, B.data() + o[1] * k * n, C.data() + i * m * n, m, k, n);
            });
            return Tensor(out, std::move(C));
        }
    })};
}

std::vector<Tensor> gemm(const KernelContext& ctx) {
    const Tensor& a = ctx.input(0);
    const Tensor& b = ctx.input(1);
    const bool trans_a = ctx.node().attr_int("transA", 0) != 0;
    const bool trans_b = ctx.node().attr_int("transB", 0) != 0;
    const float alpha = ctx.node().attr_float("alpha", 1.0f);
    const float beta = ctx.node().attr_float("beta", 1.0f);
    if (a.rank() != 2 || b.rank() != 2 || a.dtype() != b.dtype()) {
        kernel_fail("Gemm expects two matrices of the same type");
    }
    const int64_t m = trans_a ? a.shape()[1] : a.shape()[0];
    const int64_t k = trans_a ? a.shape()[0] : a.shape()[1];
    const int64_t kb = trans_b ? b.shape()[1] : b.shape()[0];
    const int64_t n = trans_b ? b.shape()[0] : b.shape()[1];
    if (k != kb) {
        kernel_fail("Gemm inner dimensions differ");
    }
    const Shape out{m, n};
    return {dispatch(a.dtype(), [&]<typename T>() -> Tensor {
        if constexpr (!std::is_floating_point_v<T>) {
            kernel_fail("Gemm supports floating-point tensors only");
        } else {
            Eigen::Map<const RowMatrix<T>> A(a.data<T>().data(), a.shape()[0], a.shape()[1]);
            Eigen::Map<const RowMatrix<T>> B(b.data<T>().data(), b.shape()[0], b.shape()[1]);
            RowMatrix<T> Y(m, n);
            if (trans_a && trans_b) Y.noalias() = A.transpose() * B.transpose();
            else if (trans_a) Y.noalias() = A.transpose() * B;
            else if (trans_b) Y.noalias() = A * B.transpose();
            else Y.noalias() = A * B;
            if (alpha != 1.0f) {
                Y *= static_cast<T>(alpha);
            }
            std::vector<T> result(Y.data(), Y.data() + Y.size());
            if (ctx.has_input(2) && beta != 0.0f) {
                const Tensor& c = ctx.input(2);
                if (c.dtype() != a.dtype()) {
                    kernel_fail("Gemm bias type differs");
                }
                const auto bias = broadcast_to<T>(c.data<T>(), c.shape(), broadcast_shape(c.shape(), out));
                if (static_cast<int64_t>(bias.size()) != m * n) {
                    kernel_fail("Gemm bias " + shape_string(c.shape()) + " does not broadcast to " + shape_string(out));
                }
                for (std::size_t i = 0; i < result.size(); ++i) {
                    result[i] += static_cast<T>(beta) * bias[i];
                }
            }
            return Tensor(out, std::move(result));
        }
    })};
}

// Views `shape` as [outer, dim, inner] around `axis`.
struct AxisSplit {
    int64_t outer = 1;
    int64_t dim = 1;
    int64_t inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
    AxisSplit s;
    for (std::size_t d = 0; d < axis; ++d) s.outer *= shape[d];
    s.dim = shape[axis];
    for (std::size_t d = axis + 1; d < shape.size(); ++d) s.inner *= shape[d];
    return s;
}

template <bool log_output>
std::vector<Tensor> softmax_impl(const KernelContext& ctx) {
    const Tensor& x = ctx.input(0);
    AxisSplit s;
    if (ctx.opset() >= 13) {
        s = split_at(x.shape(), static_cast<std::size_t>(normalize_axis(ctx.node().attr_int("axis", -1), x.rank())));
    } else {
        // Older opsets flatten to 2-D at the axis.
        const auto axis = static_cast<std::size_t>(normalize_axis(ctx.node().attr_int("axis", 1), x.rank()));
        for (std::size_t d = 0; d < axis; ++d) s.outer *= x.shape()[d];
        s.dim = x.size() / std::max<int64_t>(s.outer, 1);
        s.inner = 1;
    }
    return {dispatch(x.dtype(), [&]<typename T>() -> Tensor {
        if constexpr (!std::is_floating_point_v<T>) {
            kernel_fail("Softmax needs a floating-point tensor");
        } else {
            const auto in = x.data<T>();
            std::vector<T> out(in.size());
            for (int64_t o = 0; o < s.outer; ++o) {
                for (int64_t i = 0; i < s.inner; ++i) {
                    const int64_t base = o * s.dim * s.inner + i;
                    T peak = -std::numeric_limits<T>::infinity();
                    for (int64_t d = 0; d < s.dim; ++d) peak = std::max(peak, in[base + d * s.inner]);
                    double total = 0.0;
                    for (int64_t d = 0; d < s.dim; ++d) {
                        total += std::exp(static_cast<double>(in[base + d * s.inner] - peak));
                    }
                    for (int64_t d = 0; d < s.dim; ++d) {
                        const double shifted = static_cast<double>(in[base + d * s.inner] - peak);
                        if constexpr (log_output) {
                            out[base + d * s.inner] = static_cast<T>(shifted - std::log(total));
                        } else {
                            out[base + d * s.inner] = static_cast<T>(std::exp(shifted) / total);
                        }
                    }
                }
            }
            return Tensor(x.shape(), std::move(out));
        }
    })};
}

std::vector<Tensor> softmax(const KernelContext& ctx) { return softmax_impl<false>(ctx); }
std::vector<Tensor> log_softmax(const KernelContext& ctx) { return softmax_impl<true>(ctx); }

std::vector<Tensor> layer_norm(const KernelContext& ctx) {
    const Tensor& x = ctx.input(0);
    const Tensor& scale = ctx.input(1);
    const bool has_bias = ctx.has_input(2);
    const auto axis = static_cast<std::size_t>(normalize_axis(ctx.node().attr_int("axis", -1), x.rank()));
    const double epsilon = ctx.node().attr_float("epsilon", 1e-5f);

    int64_t outer = 1;
    for (std::size_t d = 0; d < axis; ++d) outer *= x.shape()[d];
    const Shape norm_shape(x.shape().begin() + static_cast<std::ptrdiff_t>(axis), x.shape().end());
    const int64_t width = element_count(norm_shape);
    Shape stat_shape = x.shape();
    for (std::size_t d = axis; d < stat_shape.size(); ++d) stat_shape[d] = 1;

    return dispatch(x.dtype(), [&]<typename T>() -> std::vector<Tensor> {
        if constexpr (!std::is_floating_point_v<T>) {
            kernel_fail("LayerNormalization needs a floating-point tensor");
        } else {
            const auto gamma = broadcast_to<T>(scale.data<T>(), scale.shape(), norm_shape);
            std::vector<T> beta;
            if (has_bias) {
                beta = broadcast_to<T>(ctx.input(2).data<T>(), ctx.input(2).shape(), norm_shape);
            }
            const auto in = x.data<T>();
            std::vector<T> out(in.size());
            std::vector<T> means(static_cast<std::size_t>(outer));
            std::vector<T> inv_stds(static_cast<std::size_t>(outer));
            for (int64_t o = 0; o < outer; ++o) {
                const T* row = in.data() + o * width;
                double mean = 0.0;
                for (int64_t j = 0; j < width; ++j) mean += row[j];
                mean /= static_cast<double>(width);
                double var = 0.0;
                for (int64_t j = 0; j < width; ++j) {
                    const double d = row[j] - mean;
                    var += d * d;
                }
                var /= static_cast<double>(width);
                const double inv_std = 1.0 / std::sqrt(var + epsilon);
                for (int64_t j = 0; j < width; ++j) {
                    double y = (row[j] - mean) * inv_std * gamma[static_cast<std::size_t>(j)];
                    if (has_bias) y += beta[static_cast<std::size_t>(j)];
                    out[static_cast<std::size_t>(o * width + j)] = static_cast<T>(y);
                }
                means[static_cast<std::size_t>(o)] = static_cast<T>(mean);
                inv_stds[static_cast<std::size_t>(o)] = static_cast<T>(inv_std);
            }
            std::vector<Tensor> result{Tensor(x.shape(), std::move(out))};
            if (ctx.output_count() > 1) result.emplace_back(stat_shape, std::move(means));
            if (ctx.output_count() > 2) result.emplace_back(stat_shape, std::move(inv_stds));
            return result;
        }
    });
}

enum class Reduce { Sum, Mean, Max, Min, Prod };

template <Reduce kind>
std::vector<Tensor> reduce(const KernelContext& ctx) {
    const Tensor& x = ctx.input(0);
    const bool keep_dims = ctx.node().attr_int("keepdims", 1) != 0;
    const bool noop_when_empty = ctx.node().attr_int("noop_with_empty_axes", 0) != 0;
    // ReduceSum moved axes to an input at opset 13, the others at 18.
    const int64_t axes_input_from = kind == Reduce::Sum ? 13 : 18;
    std::vector<int64_t> axes;
    if (ctx.opset() >= axes_input_from) {
        if (ctx.has_input(1)) axes = input_ints(ctx, 1);
    } else {
        axes = ctx.node().attr_ints("axes").value_or(std::vector<int64_t>{});
    }
    if (axes.empty() && noop_when_empty) {
        return {x};
    }
    std::vector<bool> reduced(x.rank(), axes.empty());
    for (auto a : axes) reduced[static_cast<std::size_t>(normalize_axis(a, x.rank()))] = true;

    Shape kept = x.shape();
    Shape squeezed;
    int64_t group = 1;
    for (std::size_t d = 0; d < x.rank(); ++d) {
        if (reduced[d]) {
            group *= kept[d];
            kept[d] = 1;
        } else {
            squeezed.push_back(kept[d]);
        }
    }
    const Shape out = keep_dims ? kept : squeezed;

    return {dispatch(x.dtype(), [&]<typename T>() -> Tensor {
        const auto in = x.data<T>();
        const auto n_out = static_cast<std::size_t>(element_count(kept));
        std::vector<double> acc(n_out);
        if constexpr (kind == Reduce::Max) std::fill(acc.begin(), acc.end(), -std::numeric_limits<double>::infinity());
        if constexpr (kind == Reduce::Min) std::fill(acc.begin(), acc.end(), std::numeric_limits<double>::infinity());
        if constexpr (kind == Reduce::Prod) std::fill(acc.begin(), acc.end(), 1.0);
        // Walk the input; the kept-shape operand maps each element to its output slot.
        broadcast_for_each<1>(x.shape(), {&kept}, [&](int64_t i, const std::array<int64_t, 1>& o) {
            const double v = static_cast<double>(in[static_cast<std::size_t>(i)]);
            double& slot = acc[static_cast<std::size_t>(o[0])];
            if constexpr (kind == Reduce::Sum || kind == Reduce::Mean) slot += v;
            if constexpr (kind == Reduce::Max) slot = std::max(slot, v);
            if constexpr (kind == Reduce::Min) slot = std::min(slot, v);
            if constexpr (kind == Reduce::Prod) slot *= v;
        });
        std::vector<T> result(n_out);
        for (std::size_t i = 0; i < n_out; ++i) {
            double v = acc[i];
            if constexpr (kind == Reduce::Mean) v /= static_cast<double>(group);
            result[i] = static_cast<T>(v);
        }
        return make_tensor_like(x.dtype(), out, std::move(result));
    })};
}

template <bool is_max>
std::vector<Tensor> arg_extreme(const KernelContext& ctx) {
    const Tensor& x = ctx.input(0);
    const auto axis = static_cast<std::size_t>(normalize_axis(ctx.node().attr_int("axis", 0), x.rank()));
    const bool keep_dims = ctx.node().attr_int("keepdims", 1) != 0;
    const bool last = ctx.node().attr_int("select_last_index", 0) != 0;
    const AxisSplit s = split_at(x.shape(), axis);
    Shape out = x.shape();
    if (keep_dims) out[axis] = 1;
    else out.erase(out.begin() + static_cast<std::ptrdiff_t>(axis));
    return {dispatch(x.dtype(), [&]<typename T>() {
        const auto in = x.data<T>();
        std::vector<int64_t> result(static_cast<std::size_t>(s.outer * s.inner));
        for (int64_t o = 0; o < s.outer; ++o) {
            for (int64_t i = 0; i < s.inner; ++i) {
                const int64_t base = o * s.dim * s.inner + i;
                int64_t best = 0;
                for (int64_t d = 1; d < s.dim; ++d) {
                    const T v = in[base + d * s.inner];
                    const T b = in[base + best * s.inner];
                    const bool better = is_max ? (v > b || (last && v == b)) : (v < b || (last && v == b));
                    if (better) best = d;
                }
                result[static_cast<std::size_t>(o * s.inner + i)] = best;
            }
        }
        return Tensor(out, std::move(result));
    })};
}

}  // namespace

void register_math_kernels(KernelRegistry& r) {
    r["MatMul"] = matmul;
    r["Gemm"] = gemm;
    r["Softmax"] = softmax;
    r["LogSoftmax"] = log_softmax;
    r["LayerNormalization"] = layer_norm;
    r["ReduceSum"] = reduce<Reduce::Sum>;
    r["ReduceMean"] = reduce<Reduce::Mean>;
    r["ReduceMax"] = reduce<Reduce::Max>;
    r["ReduceMin"] = reduce<Reduce::Min>;
    r["ReduceProd"] = reduce<Reduce::Prod>;
    r["ArgMax"] = arg_extreme<true>;
    r["ArgMin"] = arg_extreme<false>;
}

}  // namespace alignru::onnx
