#ifndef ALIGNRU_SRC_ONNX_KERNELS_HPP
#define ALIGNRU_SRC_ONNX_KERNELS_HPP

#include "alignru/onnx/graph.hpp"

#include <algorithm>
#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace alignru::onnx {

// Kernel failures; the session rethrows them as InferenceFailure with the node name.
class KernelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

[[noreturn]] inline void kernel_fail(const std::string& message) { throw KernelError(message); }

class KernelContext {
public:
    KernelContext(const Node& node, int64_t opset, std::span<const Tensor* const> inputs, std::size_t n_outputs)
        : node_(node), opset_(opset), inputs_(inputs), n_outputs_(n_outputs) {}

    const Node& node() const { return node_; }
    int64_t opset() const { return opset_; }
    std::size_t input_count() const { return inputs_.size(); }
    std::size_t output_count() const { return n_outputs_; }
    bool has_input(std::size_t i) const { return i < inputs_.size() && inputs_[i] != nullptr; }

    const Tensor& input(std::size_t i) const {
        if (!has_input(i)) {
            kernel_fail("missing required input " + std::to_string(i));
        }
        return *inputs_[i];
    }

private:
    const Node& node_;
    int64_t opset_;
    std::span<const Tensor* const> inputs_;
    std::size_t n_outputs_;
};

using Kernel = std::vector<Tensor> (*)(const KernelContext&);
using KernelRegistry = std::unordered_map<std::string, Kernel>;

const Kernel* find_kernel(std::string_view op_type);

void register_elementwise_kernels(KernelRegistry& registry);
void register_shape_kernels(KernelRegistry& registry);
void register_math_kernels(KernelRegistry& registry);

inline int64_t normalize_axis(int64_t axis, std::size_t rank, bool inclusive_end = false) {
    const auto r = static_cast<int64_t>(rank) + (inclusive_end ? 1 : 0);
    if (axis < -r || axis >= r) {
        kernel_fail("axis " + std::to_string(axis) + " out of range for rank " + std::to_string(rank));
    }
    return axis < 0 ? axis + r : axis;
}

// Multidirectional (numpy) broadcasting of two shapes.
inline Shape broadcast_shape(const Shape& a, const Shape& b) {
    const std::size_t rank = std::max(a.size(), b.size());
    Shape out(rank);
    for (std::size_t i = 0; i < rank; ++i) {
        const int64_t da = i < rank - a.size() ? 1 : a[i - (rank - a.size())];
        const int64_t db = i < rank - b.size() ? 1 : b[i - (rank - b.size())];
        if (da != db && da != 1 && db != 1) {
            kernel_fail("shapes " + shape_string(a) + " and " + shape_string(b) + " do not broadcast");
        }
        out[i] = da == 1 ? db : da;
    }
    return out;
}

// Strides of `shape` viewed at rank `rank` after left-padding with ones;
// broadcast (size-1) dimensions get stride 0.
inline std::vector<int64_t> broadcast_strides(const Shape& shape, std::size_t rank) {
    std::vector<int64_t> out(rank, 0);
    const auto own = strides_of(shape);
    const std::size_t pad = rank - shape.size();
    for (std::size_t i = 0; i < shape.size(); ++i) {
        out[pad + i] = shape[i] == 1 ? 0 : own[i];
    }
    return out;
}

// Calls f(out_index, offsets) for every element of `out`, where offsets[k]
// indexes operand k under broadcasting. Iterates the innermost dimension in
// a tight loop.
template <std::size_t N, typename F>
void broadcast_for_each(const Shape& out, const std::array<const Shape*, N>& operands, F&& f) {
    const std::size_t rank = out.size();
    const int64_t total = element_count(out);
    if (total == 0) {
        return;
    }
    if (rank == 0) {
        std::array<int64_t, N> offsets{};
        f(int64_t{0}, offsets);
        return;
    }
    std::array<std::vector<int64_t>, N> strides;
    for (std::size_t k = 0; k < N; ++k) {
        strides[k] = broadcast_strides(*operands[k], rank);
    }
    const int64_t inner = out[rank - 1];
    std::vector<int64_t> counter(rank, 0);
    std::array<int64_t, N> base{};
    for (int64_t index = 0; index < total; index += inner) {
        std::array<int64_t, N> offsets = base;
        for (int64_t j = 0; j < inner; ++j) {
            f(index + j, offsets);
            for (std::size_t k = 0; k < N; ++k) {
                offsets[k] += strides[k][rank - 1];
            }
        }
        // Advance the outer counter (all dimensions but the last).
        for (std::size_t d = rank - 1; d-- > 0;) {
            ++counter[d];
            for (std::size_t k = 0; k < N; ++k) {
                base[k] += strides[k][d];
            }
            if (counter[d] < out[d]) {
                break;
            }
            for (std::size_t k = 0; k < N; ++k) {
                base[k] -= strides[k][d] * out[d];
            }
            counter[d] = 0;
        }
    }
}

// Broadcasts `input` to `out` (which must be a valid broadcast target).
template <typename T>
std::vector<T> broadcast_to(std::span<const T> input, const Shape& input_shape, const Shape& out) {
    std::vector<T> result(static_cast<std::size_t>(element_count(out)));
    broadcast_for_each<1>(out, {&input_shape}, [&](int64_t i, const std::array<int64_t, 1>& o) { result[i] = input[o[0]]; });
    return result;
}

inline Tensor make_tensor_like(DType dtype, Shape shape, auto values) {
    using V = typename decltype(values)::value_type;
    if constexpr (std::is_same_v<V, uint8_t>) {
        if (dtype == DType::Bool) {
            return Tensor::boolean(std::move(shape), std::move(values));
        }
    }
    return Tensor(std::move(shape), std::move(values));
}

inline std::vector<int64_t> input_ints(const KernelContext& ctx, std::size_t i) {
    try {
        return ctx.input(i).to_int64();
    } catch (const std::invalid_argument& e) {
        kernel_fail("input " + std::to_string(i) + ": " + e.what());
    }
}

}  // namespace alignru::onnx

#endif  // ALIGNRU_SRC_ONNX_KERNELS_HPP
