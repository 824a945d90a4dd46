#include "kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace alignru::onnx {

namespace {

// Copies the strided view of `input` described by per-output-dimension
// strides (in input elements) and a starting offset.
template <typename T>
std::vector<T> strided_copy(std::span<const T> input, const Shape& out_shape, int64_t base,
                            const std::vector<int64_t>& strides) {
    std::vector<T> out(static_cast<std::size_t>(element_count(out_shape)));
    if (out.empty()) {
        return out;
    }
    const std::size_t rank = out_shape.size();
    if (rank == 0) {
        out[0] = input[base];
        return out;
    }
    std::vector<int64_t> counter(rank, 0);
    const int64_t inner = out_shape[rank - 1];
    const int64_t inner_stride = strides[rank - 1];
    int64_t offset = base;
    for (std::size_t index = 0; index < out.size(); index += static_cast<std::size_t>(inner)) {
        int64_t o = offset;
        for (int64_t j = 0; j < inner; ++j, o += inner_stride) {
            out[index + static_cast<std::size_t>(j)] = input[o];
        }
        for (std::size_t d = rank - 1; d-- > 0;) {
            ++counter[d];
            offset += strides[d];
            if (counter[d] < out_shape[d]) {
                break;
            }
            offset -= strides[d] * out_shape[d];
            counter[d] = 0;
        }
    }
    return out;
}

Tensor strided(const Tensor& x, const Shape& out_shape, int64_t base, const std::vector<int64_t>& strides) {
    return dispatch(x.dtype(), [&]<typename T>() {
        return make_tensor_like(x.dtype(), out_shape, strided_copy<T>(x.data<T>(), out_shape, base, strides));
    });
}

std::vector<Tensor> constant(const KernelContext& ctx) {
    const Node& node = ctx.node();
    if (const Tensor* t = node.attr_tensor("value")) {
        return {*t};
    }
    if (node.has_attr("value_float")) {
        return {Tensor::scalar(node.attr_float("value_float", 0.0f))};
    }
    if (node.has_attr("value_int")) {
        return {Tensor::scalar<int64_t>(node.attr_int("value_int", 0))};
    }
    if (auto ints = node.attr_ints("value_ints")) {
        const auto n = static_cast<int64_t>(ints->size());
        return {Tensor(Shape{n}, std::move(*ints))};
    }
    if (node.has_attr("value_floats")) {
        const auto& floats = std::get<std::vector<float>>(node.attributes.at("value_floats").value);
        return {Tensor(Shape{static_cast<int64_t>(floats.size())}, floats)};
    }
    kernel_fail("Constant without a supported value attribute");
}

std::vector<Tensor> identity(const KernelContext& ctx) { return {ctx.input(0)}; }

std::vector<Tensor> dropout(const KernelContext& ctx) {
    const Tensor& x = ctx.input(0);
    std::vector<Tensor> out{x};
    if (ctx.output_count() > 1) {
        out.push_back(Tensor::boolean(x.shape(), std::vector<uint8_t>(static_cast<std::size_t>(x.size()), 1)));
    }
    return out;
}

std::vector<Tensor> shape(const KernelContext& ctx) {
    const Shape& s = ctx.input(0).shape();
    const auto rank = static_cast<int64_t>(s.size());
    int64_t start = ctx.node().attr_int("start", 0);
    int64_t end = ctx.node().attr_int("end", rank);
    if (start < 0) start += rank;
    if (end < 0) end += rank;
    start = std::clamp<int64_t>(start, 0, rank);
    end = std::clamp<int64_t>(end, start, rank);
    std::vector<int64_t> dims(s.begin() + start, s.begin() + end);
    const auto n = static_cast<int64_t>(dims.size());
    return {Tensor(Shape{n}, std::move(dims))};
}

std::vector<Tensor> size(const KernelContext& ctx) { return {Tensor::scalar<int64_t>(ctx.input(0).size())}; }

std::vector<Tensor> reshape(const KernelContext& ctx) {
    const Tensor& x = ctx.input(0);
    auto target = input_ints(ctx, 1);
    const bool allow_zero = ctx.node().attr_int("allowzero", 0) != 0;
    int64_t known = 1;
    int64_t infer_at = -1;
    for (std::size_t i = 0; i < target.size(); ++i) {
        if (target[i] == 0 && !allow_zero) {
            if (i >= x.rank()) {
                kernel_fail("Reshape copies dimension " + std::to_string(i) + " beyond input rank");
            }
            target[i] = x.shape()[i];
        }
        if (target[i] == -1) {
            if (infer_at >= 0) {
                kernel_fail("Reshape with more than one -1");
            }
            infer_at = static_cast<int64_t>(i);
        } else {
            known *= target[i];
        }
    }
    if (infer_at >= 0) {
        if (known == 0 || x.size() % known != 0) {
            kernel_fail("cannot infer Reshape dimension from " + shape_string(x.shape()));
        }
        target[static_cast<std::size_t>(infer_at)] = x.size() / known;
    }
    if (element_count(target) != x.size()) {
        kernel_fail("cannot reshape " + shape_string(x.shape()) + " to " + shape_string(target));
    }
    return {x.reshaped(target)};
}

std::vector<Tensor> flatten(const KernelContext& ctx) {
    const Tensor& x = ctx.input(0);
    const int64_t axis = normalize_axis(ctx.node().attr_int("axis", 1), x.rank(), true);
    int64_t outer = 1;
    for (int64_t i = 0; i < axis; ++i) outer *= x.shape()[static_cast<std::size_t>(i)];
    return {x.reshaped(Shape{outer, outer == 0 ? 0 : x.size() / std::max<int64_t>(outer, 1)})};
}

std::vector<int64_t> axes_of(const KernelContext& ctx, std::size_t input_index) {
    if (ctx.opset() >= 13) {
        return ctx.has_input(input_index) ? input_ints(ctx, input_index) : std::vector<int64_t>{};
    }
    return ctx.node().attr_ints("axes").value_or(std::vector<int64_t>{});
}

std::vector<Tensor> squeeze(const KernelContext& ctx) {
    const Tensor& x = ctx.input(0);
    auto axes = axes_of(ctx, 1);
    Shape out;
    if (axes.empty()) {
        for (auto d : x.shape()) {
            if (d != 1) out.push_back(d);
        }
        return {x.reshaped(out)};
    }
    std::vector<bool> drop(x.rank(), false);
    for (auto a : axes) {
        const auto axis = static_cast<std::size_t>(normalize_axis(a, x.rank()));
        if (x.shape()[axis] != 1) {
            kernel_fail("Squeeze on dimension of size " + std::to_string(x.shape()[axis]));
        }
        drop[axis] = true;
    }
    for (std::size_t i = 0; i < x.rank(); ++i) {
        if (!drop[i]) out.push_back(x.shape()[i]);
    }
    return {x.reshaped(out)};
}

std::vector<Tensor> unsqueeze(const KernelContext& ctx) {
    const Tensor& x = ctx.input(0);
    const auto axes = axes_of(ctx, 1);
    const std::size_t rank = x.rank() + axes.size();
    std::vector<bool> inserted(rank, false);
    for (auto a : axes) {
        const auto axis = static_cast<std::size_t>(normalize_axis(a, rank));
        if (inserted[axis]) {
            kernel_fail("Unsqueeze with repeated axis");
        }
        inserted[axis] = true;
    }
    Shape out;
    std::size_t src = 0;
    for (std::size_t i = 0; i < rank; ++i) {
        out.push_back(inserted[i] ? 1 : x.shape()[src++]);
    }
    return {x.reshaped(out)};
}

std::vector<Tensor> transpose(const KernelContext& ctx) {
    const Tensor& x = ctx.input(0);
    const std::size_t rank = x.rank();
    std::vector<int64_t> perm(rank);
    if (auto p = ctx.node().attr_ints("perm")) {
        perm = *p;
        if (perm.size() != rank) {
            kernel_fail("Transpose perm does not match rank");
        }
    } else {
        for (std::size_t i = 0; i < rank; ++i) perm[i] = static_cast<int64_t>(rank - 1 - i);
    }
    const auto in_strides = strides_of(x.shape());
    Shape out(rank);
    std::vector<int64_t> strides(rank);
    for (std::size_t i = 0; i < rank; ++i) {
        const auto p = static_cast<std::size_t>(normalize_axis(perm[i], rank));
        out[i] = x.shape()[p];
        strides[i] = in_strides[p];
    }
    return {strided(x, out, 0, strides)};
}

std::vector<Tensor> concat(const KernelContext& ctx) {
    std::vector<const Tensor*> parts;
    for (std::size_t i = 0; i < ctx.input_count(); ++i) {
        if (ctx.has_input(i)) parts.push_back(&ctx.input(i));
    }
    if (parts.empty()) {
        kernel_fail("Concat without inputs");
    }
    const Tensor& first = *parts.front();
    const std::size_t rank = first.rank();
    const auto axis = static_cast<std::size_t>(normalize_axis(ctx.node().attr_int("axis", 0), rank));
    Shape out = first.shape();
    out[axis] = 0;
    for (const Tensor* p : parts) {
        if (p->rank() != rank || p->dtype() != first.dtype()) {
            kernel_fail("Concat inputs differ in rank or type");
        }
        for (std::size_t d = 0; d < rank; ++d) {
            if (d != axis && p->shape()[d] != first.shape()[d]) {
                kernel_fail("Concat inputs differ outside the axis: " + shape_string(p->shape()) + " vs " +
                            shape_string(first.shape()));
            }
        }
        out[axis] += p->shape()[axis];
    }
    int64_t outer = 1;
    for (std::size_t d = 0; d < axis; ++d) outer *= out[d];
    int64_t inner = 1;
    for (std::size_t d = axis + 1; d < rank; ++d) inner *= out[d];

    return {dispatch(first.dtype(), [&]<typename T>() {
        std::vector<T> result;
        result.reserve(static_cast<std::size_t>(element_count(out)));
        for (int64_t o = 0; o < outer; ++o) {
            for (const Tensor* p : parts) {
                const auto block = p->shape()[axis] * inner;
                const auto data = p->data<T>();
                result.insert(result.end(), data.begin() + o * block, data.begin() + (o + 1) * block);
            }
        }
        return make_tensor_like(first.dtype(), out, std::move(result));
    })};
}

std::vector<Tensor> split(const KernelContext& ctx) {
    const Tensor& x = ctx.input(0);
    const auto axis = static_cast<std::size_t>(normalize_axis(ctx.node().attr_int("axis", 0), x.rank()));
    const std::size_t n_out = ctx.output_count();
    std::vector<int64_t> sizes;
    if (ctx.opset() >= 13 && ctx.has_input(1)) {
        sizes = input_ints(ctx, 1);
    } else if (auto s = ctx.node().attr_ints("split"); s && ctx.opset() < 13) {
        sizes = *s;
    } else {
        const int64_t parts = ctx.node().attr_int("num_outputs", static_cast<int64_t>(n_out));
        const int64_t dim = x.shape()[axis];
        const int64_t chunk = (dim + parts - 1) / parts;
        for (int64_t i = 0, left = dim; i < parts; ++i) {
            sizes.push_back(std::min(chunk, left));
            left -= sizes.back();
        }
    }
    if (std::accumulate(sizes.begin(), sizes.end(), int64_t{0}) != x.shape()[axis]) {
        kernel_fail("Split sizes do not add up to the axis length");
    }
    const auto strides = strides_of(x.shape());
    std::vector<Tensor> outputs;
    int64_t start = 0;
    for (auto s : sizes) {
        Shape out = x.shape();
        out[axis] = s;
        outputs.push_back(strided(x, out, start * strides[axis], strides));
        start += s;
    }
    return outputs;
}

std::vector<Tensor> slice(const KernelContext& ctx) {
    const Tensor& x = ctx.input(0);
    const std::size_t rank = x.rank();
    std::vector<int64_t> starts;
    std::vector<int64_t> ends;
    std::vector<int64_t> axes;
    std::vector<int64_t> steps;
    if (ctx.opset() < 10) {
        starts = ctx.node().attr_ints("starts").value_or(std::vector<int64_t>{});
        ends = ctx.node().attr_ints("ends").value_or(std::vector<int64_t>{});
        axes = ctx.node().attr_ints("axes").value_or(std::vector<int64_t>{});
    } else {
        starts = input_ints(ctx, 1);
        ends = input_ints(ctx, 2);
        if (ctx.has_input(3)) axes = input_ints(ctx, 3);
        if (ctx.has_input(4)) steps = input_ints(ctx, 4);
    }
    if (axes.empty()) {
        for (std::size_t i = 0; i < starts.size(); ++i) axes.push_back(static_cast<int64_t>(i));
    }
    if (steps.empty()) {
        steps.assign(starts.size(), 1);
    }
    if (starts.size() != ends.size() || starts.size() != axes.size() || starts.size() != steps.size()) {
        kernel_fail("Slice parameter lengths differ");
    }

    const auto in_strides = strides_of(x.shape());
    Shape out = x.shape();
    std::vector<int64_t> strides = in_strides;
    int64_t base = 0;
    for (std::size_t i = 0; i < axes.size(); ++i) {
        const auto axis = static_cast<std::size_t>(normalize_axis(axes[i], rank));
        const int64_t dim = x.shape()[axis];
        const int64_t step = steps[i];
        if (step == 0) {
            kernel_fail("Slice step of 0");
        }
        int64_t start = starts[i];
        int64_t end = ends[i];
        if (start < 0) start += dim;
        if (end < 0) end += dim;
        int64_t count = 0;
        if (step > 0) {
            start = std::clamp<int64_t>(start, 0, dim);
            end = std::clamp<int64_t>(end, 0, dim);
            count = end > start ? (end - start + step - 1) / step : 0;
        } else {
            start = std::clamp<int64_t>(start, 0, dim - 1);
            end = std::clamp<int64_t>(end, -1, dim - 1);
            count = start > end ? (start - end - step - 1) / (-step) : 0;
        }
        out[axis] = count;
        strides[axis] = in_strides[axis] * step;
        if (count > 0) {
            base += start * in_strides[axis];
        }
    }
    return {strided(x, out, base, strides)};
}

std::vector<Tensor> gather(const KernelContext& ctx) {
    const Tensor& data = ctx.input(0);
    const Tensor& indices = ctx.input(1);
    const auto axis = static_cast<std::size_t>(normalize_axis(ctx.node().attr_int("axis", 0), data.rank()));
    const auto idx = input_ints(ctx, 1);
    const int64_t dim = data.shape()[axis];

    Shape out(data.shape().begin(), data.shape().begin() + static_cast<std::ptrdiff_t>(axis));
    out.insert(out.end(), indices.shape().begin(), indices.shape().end());
    out.insert(out.end(), data.shape().begin() + static_cast<std::ptrdiff_t>(axis) + 1, data.shape().end());

    int64_t outer = 1;
    for (std::size_t d = 0; d < axis; ++d) outer *= data.shape()[d];
    int64_t inner = 1;
    for (std::size_t d = axis + 1; d < data.rank(); ++d) inner *= data.shape()[d];

    return {dispatch(data.dtype(), [&]<typename T>() {
        const auto src = data.data<T>();
        std::vector<T> result;
        result.reserve(static_cast<std::size_t>(element_count(out)));
        for (int64_t o = 0; o < outer; ++o) {
            for (auto i : idx) {
                if (i < -dim || i >= dim) {
                    kernel_fail("Gather index " + std::to_string(i) + " out of range for dimension " +
                                std::to_string(dim));
                }
                if (i < 0) i += dim;
                const auto begin = src.begin() + (o * dim + i) * inner;
                result.insert(result.end(), begin, begin + inner);
            }
        }
        return make_tensor_like(data.dtype(), out, std::move(result));
    })};
}

std::vector<Tensor> expand(const KernelContext& ctx) {
    const Tensor& x = ctx.input(0);
    const auto requested = input_ints(ctx, 1);
    const Shape out = broadcast_shape(x.shape(), requested);
    return {dispatch(x.dtype(), [&]<typename T>() {
        return make_tensor_like(x.dtype(), out, broadcast_to<T>(x.data<T>(), x.shape(), out));
    })};
}

std::vector<Tensor> tile(const KernelContext& ctx) {
    const Tensor& x = ctx.input(0);
    const auto repeats = input_ints(ctx, 1);
    if (repeats.size() != x.rank()) {
        kernel_fail("Tile repeats do not match rank");
    }
    Shape out(x.rank());
    for (std::size_t d = 0; d < x.rank(); ++d) out[d] = x.shape()[d] * repeats[d];
    const auto in_strides = strides_of(x.shape());
    const auto out_strides = strides_of(out);
    return {dispatch(x.dtype(), [&]<typename T>() {
        const auto src = x.data<T>();
        std::vector<T> result(static_cast<std::size_t>(element_count(out)));
        for (int64_t i = 0; i < static_cast<int64_t>(result.size()); ++i) {
            int64_t rest = i;
            int64_t offset = 0;
            for (std::size_t d = 0; d < out.size(); ++d) {
                const int64_t coord = rest / out_strides[d];
                rest %= out_strides[d];
                offset += (coord % x.shape()[d]) * in_strides[d];
            }
            result[static_cast<std::size_t>(i)] = src[offset];
        }
        return make_tensor_like(x.dtype(), out, std::move(result));
    })};
}

std::vector<Tensor> constant_of_shape(const KernelContext& ctx) {
    const auto dims = input_ints(ctx, 0);
    const Shape out(dims.begin(), dims.end());
    const Tensor* value = ctx.node().attr_tensor("value");
    if (value == nullptr) {
        return {Tensor::zeros(DType::Float, out)};
    }
    return {dispatch(value->dtype(), [&]<typename T>() {
        const T v = value->data<T>()[0];
        return make_tensor_like(value->dtype(), out, std::vector<T>(static_cast<std::size_t>(element_count(out)), v));
    })};
}

std::vector<Tensor> range(const KernelContext& ctx) {
    const Tensor& start = ctx.input(0);
    return {dispatch(start.dtype(), [&]<typename T>() -> Tensor {
        if constexpr (std::is_same_v<T, uint8_t>) {
            kernel_fail("Range on uint8/bool");
        } else {
            const T first = ctx.input(0).data<T>()[0];
            const T limit = ctx.input(1).data<T>()[0];
            const T delta = ctx.input(2).data<T>()[0];
            if (delta == T(0)) {
                kernel_fail("Range with zero delta");
            }
            const auto n = std::max<int64_t>(
                static_cast<int64_t>(std::ceil(static_cast<double>(limit - first) / static_cast<double>(delta))), 0);
            std::vector<T> values(static_cast<std::size_t>(n));
            for (int64_t i = 0; i < n; ++i) values[static_cast<std::size_t>(i)] = static_cast<T>(first + static_cast<T>(i) * delta);
            return Tensor(Shape{n}, std::move(values));
        }
    })};
}

std::vector<Tensor> cum_sum(const KernelContext& ctx) {
    const Tensor& x = ctx.input(0);
    const auto axis = static_cast<std::size_t>(normalize_axis(input_ints(ctx, 1).at(0), x.rank()));
    const bool exclusive = ctx.node().attr_int("exclusive", 0) != 0;
    const bool reverse = ctx.node().attr_int("reverse", 0) != 0;
    int64_t outer = 1;
    for (std::size_t d = 0; d < axis; ++d) outer *= x.shape()[d];
    int64_t inner = 1;
    for (std::size_t d = axis + 1; d < x.rank(); ++d) inner *= x.shape()[d];
    const int64_t dim = x.shape()[axis];
    return {dispatch(x.dtype(), [&]<typename T>() {
        const auto src = x.data<T>();
        std::vector<T> result(src.size());
        for (int64_t o = 0; o < outer; ++o) {
            for (int64_t i = 0; i < inner; ++i) {
                T acc = T(0);
                for (int64_t step = 0; step < dim; ++step) {
                    const int64_t k = reverse ? dim - 1 - step : step;
                    const auto at = static_cast<std::size_t>((o * dim + k) * inner + i);
                    if (exclusive) {
                        result[at] = acc;
                        acc = static_cast<T>(acc + src[at]);
                    } else {
                        acc = static_cast<T>(acc + src[at]);
                        result[at] = acc;
                    }
                }
            }
        }
        return make_tensor_like(x.dtype(), x.shape(), std::move(result));
    })};
}

}  // namespace

void register_shape_kernels(KernelRegistry& r) {
    r["Constant"] = constant;
    r["Identity"] = identity;
    r["Dropout"] = dropout;
    r["Shape"] = shape;
    r["Size"] = size;
    r["Reshape"] = reshape;
    r["Flatten"] = flatten;
    r["Squeeze"] = squeeze;
    r["Unsqueeze"] = unsqueeze;
    r["Transpose"] = transpose;
    r["Concat"] = concat;
    r["Split"] = split;
    r["Slice"] = slice;
    r["Gather"] = gather;
    r["Expand"] = expand;
    r["Tile"] = tile;
    r["ConstantOfShape"] = constant_of_shape;
    r["Range"] = range;
    r["CumSum"] = cum_sum;
}

}  // namespace alignru::onnx
