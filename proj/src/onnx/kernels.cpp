#include "kernels.hpp"

namespace alignru::onnx {

namespace {

KernelRegistry build_registry() {
    KernelRegistry registry;
    register_elementwise_kernels(registry);
    register_shape_kernels(registry);
    register_math_kernels(registry);
    return registry;
}

}  // namespace

const Kernel* find_kernel(std::string_view op_type) {
    static const KernelRegistry registry = build_registry();
    const auto it = registry.find(std::string(op_type));
    return it == registry.end() ? nullptr : &it->second;
}

}  // namespace alignru::onnx
