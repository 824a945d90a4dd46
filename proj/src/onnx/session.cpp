#include "alignru/error.hpp"
#include "alignru/onnx/graph.hpp"

#include "kernels.hpp"

#include <algorithm>
#include <unordered_set>

namespace alignru::onnx {

int64_t Node::attr_int(const std::string& key, int64_t fallback) const {
    const auto it = attributes.find(key);
    if (it == attributes.end()) return fallback;
    if (const auto* v = std::get_if<int64_t>(&it->second.value)) return *v;
    kernel_fail(label() + ": attribute '" + key + "' is not an integer");
}

float Node::attr_float(const std::string& key, float fallback) const {
    const auto it = attributes.find(key);
    if (it == attributes.end()) return fallback;
    if (const auto* v = std::get_if<float>(&it->second.value)) return *v;
    if (const auto* v = std::get_if<int64_t>(&it->second.value)) return static_cast<float>(*v);
    kernel_fail(label() + ": attribute '" + key + "' is not a float");
}

std::string Node::attr_string(const std::string& key, const std::string& fallback) const {
    const auto it = attributes.find(key);
    if (it == attributes.end()) return fallback;
    if (const auto* v = std::get_if<std::string>(&it->second.value)) return *v;
    kernel_fail(label() + ": attribute '" + key + "' is not a string");
}

std::optional<std::vector<int64_t>> Node::attr_ints(const std::string& key) const {
    const auto it = attributes.find(key);
    if (it == attributes.end()) return std::nullopt;
    if (const auto* v = std::get_if<std::vector<int64_t>>(&it->second.value)) return *v;
    kernel_fail(label() + ": attribute '" + key + "' is not an integer list");
}

const Tensor* Node::attr_tensor(const std::string& key) const {
    const auto it = attributes.find(key);
    if (it == attributes.end()) return nullptr;
    return std::get_if<Tensor>(&it->second.value);
}

std::string Node::label() const { return op_type + " node '" + name + "'"; }

namespace {

constexpr int kOmitted = -1;

struct Step {
    const Node* node = nullptr;
    Kernel kernel = nullptr;
    std::vector<int> inputs;   // slot ids, kOmitted for absent optionals
    std::vector<int> outputs;  // slot ids, kOmitted for unused outputs
    std::vector<int> release;  // slots whose last reader is this step
};

}  // namespace

struct Session::Plan {
    Graph graph;
    std::unordered_map<std::string, Tensor> constants;  // initializers plus folded values
    std::unordered_map<std::string, int> slot_of;
    std::vector<int> input_slots;  // parallel to graph.inputs
    std::vector<Step> steps;
    int n_slots = 0;
};

namespace {

[[noreturn]] void load_fail(const std::string& message) { throw Error(ErrorCode::ModelLoadFailure, message); }

std::vector<Tensor> invoke(const Node& node, Kernel kernel, int64_t opset, std::span<const Tensor* const> inputs) {
    const KernelContext ctx(node, opset, inputs, node.outputs.size());
    std::vector<Tensor> out = kernel(ctx);
    if (out.size() < node.outputs.size()) {
        // Trailing optional outputs may be left unproduced only if unnamed.
        for (std::size_t i = out.size(); i < node.outputs.size(); ++i) {
            if (!node.outputs[i].empty()) {
                kernel_fail("produced " + std::to_string(out.size()) + " outputs, graph expects " +
                            std::to_string(node.outputs.size()));
            }
        }
    }
    return out;
}

void build_plan(Session::Plan& p) {
    p.constants = std::move(p.graph.initializers);
    p.graph.initializers.clear();

    auto new_slot = [&](const std::string& name) {
        const int id = p.n_slots++;
        p.slot_of[name] = id;
        return id;
    };
    for (const auto& in : p.graph.inputs) {
        p.input_slots.push_back(new_slot(in.name));
    }

    for (const Node& node : p.graph.nodes) {
        if (!node.domain.empty() && node.domain != "ai.onnx") {
            load_fail(node.label() + ": unsupported operator domain '" + node.domain + "'");
        }
        const Kernel* kernel = find_kernel(node.op_type);
        if (kernel == nullptr) {
            load_fail(node.label() + ": unsupported operator '" + node.op_type + "'");
        }

        bool foldable = true;
        for (const auto& name : node.inputs) {
            if (name.empty() || p.constants.count(name) != 0) continue;
            if (p.slot_of.count(name) == 0) {
                load_fail(node.label() + ": input '" + name + "' is not produced before use");
            }
            foldable = false;
        }

        if (foldable) {
            std::vector<const Tensor*> args;
            for (const auto& name : node.inputs) {
                args.push_back(name.empty() ? nullptr : &p.constants.at(name));
            }
            std::vector<Tensor> out;
            try {
                out = invoke(node, *kernel, p.graph.opset, args);
            } catch (const KernelError& e) {
                load_fail(node.label() + ": " + e.what());
            }
            for (std::size_t i = 0; i < node.outputs.size() && i < out.size(); ++i) {
                if (!node.outputs[i].empty()) {
                    p.constants[node.outputs[i]] = std::move(out[i]);
                }
            }
            continue;
        }

        Step step;
        step.node = &node;
        step.kernel = *kernel;
        for (const auto& name : node.inputs) {
            if (name.empty()) {
                step.inputs.push_back(kOmitted);
            } else if (p.constants.count(name) != 0) {
                // Constants are looked up by name at run time.
                step.inputs.push_back(kOmitted);
            } else {
                step.inputs.push_back(p.slot_of.at(name));
            }
        }
        for (const auto& name : node.outputs) {
            step.outputs.push_back(name.empty() ? kOmitted : new_slot(name));
        }
        p.steps.push_back(std::move(step));
    }

    std::unordered_set<int> pinned;
    for (const auto& out : p.graph.outputs) {
        const auto it = p.slot_of.find(out.name);
        if (it != p.slot_of.end()) {
            pinned.insert(it->second);
        } else if (p.constants.count(out.name) == 0) {
            load_fail("graph output '" + out.name + "' is never produced");
        }
    }

    // Release each slot after its last reader.
    std::vector<int> last_use(static_cast<std::size_t>(p.n_slots), -1);
    for (std::size_t s = 0; s < p.steps.size(); ++s) {
        for (int id : p.steps[s].inputs) {
            if (id >= 0) last_use[static_cast<std::size_t>(id)] = static_cast<int>(s);
        }
    }
    for (int id = 0; id < p.n_slots; ++id) {
        const int s = last_use[static_cast<std::size_t>(id)];
        if (s >= 0 && pinned.count(id) == 0) {
            p.steps[static_cast<std::size_t>(s)].release.push_back(id);
        }
    }
}

bool dims_match(const ValueInfo& info, const Shape& shape) {
    if (info.dims.empty()) return true;  // rank unknown
    if (info.dims.size() != shape.size()) return false;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (info.dims[i] && *info.dims[i] != shape[i]) return false;
    }
    return true;
}

Tensor convert_feed(const ValueInfo& info, const Tensor& t) {
    if (t.dtype() == info.dtype) return t;
    if (info.dtype == DType::Int32 && t.dtype() == DType::Int64) {
        const auto v = t.data<int64_t>();
        return Tensor(t.shape(), std::vector<int32_t>(v.begin(), v.end()));
    }
    if (info.dtype == DType::Int64 && t.dtype() == DType::Int32) {
        const auto v = t.data<int32_t>();
        return Tensor(t.shape(), std::vector<int64_t>(v.begin(), v.end()));
    }
    throw Error(ErrorCode::InferenceFailure, "input '" + info.name + "' expects " + dtype_name(info.dtype) +
                                                 ", got " + dtype_name(t.dtype()));
}

}  // namespace

Session::Session(Graph graph) : plan_(std::make_unique<Plan>()) {
    plan_->graph = std::move(graph);
    build_plan(*plan_);
}

Session::Session(Session&&) noexcept = default;
Session& Session::operator=(Session&&) noexcept = default;
Session::~Session() = default;

const std::vector<ValueInfo>& Session::inputs() const { return plan_->graph.inputs; }
const std::vector<ValueInfo>& Session::outputs() const { return plan_->graph.outputs; }
int64_t Session::opset() const { return plan_->graph.opset; }
const std::map<std::string, std::string>& Session::metadata() const { return plan_->graph.metadata; }
const std::unordered_map<std::string, Tensor>& Session::constants() const { return plan_->constants; }

const ValueInfo* Session::find_input(std::string_view name) const {
    for (const auto& v : plan_->graph.inputs) {
        if (v.name == name) return &v;
    }
    return nullptr;
}

const ValueInfo* Session::find_output(std::string_view name) const {
    for (const auto& v : plan_->graph.outputs) {
        if (v.name == name) return &v;
    }
    return nullptr;
}

std::vector<Tensor> Session::run(const std::vector<std::pair<std::string, Tensor>>& feeds,
                                 const std::vector<std::string>& output_names) const {
    const Plan& p = *plan_;
    std::vector<std::optional<Tensor>> slots(static_cast<std::size_t>(p.n_slots));

    for (const auto& [name, tensor] : feeds) {
        const auto it = std::find_if(p.graph.inputs.begin(), p.graph.inputs.end(),
                                     [&](const ValueInfo& v) { return v.name == name; });
        if (it == p.graph.inputs.end()) {
            throw Error(ErrorCode::InferenceFailure, "model has no input named '" + name + "'");
        }
        if (!dims_match(*it, tensor.shape())) {
            throw Error(ErrorCode::InferenceFailure,
                        "input '" + name + "' has incompatible shape " + shape_string(tensor.shape()));
        }
        const auto index = static_cast<std::size_t>(it - p.graph.inputs.begin());
        slots[static_cast<std::size_t>(p.input_slots[index])] = convert_feed(*it, tensor);
    }
    for (std::size_t i = 0; i < p.graph.inputs.size(); ++i) {
        if (!slots[static_cast<std::size_t>(p.input_slots[i])]) {
            throw Error(ErrorCode::InferenceFailure, "input '" + p.graph.inputs[i].name + "' was not fed");
        }
    }

    std::vector<const Tensor*> args;
    for (const Step& step : p.steps) {
        args.clear();
        for (std::size_t i = 0; i < step.inputs.size(); ++i) {
            const std::string& name = step.node->inputs[i];
            if (name.empty()) {
                args.push_back(nullptr);
            } else if (step.inputs[i] == kOmitted) {
                args.push_back(&p.constants.at(name));
            } else {
                auto& slot = slots[static_cast<std::size_t>(step.inputs[i])];
                if (!slot) {
                    throw Error(ErrorCode::InferenceFailure, step.node->label() + ": input '" + name + "' is missing");
                }
                args.push_back(&*slot);
            }
        }
        std::vector<Tensor> out;
        try {
            out = invoke(*step.node, step.kernel, p.graph.opset, args);
        } catch (const KernelError& e) {
            throw Error(ErrorCode::InferenceFailure, step.node->label() + ": " + e.what());
        } catch (const std::exception& e) {
            throw Error(ErrorCode::InferenceFailure, step.node->label() + ": " + e.what());
        }
        for (std::size_t i = 0; i < step.outputs.size() && i < out.size(); ++i) {
            if (step.outputs[i] != kOmitted) {
                slots[static_cast<std::size_t>(step.outputs[i])] = std::move(out[i]);
            }
        }
        for (int id : step.release) {
            slots[static_cast<std::size_t>(id)].reset();
        }
    }

    std::vector<Tensor> results;
    results.reserve(output_names.size());
    for (const auto& name : output_names) {
        if (const auto c = p.constants.find(name); c != p.constants.end()) {
            results.push_back(c->second);
            continue;
        }
        const auto it = p.slot_of.find(name);
        if (it == p.slot_of.end() || !slots[static_cast<std::size_t>(it->second)]) {
            throw Error(ErrorCode::InferenceFailure, "model has no output named '" + name + "'");
        }
        results.push_back(*slots[static_cast<std::size_t>(it->second)]);
    }
    return results;
}

}  // namespace alignru::onnx
