#include "fsl/numerics/tape.hpp"

#include "fsl/common/errors.hpp"

namespace fsl::numerics {

Tape& Var::tape() const {
    if (tape_ == nullptr) {
        throw ContractError("use of an unbound Var");
    }
    return *tape_;
}

const Tensor& Var::value() const { return tape().value(id_); }

Var Tape::constant(Tensor value) { return record(std::move(value), nullptr, "constant"); }

Var Tape::param(const std::string& name, const Tensor& value) {
    if (const auto it = params_.find(name); it != params_.end()) {
        return Var(this, it->second);
    }
    Var v = record(value, nullptr, "param");
    nodes_.back().requires_grad = true;
    params_.emplace(name, v.id());
    return v;
}

Var Tape::record(Tensor value, BackwardFn backward, std::string_view op) {
    if (!value.all_finite()) {
        throw NumericalError("non-finite value produced by op '" + std::string(op) + "'");
    }
    const bool needs_grad = static_cast<bool>(backward);
    nodes_.push_back(Node{std::move(value), std::move(backward), op, needs_grad});
    grads_.emplace_back();
    return Var(this, nodes_.size() - 1);
}

std::span<double> Tape::grad(std::size_t id) {
    auto& g = grads_[id];
    if (g.empty()) {
        g.assign(nodes_[id].value.size(), 0.0);
    }
    return g;
}

GradMap Tape::backward(Var loss) {
    if (&loss.tape() != this) {
        throw ContractError("backward on a Var from another tape");
    }
    if (value(loss.id()).size() != 1) {
        throw DimensionError("backward requires a scalar root, got shape " +
                             shape_to_string(value(loss.id()).shape()));
    }
    for (auto& g : grads_) {
        g.clear();
    }
    grad(loss.id())[0] = 1.0;
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
        Node& node = nodes_[i];
        if (!node.backward || grads_[i].empty()) {
            continue;
        }
        // Inputs always have smaller ids, so this buffer stays put while the
        // callback allocates theirs.
        node.backward(*this, node.value, std::span<const double>(grads_[i]));
    }
    GradMap out;
    for (const auto& [name, id] : params_) {
        const Tensor& v = nodes_[id].value;
        if (grads_[id].empty()) {
            out.emplace(name, Tensor(v.shape()));
        } else {
            out.emplace(name, Tensor(v.shape(), grads_[id]));
        }
    }
    return out;
}

} // namespace fsl::numerics
