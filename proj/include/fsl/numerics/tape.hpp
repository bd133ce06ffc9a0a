#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fsl/numerics/tensor.hpp"

namespace fsl::numerics {

class Tape;

// Handle to a node on a Tape. Cheap to copy; only valid while its tape lives.
class Var {
  public:
    Var() = default;

    [[nodiscard]] Tape& tape() const;
    [[nodiscard]] std::size_t id() const noexcept { return id_; }
    [[nodiscard]] const Tensor& value() const;
    [[nodiscard]] const Shape& shape() const { return value().shape(); }
    [[nodiscard]] bool valid() const noexcept { return tape_ != nullptr; }

  private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

// Define-by-run reverse-mode tape. Nodes are appended in execution order and
// backward() walks them in exact reverse. One tape per forward pass; a tape
// is never shared between threads.
class Tape {
  public:
    // Called during backward with the node's own value and its accumulated
    // output gradient. Implementations add into their inputs' buffers via
    // Tape::grad().
    using BackwardFn = std::function<void(Tape&, const Tensor& out, std::span<const double> grad_out)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);

    // Registers a trainable slot. Registering the same name again returns the
    // existing node, so a parameter used twice accumulates its gradient.
    Var param(const std::string& name, const Tensor& value);
    [[nodiscard]] bool has_param(const std::string& name) const { return params_.contains(name); }

    // Appends an op result. Throws NumericalError if any value is not finite.
    // A null backward marks the node as not requiring gradients.
    Var record(Tensor value, BackwardFn backward, std::string_view op);

    // True for parameters and for op results downstream of one.
    [[nodiscard]] bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

    [[nodiscard]] const Tensor& value(std::size_t id) const { return nodes_[id].value; }
    [[nodiscard]] std::size_t size() const noexcept { return nodes_.size(); }

    // Gradient accumulation buffer for a node; allocated (zeroed) on first use.
    std::span<double> grad(std::size_t id);

    // Reverse sweep from a scalar root. Returns a gradient for every
    // registered parameter (zeros when the parameter does not reach the loss).
    GradMap backward(Var loss);

  private:
    struct Node {
        Tensor value;
        BackwardFn backward;
        std::string_view op;
        bool requires_grad = false;
    };

    std::vector<Node> nodes_;
    std::vector<std::vector<double>> grads_;
    std::map<std::string, std::size_t> params_;
};

} // namespace fsl::numerics
