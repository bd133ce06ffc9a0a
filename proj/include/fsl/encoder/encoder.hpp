#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>

#include "fsl/common/types.hpp"
#include "fsl/encoder/params.hpp"
#include "fsl/numerics/tape.hpp"

namespace fsl::encoder {

using numerics::Tape;
using numerics::Var;

// Binds a ParamSet to a tape. Parameters are registered lazily under their
// slot names, so every encode on the same graph shares one node per weight.
// A non-trainable graph records weights as constants (no backward work).
class ModelGraph {
  public:
    ModelGraph(Tape& tape, const ParamSet& params, bool trainable = true)
        : tape_(tape), params_(params), trainable_(trainable) {}

    Var param(const char* name);

    [[nodiscard]] Tape& tape() noexcept { return tape_; }
    [[nodiscard]] const ParamSet& params() const noexcept { return params_; }

  private:
    Tape& tape_;
    const ParamSet& params_;
    bool trainable_;
    std::map<std::string, Var, std::less<>> constants_;
};

// z = s(xW_z + hU_z + b_z), r = s(xW_r + hU_r + b_r),
// c = tanh(xW_h + (r*h)U_h + b_h), h' = (1-z)*h + z*c
Var gru_cell(ModelGraph& g, Var x, Var h);

// Final hidden state of the GRU folded over the embedded items (h0 = 0).
Var encode_gru(ModelGraph& g, std::span<const ItemId> items);

// One causal single-head self-attention block over embeddings + positional
// rows, with output projection and residual. Returns all positions [T x d].
Var encode_attention_all(ModelGraph& g, std::span<const ItemId> items);

// Last position of encode_attention_all.
Var encode_attention(ModelGraph& g, std::span<const ItemId> items);

// Dispatches on the ParamSet's backbone.
Var encode(ModelGraph& g, std::span<const ItemId> items);

// Weight-tied logits over the M real items (padding row excluded).
Var score_items(ModelGraph& g, Var h);

// -log p(target | items)
Var next_item_loss(ModelGraph& g, std::span<const ItemId> items, ItemId target);

// Mean next-item loss over every prefix of `sequence` (attention only):
// position t predicts sequence[t + 1]. Requires length >= 2.
Var next_item_loss_all(ModelGraph& g, std::span<const ItemId> sequence);

// Tape-free conveniences for evaluation.
Tensor encode(const ParamSet& params, std::span<const ItemId> items);
Tensor score_items(const ParamSet& params, const Tensor& h);
double next_item_loss(const ParamSet& params, std::span<const ItemId> items, ItemId target);

} // namespace fsl::encoder
