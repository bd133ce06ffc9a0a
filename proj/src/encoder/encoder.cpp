#include "fsl/encoder/encoder.hpp"

#include <cmath>
#include <numeric>

#include "fsl/common/errors.hpp"
#include "fsl/numerics/ops.hpp"

namespace fsl::encoder {

namespace ops = numerics;

namespace {

void require_nonempty(std::span<const ItemId> items) {
    if (items.empty()) {
        throw ContractError("cannot encode an empty sequence");
    }
}

Var lookup_items(ModelGraph& g, std::span<const ItemId> items) {
    const ParamSet& p = g.params();
    return ops::embedding_lookup(g.param(slot::item_embeddings), items, p.padding_id());
}

// h' given the three input projections for this step.
Var gru_step(ModelGraph& g, Var xz, Var xr, Var xh, Var h) {
    const Var z = ops::sigmoid(ops::add(ops::add(xz, ops::matmul(h, g.param(slot::gru_u_z))), g.param(slot::gru_b_z)));
    const Var r = ops::sigmoid(ops::add(ops::add(xr, ops::matmul(h, g.param(slot::gru_u_r))), g.param(slot::gru_b_r)));
    const Var c = ops::tanh(
        ops::add(ops::add(xh, ops::matmul(ops::mul(r, h), g.param(slot::gru_u_h))), g.param(slot::gru_b_h)));
    // (1 - z) * h + z * c == h + z * (c - h)
    return ops::add(h, ops::mul(z, ops::sub(c, h)));
}

} // namespace

Var ModelGraph::param(const char* name) {
    if (trainable_) {
        return tape_.param(name, params_.at(name));
    }
    if (const auto it = constants_.find(name); it != constants_.end()) {
        return it->second;
    }
    const Var v = tape_.constant(params_.at(name));
    constants_.emplace(name, v);
    return v;
}

Var gru_cell(ModelGraph& g, Var x, Var h) {
    const std::size_t d = g.params().dims().dim;
    if (x.value().rank() != 1 || x.value().size() != d || h.value().rank() != 1 || h.value().size() != d) {
        throw DimensionError("gru_cell: expected x and h of shape [" + std::to_string(d) + "], got " +
                             numerics::shape_to_string(x.shape()) + " and " + numerics::shape_to_string(h.shape()));
    }
    return gru_step(g, ops::matmul(x, g.param(slot::gru_w_z)), ops::matmul(x, g.param(slot::gru_w_r)),
                    ops::matmul(x, g.param(slot::gru_w_h)), h);
}

Var encode_gru(ModelGraph& g, std::span<const ItemId> items) {
    require_nonempty(items);
    if (g.params().kind() != BackboneKind::gru) {
        throw ContractError("encode_gru on a non-gru parameter set");
    }
    const std::size_t d = g.params().dims().dim;
    const Var x = lookup_items(g, items);
    // Project every step at once; row t of X W equals x_t W.
    const Var xz = ops::matmul(x, g.param(slot::gru_w_z));
    const Var xr = ops::matmul(x, g.param(slot::gru_w_r));
    const Var xh = ops::matmul(x, g.param(slot::gru_w_h));
    Var h = g.tape().constant(Tensor({d}));
    for (std::size_t t = 0; t < items.size(); ++t) {
        h = gru_step(g, ops::row(xz, t), ops::row(xr, t), ops::row(xh, t), h);
    }
    return h;
}

Var encode_attention_all(ModelGraph& g, std::span<const ItemId> items) {
    require_nonempty(items);
    const ParamSet& p = g.params();
    if (p.kind() != BackboneKind::attention) {
        throw ContractError("encode_attention on a non-attention parameter set");
    }
    const std::size_t n = items.size();
    if (n > p.dims().max_len) {
        throw ContractError("sequence length " + std::to_string(n) + " exceeds the positional table (" +
                            std::to_string(p.dims().max_len) + ")");
    }
    ItemList positions(n);
    std::iota(positions.begin(), positions.end(), ItemId{0});
    const Var x = ops::add(lookup_items(g, items), ops::embedding_lookup(g.param(slot::attn_positional), positions));
    const Var q = ops::matmul(x, g.param(slot::attn_w_q));
    const Var k = ops::matmul(x, g.param(slot::attn_w_k));
    const Var v = ops::matmul(x, g.param(slot::attn_w_v));
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(p.dims().dim));
    const Var scores = ops::scale(ops::matmul(q, ops::transpose(k)), inv_sqrt_d);
    const Var weights = ops::causal_softmax(scores);
    const Var mixed = ops::matmul(weights, v);
    return ops::add(ops::matmul(mixed, g.param(slot::attn_w_o)), x);
}

Var encode_attention(ModelGraph& g, std::span<const ItemId> items) {
    const Var all = encode_attention_all(g, items);
    return ops::row(all, items.size() - 1);
}

Var encode(ModelGraph& g, std::span<const ItemId> items) {
    return g.params().kind() == BackboneKind::gru ? encode_gru(g, items) : encode_attention(g, items);
}

Var score_items(ModelGraph& g, Var h) {
    return ops::score_rows(h, g.param(slot::item_embeddings), g.params().dims().n_items);
}

Var next_item_loss(ModelGraph& g, std::span<const ItemId> items, ItemId target) {
    if (target >= g.params().dims().n_items) {
        throw IndexError("next_item_loss: target " + std::to_string(target) + " is not a real item");
    }
    return ops::cross_entropy_logits(score_items(g, encode(g, items)), target);
}

Var next_item_loss_all(ModelGraph& g, std::span<const ItemId> sequence) {
    if (g.params().kind() != BackboneKind::attention) {
        throw ConfigError("all-position training is only supported by the attention backbone");
    }
    if (sequence.size() < 2) {
        throw ContractError("next_item_loss_all needs at least two items");
    }
    const auto inputs = sequence.first(sequence.size() - 1);
    std::vector<std::size_t> targets(sequence.begin() + 1, sequence.end());
    const Var states = encode_attention_all(g, inputs);
    return ops::cross_entropy_rows(score_items(g, states), targets);
}

Tensor encode(const ParamSet& params, std::span<const ItemId> items) {
    Tape tape;
    ModelGraph g(tape, params, false);
    return encode(g, items).value();
}

Tensor score_items(const ParamSet& params, const Tensor& h) {
    Tape tape;
    ModelGraph g(tape, params, false);
    return score_items(g, tape.constant(h)).value();
}

double next_item_loss(const ParamSet& params, std::span<const ItemId> items, ItemId target) {
    Tape tape;
    ModelGraph g(tape, params, false);
    return next_item_loss(g, items, target).value().item();
}

} // namespace fsl::encoder
