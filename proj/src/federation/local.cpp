#include <cmath>
#include <numeric>

#include "fsl/common/errors.hpp"
#include "fsl/common/rng.hpp"
#include "fsl/encoder/encoder.hpp"
#include "fsl/federation/federation.hpp"
#include "fsl/numerics/ops.hpp"

namespace fsl::federation {

namespace ops = numerics;
using encoder::ModelGraph;
using numerics::Tape;
using numerics::Var;

namespace {

constexpr std::uint64_t kShuffleTag = 0x73687566ULL;

// Most recent max_len items.
std::span<const ItemId> recent(std::span<const ItemId> seq, std::size_t max_len) {
    return seq.size() > max_len ? seq.last(max_len) : seq;
}

struct ExampleLoss {
    Var rec;
    std::optional<Var> cl;
};

ExampleLoss example_graph(ModelGraph& g, const LocalExample& ex, const RoundConfig& cfg) {
    const std::size_t max_len = g.params().dims().max_len;
    const auto seq = recent(ex.sequence, max_len + 1);
    if (seq.size() < 2) {
        throw ContractError("local training needs sequences of length >= 2");
    }
    const auto inputs = seq.first(seq.size() - 1);
    ExampleLoss out;
    Var anchor;
    if (cfg.loss_positions == LossPositions::all) {
        if (g.params().kind() != encoder::BackboneKind::attention) {
            throw ConfigError("loss_positions = all requires the attention backbone");
        }
        const Var states = encoder::encode_attention_all(g, inputs);
        std::vector<std::size_t> targets(seq.begin() + 1, seq.end());
        out.rec = ops::cross_entropy_rows(encoder::score_items(g, states), targets);
        anchor = ops::row(states, inputs.size() - 1);
    } else {
        anchor = encoder::encode(g, inputs);
        out.rec = ops::cross_entropy_logits(encoder::score_items(g, anchor), seq.back());
    }
    if (cfg.lambda_cl > 0.0) {
        if (ex.views == nullptr) {
            throw ContractError("lambda_cl > 0 but no views were supplied");
        }
        const views::ViewTriple& v = *ex.views;
        auto view = [&](bool on, const ItemList& items) -> std::optional<Var> {
            if (!on) {
                return std::nullopt;
            }
            return encoder::encode(g, recent(items, max_len));
        };
        triview::ContrastiveConfig cc;
        cc.tau = cfg.tau;
        cc.similarity = cfg.similarity;
        cc.views = cfg.views;
        cc.stop_gradient_views = cfg.stop_gradient_views;
        out.cl = triview::triview_loss(anchor, view(cfg.views.future, v.future), view(cfg.views.paraphrase, v.paraphrase),
                                       view(cfg.views.counterfactual, v.counterfactual), cc);
    }
    return out;
}

} // namespace

std::pair<double, double> example_losses(const ParamSet& params, const LocalExample& ex, const RoundConfig& cfg) {
    Tape tape;
    ModelGraph g(tape, params, false);
    const ExampleLoss l = example_graph(g, ex, cfg);
    return {l.rec.value().item(), l.cl ? l.cl->value().item() : 0.0};
}

ClientUpdate local_train(const ParamSet& global, std::span<const LocalExample> examples, const RoundConfig& cfg,
                         std::uint64_t client_seed, std::size_t client_index) {
    if (examples.empty()) {
        throw ContractError("local_train needs at least one example");
    }
    ClientUpdate update;
    update.client_index = client_index;
    update.params = global;
    TensorMap& weights = update.params.tensors();
    AdamState adam = AdamState::zeros_like(weights);
    auto eng = rng::make_engine(rng::derive({client_seed, kShuffleTag}));

    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    double rec_total = 0.0;
    double cl_total = 0.0;
    for (std::size_t epoch = 0; epoch < cfg.local_epochs; ++epoch) {
        if (order.size() > 1) {
            // Fisher-Yates with the portable index draw.
            for (std::size_t i = order.size() - 1; i > 0; --i) {
                std::swap(order[i], order[rng::uniform_index(eng, i + 1)]);
            }
        }
        double epoch_obj = 0.0;
        std::size_t epoch_batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const double inv_b = 1.0 / static_cast<double>(end - start);
            Tape tape;
            ModelGraph g(tape, update.params);
            std::optional<Var> objective;
            double rec_sum = 0.0;
            double cl_sum = 0.0;
            for (std::size_t k = start; k < end; ++k) {
                const ExampleLoss l = example_graph(g, examples[order[k]], cfg);
                rec_sum += l.rec.value().item();
                Var obj = l.rec;
                if (l.cl) {
                    cl_sum += l.cl->value().item();
                    obj = triview::local_objective(l.rec, *l.cl, cfg.lambda_cl);
                }
                objective = objective ? ops::add(*objective, obj) : obj;
            }
            const Var loss = ops::scale(*objective, inv_b);
            const double loss_value = loss.value().item();
            if (!std::isfinite(loss_value)) {
                throw NumericalError("non-finite local objective at epoch " + std::to_string(epoch + 1));
            }
            GradMap grads = clip_gradients(tape.backward(loss), cfg.clip_norm);
            if (cfg.optimizer == Optimizer::adam) {
                adam_step(weights, grads, adam, cfg.learning_rate, cfg.weight_decay);
            } else {
                sgd_step(weights, grads, cfg.learning_rate, cfg.weight_decay);
            }
            for (const auto& [name, t] : weights) {
                if (!t.all_finite()) {
                    throw NumericalError("parameter '" + name + "' became non-finite");
                }
            }
            rec_total += rec_sum * inv_b;
            cl_total += cl_sum * inv_b;
            epoch_obj += loss_value;
            ++epoch_batches;
            ++update.stats.steps;
        }
        update.stats.epoch_objective.push_back(epoch_obj / static_cast<double>(epoch_batches));
    }
    update.stats.rec_loss = rec_total / static_cast<double>(update.stats.steps);
    update.stats.cl_loss = cl_total / static_cast<double>(update.stats.steps);
    return update;
}

ClientUpdate local_train(const ParamSet& global, const data::ClientDataset& client, const views::ViewTriple& views,
                         const RoundConfig& cfg, std::uint64_t client_seed, std::size_t client_index) {
    const LocalExample ex{client.train.items, &views};
    return local_train(global, std::span<const LocalExample>(&ex, 1), cfg, client_seed, client_index);
}

} // namespace fsl::federation
