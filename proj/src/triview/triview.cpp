#include "fsl/triview/triview.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "fsl/common/errors.hpp"
#include "fsl/numerics/ops.hpp"

namespace fsl::triview {

namespace ops = numerics;

namespace {

void require_tau(double tau) {
    if (!(tau > 0.0)) {
        throw ConfigError("temperature tau must be > 0, got " + std::to_string(tau));
    }
}

void require_lambda(double lambda_cl) {
    if (!(lambda_cl >= 0.0)) {
        throw ConfigError("lambda_cl must be >= 0, got " + std::to_string(lambda_cl));
    }
}

Var similarity(Var a, Var b, Similarity kind) {
    return kind == Similarity::cosine ? ops::cosine_similarity(a, b) : ops::dot(a, b);
}

double similarity_value(const Tensor& a, const Tensor& b, Similarity kind) {
    numerics::Tape tape;
    return similarity(tape.constant(a), tape.constant(b), kind).value().item();
}

} // namespace

std::string_view to_string(Similarity sim) { return sim == Similarity::cosine ? "cosine" : "dot"; }

Similarity parse_similarity(std::string_view text) {
    if (text == "cosine") {
        return Similarity::cosine;
    }
    if (text == "dot") {
        return Similarity::dot;
    }
    throw ConfigError("unknown similarity '" + std::string(text) + "' (expected cosine|dot)");
}

double pos_partition(const ViewEmbeddings& v, Similarity sim) {
    require_tau(v.tau);
    return std::exp(similarity_value(v.anchor, v.future, sim) / v.tau) +
           std::exp(similarity_value(v.anchor, v.paraphrase, sim) / v.tau);
}

double neg_partition(const ViewEmbeddings& v, Similarity sim) {
    require_tau(v.tau);
    return std::exp(similarity_value(v.anchor, v.counterfactual, sim) / v.tau);
}

double triview_loss(const ViewEmbeddings& v, Similarity sim) {
    numerics::Tape tape;
    ContrastiveConfig cfg;
    cfg.tau = v.tau;
    cfg.similarity = sim;
    return triview_loss(tape.constant(v.anchor), tape.constant(v.future), tape.constant(v.paraphrase),
                        tape.constant(v.counterfactual), cfg)
        .value()
        .item();
}

Var triview_loss(Var anchor, std::optional<Var> future, std::optional<Var> paraphrase,
                 std::optional<Var> counterfactual, const ContrastiveConfig& cfg) {
    require_tau(cfg.tau);
    auto view = [&](Var v) { return cfg.stop_gradient_views ? ops::detach(v) : v; };
    std::vector<Var> positives;
    std::vector<Var> negatives;
    if (cfg.views.future && future) {
        positives.push_back(similarity(anchor, view(*future), cfg.similarity));
    }
    if (cfg.views.paraphrase && paraphrase) {
        positives.push_back(similarity(anchor, view(*paraphrase), cfg.similarity));
    }
    if (cfg.views.counterfactual && counterfactual) {
        negatives.push_back(similarity(anchor, view(*counterfactual), cfg.similarity));
    }
    if (positives.empty()) {
        throw ConfigError("tri-view loss needs at least one positive view");
    }
    return ops::contrastive_nll(positives, negatives, cfg.tau);
}

double local_objective(double rec_loss, double cl_loss, double lambda_cl) {
    require_lambda(lambda_cl);
    return rec_loss + lambda_cl * cl_loss;
}

Var local_objective(Var rec_loss, Var cl_loss, double lambda_cl) {
    require_lambda(lambda_cl);
    return ops::add(rec_loss, ops::scale(cl_loss, lambda_cl));
}

} // namespace fsl::triview
