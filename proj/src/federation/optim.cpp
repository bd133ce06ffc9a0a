#include <algorithm>
#include <cmath>

#include "fsl/common/errors.hpp"
#include "fsl/federation/federation.hpp"

namespace fsl::federation {

std::string_view to_string(Optimizer o) { return o == Optimizer::adam ? "adam" : "sgd"; }

Optimizer parse_optimizer(std::string_view text) {
    if (text == "adam") {
        return Optimizer::adam;
    }
    if (text == "sgd") {
        return Optimizer::sgd;
    }
    throw ConfigError("unknown optimizer '" + std::string(text) + "' (expected adam|sgd)");
}

std::string_view to_string(LossPositions p) { return p == LossPositions::last ? "last" : "all"; }

LossPositions parse_loss_positions(std::string_view text) {
    if (text == "last") {
        return LossPositions::last;
    }
    if (text == "all") {
        return LossPositions::all;
    }
    throw ConfigError("unknown loss_positions '" + std::string(text) + "' (expected last|all)");
}

void validate(const RoundConfig& cfg) {
    if (!(cfg.client_fraction > 0.0 && cfg.client_fraction <= 1.0)) {
        throw ConfigError("client_fraction must lie in (0, 1]");
    }
    if (cfg.clients_per_round && *cfg.clients_per_round == 0) {
        throw ConfigError("clients_per_round must be >= 1");
    }
    if (cfg.local_epochs == 0 || cfg.batch_size == 0 || cfg.eval_every == 0 || cfg.eval_k == 0 ||
        cfg.parallel_clients == 0) {
        throw ConfigError("local_epochs, batch_size, eval_every, eval_k and parallel_clients must be >= 1");
    }
    if (!(cfg.learning_rate >= 0.0) || !(cfg.weight_decay >= 0.0)) {
        throw ConfigError("learning_rate and weight_decay must be >= 0");
    }
    if (!(cfg.clip_norm > 0.0)) {
        throw ConfigError("clip_norm must be > 0");
    }
    if (!(cfg.lambda_cl >= 0.0)) {
        throw ConfigError("lambda_cl must be >= 0");
    }
    if (!(cfg.tau > 0.0)) {
        throw ConfigError("tau must be > 0");
    }
    if (cfg.lambda_cl > 0.0 && !cfg.views.future && !cfg.views.paraphrase) {
        throw ConfigError("the contrastive loss needs at least one positive view");
    }
}

AdamState AdamState::zeros_like(const TensorMap& params) {
    AdamState s;
    for (const auto& [name, t] : params) {
        s.m.emplace(name, numerics::Tensor::filled(t.shape(), 0.0));
        s.v.emplace(name, numerics::Tensor::filled(t.shape(), 0.0));
    }
    return s;
}

std::vector<std::size_t> sample_clients_count(std::size_t n_clients, std::size_t count, rng::Engine& eng) {
    if (n_clients == 0) {
        throw ContractError("cannot sample from zero clients");
    }
    count = std::clamp<std::size_t>(count, 1, n_clients);
    auto picked = rng::sample_without_replacement(eng, n_clients, count);
    std::sort(picked.begin(), picked.end());
    return picked;
}

std::vector<std::size_t> sample_clients(std::size_t n_clients, double fraction, rng::Engine& eng) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw ConfigError("client fraction must lie in (0, 1]");
    }
    const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n_clients)));
    return sample_clients_count(n_clients, std::max<std::size_t>(1, count), eng);
}

double global_norm(const GradMap& grads) {
    double s = 0.0;
    for (const auto& [name, g] : grads) {
        s += g.l2_norm_squared();
    }
    return std::sqrt(s);
}

GradMap clip_gradients(GradMap grads, double max_norm) {
    if (!(max_norm > 0.0)) {
        throw ConfigError("clip max_norm must be > 0");
    }
    const double norm = global_norm(grads);
    if (norm > max_norm) {
        const double factor = max_norm / norm;
        for (auto& [name, g] : grads) {
            for (double& x : g.data()) {
                x *= factor;
            }
        }
    }
    return grads;
}

void adam_step(TensorMap& params, const GradMap& grads, AdamState& state, double lr, double weight_decay) {
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(kAdamBeta1, t);
    const double bc2 = 1.0 - std::pow(kAdamBeta2, t);
    for (auto& [name, theta] : params) {
        auto th = theta.data();
        if (weight_decay != 0.0) {
            for (double& x : th) {
                x -= lr * weight_decay * x;
            }
        }
        const auto git = grads.find(name);
        if (git == grads.end()) {
            continue;
        }
        if (git->second.shape() != theta.shape()) {
            throw DimensionError("gradient for '" + name + "' has shape " + numerics::shape_to_string(git->second.shape()) +
                                 ", parameter has " + numerics::shape_to_string(theta.shape()));
        }
        auto& m = state.m.try_emplace(name, numerics::Tensor::filled(theta.shape(), 0.0)).first->second;
        auto& v = state.v.try_emplace(name, numerics::Tensor::filled(theta.shape(), 0.0)).first->second;
        const auto g = git->second.data();
        auto md = m.data();
        auto vd = v.data();
        for (std::size_t i = 0; i < th.size(); ++i) {
            md[i] = kAdamBeta1 * md[i] + (1.0 - kAdamBeta1) * g[i];
            vd[i] = kAdamBeta2 * vd[i] + (1.0 - kAdamBeta2) * g[i] * g[i];
            const double mhat = md[i] / bc1;
            const double vhat = vd[i] / bc2;
            th[i] -= lr * mhat / (std::sqrt(vhat) + kAdamEps);
        }
    }
}

void sgd_step(TensorMap& params, const GradMap& grads, double lr, double weight_decay) {
    for (auto& [name, theta] : params) {
        auto th = theta.data();
        if (weight_decay != 0.0) {
            for (double& x : th) {
                x -= lr * weight_decay * x;
            }
        }
        const auto git = grads.find(name);
        if (git == grads.end()) {
            continue;
        }
        const auto g = git->second.data();
        for (std::size_t i = 0; i < th.size(); ++i) {
            th[i] -= lr * g[i];
        }
    }
}

ParamSet fedavg_aggregate(std::vector<ClientUpdate> updates) {
    if (updates.empty()) {
        throw ContractError("fedavg_aggregate needs at least one update");
    }
    std::stable_sort(updates.begin(), updates.end(),
                     [](const ClientUpdate& a, const ClientUpdate& b) { return a.client_index < b.client_index; });
    const ParamSet& first = updates.front().params;
    for (const auto& u : updates) {
        if (!u.params.same_layout(first)) {
            throw DimensionError("client " + std::to_string(u.client_index) +
                                 " sent parameters whose layout differs from the global model");
        }
    }
    TensorMap sum;
    TensorMap lo;
    TensorMap hi;
    for (const auto& [name, t] : first.tensors()) {
        sum.emplace(name, numerics::Tensor::filled(t.shape(), 0.0));
        lo.emplace(name, t);
        hi.emplace(name, t);
    }
    for (const auto& u : updates) {
        for (auto& [name, acc] : sum) {
            const auto src = u.params.at(name).data();
            auto dst = acc.data();
            auto mn = lo.at(name).data();
            auto mx = hi.at(name).data();
            for (std::size_t i = 0; i < dst.size(); ++i) {
                dst[i] += src[i];
                mn[i] = std::min(mn[i], src[i]);
                mx[i] = std::max(mx[i], src[i]);
            }
        }
    }
    // The exact mean lies in [min, max]; clamping only removes rounding
    // error, so identical updates come back bit-for-bit.
    const auto n = static_cast<double>(updates.size());
    for (auto& [name, acc] : sum) {
        auto dst = acc.data();
        const auto mn = lo.at(name).data();
        const auto mx = hi.at(name).data();
        for (std::size_t i = 0; i < dst.size(); ++i) {
            dst[i] = std::clamp(dst[i] / n, mn[i], mx[i]);
        }
    }
    // Keep the layout of the inputs (a GRU's max_len is not in its tensors).
    ParamSet out = first;
    out.tensors() = std::move(sum);
    return out;
}

} // namespace fsl::federation
