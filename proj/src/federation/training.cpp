#include <chrono>
#include <cmath>

#include "fsl/common/errors.hpp"
#include "fsl/common/log.hpp"
#include "fsl/common/parallel.hpp"
#include "fsl/federation/federation.hpp"

namespace fsl::federation {

namespace {

constexpr std::uint64_t kSampleTag = 0x73616d70ULL;
constexpr std::uint64_t kViewTag = 0x76696577ULL;
constexpr std::uint64_t kClientTag = 0x636c6e74ULL;

std::vector<std::size_t> pick_clients(std::size_t n, const RoundConfig& cfg, std::size_t round) {
    auto eng = rng::make_engine(rng::derive({cfg.global_seed, kSampleTag, round}));
    if (cfg.clients_per_round) {
        return sample_clients_count(n, *cfg.clients_per_round, eng);
    }
    return sample_clients(n, cfg.client_fraction, eng);
}

} // namespace

std::string_view to_string(TrainingMode m) {
    switch (m) {
    case TrainingMode::federated:
        return "federated";
    case TrainingMode::centralized:
        return "centralized";
    case TrainingMode::local_only:
        return "local_only";
    }
    return "federated";
}

std::uint64_t view_seed(std::uint64_t global_seed, std::string_view user_id, std::size_t round) {
    return rng::derive({global_seed, kViewTag, rng::hash_string(user_id), round});
}

std::uint64_t client_seed(std::uint64_t global_seed, std::string_view user_id, std::size_t round) {
    return rng::derive({global_seed, kClientTag, rng::hash_string(user_id), round});
}

TrainingResult run_training(const TrainingSetup& setup) {
    if (setup.clients == nullptr || setup.catalog == nullptr) {
        throw ContractError("run_training needs clients and an item catalog");
    }
    const auto& clients = *setup.clients;
    const RoundConfig& cfg = setup.round;
    validate(cfg);
    if (clients.empty()) {
        throw ContractError("run_training needs at least one client");
    }
    if (setup.catalog->size() != setup.init.dims().n_items) {
        throw ConfigError("catalog has " + std::to_string(setup.catalog->size()) + " items, model expects " +
                          std::to_string(setup.init.dims().n_items));
    }

    const bool with_views = cfg.lambda_cl > 0.0;
    std::unique_ptr<views::ViewGenerator> generator;
    if (with_views) {
        generator = std::make_unique<views::ViewGenerator>(setup.generator, *setup.catalog,
                                                           setup.init.padding_id(), setup.llm_client);
    }
    auto make_views = [&](const data::ClientDataset& c, std::size_t round) {
        return generator->generate(c.train.items, view_seed(cfg.global_seed, c.user_id, round));
    };

    TrainingResult result;
    result.params = setup.init;
    if (setup.mode == TrainingMode::local_only) {
        result.personal.assign(clients.size(), setup.init);
    }

    for (std::size_t round = 1; round <= cfg.rounds; ++round) {
        const auto t0 = std::chrono::steady_clock::now();
        RoundReport report;
        report.round = round;

        if (setup.mode == TrainingMode::centralized) {
            // One shard holding every sequence; the "aggregate" of one update
            // is that update.
            std::vector<views::ViewTriple> triples(with_views ? clients.size() : 0);
            parallel_for(triples.size(), cfg.parallel_clients,
                         [&](std::size_t i) { triples[i] = make_views(clients[i], round); });
            std::vector<LocalExample> examples;
            examples.reserve(clients.size());
            for (std::size_t i = 0; i < clients.size(); ++i) {
                examples.push_back({clients[i].train.items, with_views ? &triples[i] : nullptr});
            }
            auto update = local_train(result.params, examples, cfg,
                                      rng::derive({cfg.global_seed, kClientTag, round}), 0);
            report.rec_loss = update.stats.rec_loss;
            report.cl_loss = update.stats.cl_loss;
            report.clients = 1;
            result.params = fedavg_aggregate({std::move(update)});
        } else {
            const auto picked = pick_clients(clients.size(), cfg, round);
            std::vector<std::optional<ClientUpdate>> slots(picked.size());
            parallel_for(picked.size(), cfg.parallel_clients, [&](std::size_t s) {
                const std::size_t idx = picked[s];
                const auto& client = clients[idx];
                const ParamSet& start = setup.mode == TrainingMode::local_only ? result.personal[idx] : result.params;
                try {
                    views::ViewTriple triple;
                    if (with_views) {
                        triple = make_views(client, round);
                    }
                    slots[s] = local_train(start, client, triple, cfg, client_seed(cfg.global_seed, client.user_id, round),
                                           idx);
                } catch (const NumericalError& e) {
                    log::warn("round " + std::to_string(round) + ": client " + client.user_id +
                              " excluded: " + e.what());
                }
            });
            std::vector<ClientUpdate> updates;
            double rec = 0.0;
            double cl = 0.0;
            for (auto& slot : slots) {
                if (!slot) {
                    ++result.excluded_updates;
                    continue;
                }
                rec += slot->stats.rec_loss;
                cl += slot->stats.cl_loss;
                updates.push_back(std::move(*slot));
            }
            if (updates.empty()) {
                throw NumericalError("round " + std::to_string(round) + ": every sampled client diverged");
            }
            report.rec_loss = rec / static_cast<double>(updates.size());
            report.cl_loss = cl / static_cast<double>(updates.size());
            report.clients = updates.size();
            if (setup.mode == TrainingMode::local_only) {
                for (auto& u : updates) {
                    result.personal[u.client_index] = std::move(u.params);
                }
            } else {
                result.params = fedavg_aggregate(std::move(updates));
            }
        }

        if (round % cfg.eval_every == 0 || round == cfg.rounds) {
            report.metrics =
                evaluate_result(result, setup.mode, clients, eval::Split::valid, cfg.eval_k, cfg.parallel_clients);
        }
        if (setup.record_wall_ms) {
            report.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0)
                                 .count();
        }
        if (!std::isfinite(report.rec_loss) || !std::isfinite(report.cl_loss)) {
            throw NumericalError("round " + std::to_string(round) + ": non-finite global loss");
        }
        log::info("round " + std::to_string(round) + " rec=" + std::to_string(report.rec_loss) +
                  " cl=" + std::to_string(report.cl_loss) + " clients=" + std::to_string(report.clients));
        if (setup.on_round) {
            setup.on_round(report);
        }
        result.history.push_back(std::move(report));
    }
    if (generator) {
        result.view_stats = generator->stats();
    }
    return result;
}

eval::RankingMetrics evaluate_result(const TrainingResult& result, TrainingMode mode,
                                     const std::vector<data::ClientDataset>& clients, eval::Split split, std::size_t k,
                                     std::size_t workers) {
    if (mode != TrainingMode::local_only) {
        return eval::evaluate_split(result.params, clients, split, k, workers);
    }
    if (result.personal.size() != clients.size()) {
        throw ContractError("local_only result carries " + std::to_string(result.personal.size()) +
                            " personal models for " + std::to_string(clients.size()) + " clients");
    }
    std::vector<std::size_t> ranks(clients.size());
    parallel_for(clients.size(), workers,
                 [&](std::size_t i) { ranks[i] = eval::rank_client(result.personal[i], clients[i], split); });
    return eval::metrics_from_ranks(ranks, k);
}

} // namespace fsl::federation
