#include "fsl/eval/eval.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fsl/common/errors.hpp"
#include "fsl/common/parallel.hpp"
#include "fsl/encoder/encoder.hpp"

namespace fsl::eval {

std::string_view to_string(Split split) { return split == Split::valid ? "valid" : "test"; }

Split parse_split(std::string_view text) {
    if (text == "valid" || text == "validation") {
        return Split::valid;
    }
    if (text == "test") {
        return Split::test;
    }
    throw ConfigError("unknown split '" + std::string(text) + "' (expected valid|test)");
}

std::size_t rank_target(std::span<const double> scores, std::span<const ItemId> exclude, ItemId target) {
    if (target >= scores.size()) {
        throw IndexError("target " + std::to_string(target) + " outside " + std::to_string(scores.size()) + " scores");
    }
    if (std::binary_search(exclude.begin(), exclude.end(), target)) {
        throw ContractError("target " + std::to_string(target) + " is in the exclusion set");
    }
    const double s = scores[target];
    std::size_t ahead = 0;
    auto ex = exclude.begin();
    for (std::size_t i = 0; i < scores.size(); ++i) {
        while (ex != exclude.end() && *ex < i) {
            ++ex;
        }
        if (ex != exclude.end() && *ex == i) {
            continue;
        }
        if (scores[i] > s || (scores[i] == s && i < target)) {
            ++ahead;
        }
    }
    return ahead + 1;
}

double hr_at_k(std::size_t rank, std::size_t k) {
    if (rank == 0) {
        throw ContractError("rank must be >= 1");
    }
    return rank <= k ? 1.0 : 0.0;
}

double ndcg_at_k(std::size_t rank, std::size_t k) {
    if (rank == 0) {
        throw ContractError("rank must be >= 1");
    }
    return rank <= k ? 1.0 / std::log2(1.0 + static_cast<double>(rank)) : 0.0;
}

double mrr_of_rank(std::size_t rank) {
    if (rank == 0) {
        throw ContractError("rank must be >= 1");
    }
    return 1.0 / static_cast<double>(rank);
}

ItemList context_for(const data::ClientDataset& client, Split split) {
    ItemList ctx = client.train.items;
    if (split == Split::test) {
        ctx.push_back(client.valid_target);
    }
    return ctx;
}

ItemId target_for(const data::ClientDataset& client, Split split) {
    return split == Split::valid ? client.valid_target : client.test_target;
}

ItemList exclusion_for(const data::ClientDataset& client, ItemId target) {
    ItemList ex;
    ex.reserve(client.seen.size());
    for (const ItemId id : client.seen) {
        if (id != target) {
            ex.push_back(id);
        }
    }
    return ex;
}

std::size_t rank_client(const encoder::ParamSet& params, const data::ClientDataset& client, Split split) {
    ItemList ctx = context_for(client, split);
    const std::size_t max_len = params.dims().max_len;
    if (ctx.size() > max_len) {
        ctx.erase(ctx.begin(), ctx.begin() + static_cast<std::ptrdiff_t>(ctx.size() - max_len));
    }
    const auto h = encoder::encode(params, ctx);
    const auto scores = encoder::score_items(params, h);
    const ItemId target = target_for(client, split);
    return rank_target(scores.data(), exclusion_for(client, target), target);
}

std::vector<std::size_t> rank_clients(const encoder::ParamSet& params, const std::vector<data::ClientDataset>& clients,
                                      Split split, std::size_t workers) {
    std::vector<std::size_t> ranks(clients.size());
    parallel_for(clients.size(), workers, [&](std::size_t i) { ranks[i] = rank_client(params, clients[i], split); });
    return ranks;
}

RankingMetrics metrics_from_ranks(std::span<const std::size_t> ranks, std::size_t k) {
    if (ranks.empty()) {
        throw ContractError("cannot compute metrics over zero users");
    }
    RankingMetrics m;
    m.k = k;
    m.n_users = ranks.size();
    for (const std::size_t r : ranks) {
        m.hr_at_k += hr_at_k(r, k);
        m.ndcg_at_k += ndcg_at_k(r, k);
        m.mrr += mrr_of_rank(r);
    }
    const auto n = static_cast<double>(ranks.size());
    m.hr_at_k /= n;
    m.ndcg_at_k /= n;
    m.mrr /= n;
    return m;
}

RankingMetrics evaluate_split(const encoder::ParamSet& params, const std::vector<data::ClientDataset>& clients,
                              Split split, std::size_t k, std::size_t workers) {
    if (clients.empty()) {
        throw ContractError("evaluate_split needs at least one client");
    }
    const auto ranks = rank_clients(params, clients, split, workers);
    return metrics_from_ranks(ranks, k);
}

} // namespace fsl::eval
