#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "fsl/common/types.hpp"
#include "fsl/data/data.hpp"
#include "fsl/encoder/params.hpp"

namespace fsl::eval {

struct RankingMetrics {
    double hr_at_k = 0.0;
    double ndcg_at_k = 0.0;
    double mrr = 0.0;
    std::size_t k = 20;
    std::size_t n_users = 0;
};

enum class Split { valid, test };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

// 1-based rank of `target` among items not in `exclude` (sorted ascending).
// Equal scores rank the smaller item id first.
std::size_t rank_target(std::span<const double> scores, std::span<const ItemId> exclude, ItemId target);

double hr_at_k(std::size_t rank, std::size_t k = 20);
double ndcg_at_k(std::size_t rank, std::size_t k = 20);
double mrr_of_rank(std::size_t rank);

// Encoder input for a split: train for valid, train + valid for test.
ItemList context_for(const data::ClientDataset& client, Split split);
ItemId target_for(const data::ClientDataset& client, Split split);

// seen minus the target, sorted.
ItemList exclusion_for(const data::ClientDataset& client, ItemId target);

std::size_t rank_client(const encoder::ParamSet& params, const data::ClientDataset& client, Split split);

// Per-client ranks in client order.
std::vector<std::size_t> rank_clients(const encoder::ParamSet& params, const std::vector<data::ClientDataset>& clients,
                                      Split split, std::size_t workers = 1);

RankingMetrics metrics_from_ranks(std::span<const std::size_t> ranks, std::size_t k = 20);

RankingMetrics evaluate_split(const encoder::ParamSet& params, const std::vector<data::ClientDataset>& clients,
                              Split split, std::size_t k = 20, std::size_t workers = 1);

} // namespace fsl::eval
