#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fsl/common/rng.hpp"
#include "fsl/data/data.hpp"
#include "fsl/encoder/params.hpp"
#include "fsl/eval/eval.hpp"
#include "fsl/numerics/tensor.hpp"
#include "fsl/triview/triview.hpp"
#include "fsl/views/generator.hpp"

namespace fsl::federation {

using encoder::ParamSet;
using numerics::GradMap;
using numerics::TensorMap;

enum class Optimizer { adam, sgd };
// last: one next-item target per sequence (its final item).
// all: every prefix predicts its successor (attention backbone only).
enum class LossPositions { last, all };

std::string_view to_string(Optimizer o);
Optimizer parse_optimizer(std::string_view text);
std::string_view to_string(LossPositions p);
LossPositions parse_loss_positions(std::string_view text);

struct RoundConfig {
    double client_fraction = 0.10;
    std::optional<std::size_t> clients_per_round; // overrides client_fraction when set
    std::size_t local_epochs = 5;
    std::size_t rounds = 100;
    double learning_rate = 1e-3;
    double weight_decay = 1e-5;
    std::size_t batch_size = 128;
    double clip_norm = 5.0;
    double lambda_cl = 0.1;
    double tau = 0.07;
    std::uint64_t global_seed = 0;

    Optimizer optimizer = Optimizer::adam;
    LossPositions loss_positions = LossPositions::last;
    triview::Similarity similarity = triview::Similarity::cosine;
    triview::ViewMask views;
    bool stop_gradient_views = false;

    std::size_t eval_every = 5;
    std::size_t eval_k = 20;
    std::size_t parallel_clients = 1;
};

void validate(const RoundConfig& cfg);

struct ClientStats {
    double rec_loss = 0.0; // mean over all local steps
    double cl_loss = 0.0;
    std::size_t steps = 0;
    std::vector<double> epoch_objective; // mean L_u per epoch
};

// The only thing a client sends to the server.
struct ClientUpdate {
    std::size_t client_index = 0;
    ParamSet params;
    ClientStats stats;
};

struct AdamState {
    TensorMap m;
    TensorMap v;
    std::size_t step = 0;

    static AdamState zeros_like(const TensorMap& params);
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

// max(1, round(fraction * n)) distinct indices, sorted ascending.
std::vector<std::size_t> sample_clients(std::size_t n_clients, double fraction, rng::Engine& eng);
std::vector<std::size_t> sample_clients_count(std::size_t n_clients, std::size_t count, rng::Engine& eng);

double global_norm(const GradMap& grads);
GradMap clip_gradients(GradMap grads, double max_norm);

// Decoupled weight decay (theta -= lr * wd * theta), then the bias-corrected
// Adam delta. Parameters without a gradient entry only decay.
void adam_step(TensorMap& params, const GradMap& grads, AdamState& state, double lr, double weight_decay);
void sgd_step(TensorMap& params, const GradMap& grads, double lr, double weight_decay);

// Unweighted mean, summed in ascending client_index order.
ParamSet fedavg_aggregate(std::vector<ClientUpdate> updates);

// One training sequence with the views generated for it this round.
// `views` is ignored when lambda_cl = 0.
struct LocalExample {
    std::span<const ItemId> sequence;
    const views::ViewTriple* views = nullptr;
};

// Clones `global`, runs local_epochs passes of minibatch training over the
// examples with a fresh optimizer, returns the new parameters.
// Throws NumericalError on a non-finite loss.
ClientUpdate local_train(const ParamSet& global, std::span<const LocalExample> examples, const RoundConfig& cfg,
                         std::uint64_t client_seed, std::size_t client_index = 0);

ClientUpdate local_train(const ParamSet& global, const data::ClientDataset& client, const views::ViewTriple& views,
                         const RoundConfig& cfg, std::uint64_t client_seed, std::size_t client_index = 0);

// Loss terms for one example on a fresh tape: {rec, cl}. Used for
// diagnostics and tests.
std::pair<double, double> example_losses(const ParamSet& params, const LocalExample& ex, const RoundConfig& cfg);

enum class TrainingMode { federated, centralized, local_only };

std::string_view to_string(TrainingMode m);

struct RoundReport {
    std::size_t round = 0;
    double rec_loss = 0.0;
    double cl_loss = 0.0;
    std::optional<eval::RankingMetrics> metrics; // validation split
    std::size_t clients = 0;
    std::int64_t wall_ms = 0;
};

struct TrainingSetup {
    const std::vector<data::ClientDataset>* clients = nullptr;
    const views::ItemCatalog* catalog = nullptr;
    ParamSet init;
    RoundConfig round;
    views::GeneratorConfig generator;
    TrainingMode mode = TrainingMode::federated;
    std::shared_ptr<views::CompletionClient> llm_client; // optional override
    bool record_wall_ms = true;
    std::function<void(const RoundReport&)> on_round;
};

struct TrainingResult {
    std::vector<RoundReport> history;
    ParamSet params;                // global model (federated / centralized)
    std::vector<ParamSet> personal; // local_only: one model per client
    views::GeneratorStats view_stats;
    std::size_t excluded_updates = 0;
};

TrainingResult run_training(const TrainingSetup& setup);

// Ranks every client with the model that serves it (its personal model in
// local_only mode).
eval::RankingMetrics evaluate_result(const TrainingResult& result, TrainingMode mode,
                                     const std::vector<data::ClientDataset>& clients, eval::Split split,
                                     std::size_t k = 20, std::size_t workers = 1);

// Seeds derived for one client participation.
std::uint64_t view_seed(std::uint64_t global_seed, std::string_view user_id, std::size_t round);
std::uint64_t client_seed(std::uint64_t global_seed, std::string_view user_id, std::size_t round);

// Binary checkpoint: "FSQL", u32 version, u32 tensor count, then per tensor
// u32 name length, name bytes, u32 rank, u64 dims, little-endian f64 data.
// Only tensors are stored: a GRU model comes back with max_len = kMaxSeqLen
// (attention models recover it from the positional table).
inline constexpr std::uint32_t kCheckpointVersion = 1;
void save_checkpoint(const std::filesystem::path& path, const ParamSet& params);
ParamSet load_checkpoint(const std::filesystem::path& path);
TensorMap read_checkpoint_tensors(const std::filesystem::path& path);

} // namespace fsl::federation
