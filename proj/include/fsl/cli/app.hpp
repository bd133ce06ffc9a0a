#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fsl/cli/config.hpp"
#include "fsl/data/data.hpp"
#include "fsl/eval/eval.hpp"
#include "fsl/federation/federation.hpp"
#include "fsl/views/catalog.hpp"
#include "fsl/views/llm_client.hpp"

namespace fsl::cli {

// Exit codes are part of the command-line contract.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNumerical = 4;

struct Dataset {
    data::Catalog catalog;
    std::vector<data::ClientDataset> clients;
};

// Reads data.items and data.clients of a run configuration.
Dataset load_dataset(const RunConfig& cfg);

// Seeded from run.seed; identical across modes so baselines start from the
// same weights.
encoder::ParamSet initial_params(const RunConfig& cfg, std::size_t n_items);

struct RunOutcome {
    federation::TrainingResult result;
    eval::RankingMetrics valid;
    eval::RankingMetrics test;
};

// Shared by train, ablate and the acceptance harness.
RunOutcome execute(const RunConfig& cfg, const std::vector<data::ClientDataset>& clients,
                   const views::ItemCatalog& catalog,
                   std::function<void(const federation::RoundReport&)> on_round = {},
                   std::shared_ptr<views::CompletionClient> llm_client = nullptr);

inline constexpr const char* kMetricsHeader = "round,rec_loss,cl_loss,hr20,ndcg20,mrr,clients,wall_ms";

// One metrics.csv row without the newline.
std::string format_report(const federation::RoundReport& report);

std::string metrics_json(const eval::RankingMetrics& m);

// Runs one command and returns its exit code. `args` excludes the program name.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

} // namespace fsl::cli
