#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>

#include "fsl/views/cache.hpp"
#include "fsl/views/catalog.hpp"
#include "fsl/views/llm_client.hpp"
#include "fsl/views/views.hpp"

namespace fsl::views {

// rule: catalog-driven views; llm: prompted views with per-view rule
// fallback; augment: crop / mask / random-negative sequences.
enum class GeneratorKind { rule, llm, augment };

std::string_view to_string(GeneratorKind kind);
GeneratorKind parse_generator_kind(std::string_view text);

struct GeneratorConfig {
    GeneratorKind kind = GeneratorKind::rule;
    std::size_t future_len = 5;
    double substitute_prob = 0.3;
    double swap_prob = 0.1;
    double crop_ratio = 0.6;
    double mask_prob = 0.3;
    LlmConfig llm;
    std::string cache_path; // empty: no cache
};

void validate(const GeneratorConfig& cfg);

// Stable text digest of every setting that changes generated views.
std::string config_digest(const GeneratorConfig& cfg);

// Rule path only; never touches the network or a cache.
ViewTriple generate_rule_views(const GeneratorConfig& cfg, std::span<const ItemId> seq, const ItemCatalog& catalog,
                               std::uint64_t seed);

struct GeneratorStats {
    std::uint64_t triples = 0;
    std::uint64_t llm_views = 0;
    std::uint64_t fallback_views = 0;
    std::uint64_t cache_hits = 0;
};

// Thread-safe; shared by all client workers of a run.
class ViewGenerator {
  public:
    // For kind = llm a client is built from cfg.llm unless one is supplied.
    ViewGenerator(GeneratorConfig cfg, const ItemCatalog& catalog, ItemId padding_id,
                  std::shared_ptr<CompletionClient> client = nullptr);

    ViewTriple generate(std::span<const ItemId> seq, std::uint64_t seed);

    [[nodiscard]] const GeneratorConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] GeneratorStats stats() const;

  private:
    ViewTriple generate_llm(std::span<const ItemId> seq, std::uint64_t seed);
    std::optional<ItemList> llm_view(ViewKind kind, std::span<const ItemId> seq, std::uint64_t seed);

    GeneratorConfig cfg_;
    const ItemCatalog& catalog_;
    ItemId padding_id_;
    std::string digest_;
    std::shared_ptr<CompletionClient> client_;
    std::unique_ptr<ViewCache> cache_;
    std::counting_semaphore<1024> llm_slots_;

    std::atomic<std::uint64_t> triples_{0};
    std::atomic<std::uint64_t> llm_views_{0};
    std::atomic<std::uint64_t> fallback_views_{0};
    std::atomic<std::uint64_t> cache_hits_{0};
};

} // namespace fsl::views
