#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fsl/common/types.hpp"
#include "fsl/views/catalog.hpp"

namespace fsl::views {

enum class Provenance { rule, llm, cache };
enum class ViewKind { future = 0, paraphrase = 1, counterfactual = 2 };

std::string_view to_string(Provenance p);
Provenance parse_provenance(std::string_view text);
std::string_view to_string(ViewKind kind);

struct ViewTriple {
    ItemList future;
    ItemList paraphrase;
    ItemList counterfactual;
    std::array<Provenance, 3> provenance{Provenance::rule, Provenance::rule, Provenance::rule};

    [[nodiscard]] const ItemList& view(ViewKind kind) const;
    ItemList& view(ViewKind kind);

    friend bool operator==(const ViewTriple&, const ViewTriple&) = default;
};

// Rule-based generators. All are pure functions of their arguments.

// Greedy continuation: each step samples from the future_len*4 unused items
// nearest to the mean latent of the last min(3, T) items of the (extended)
// history; with categories only, from the window's modal category.
ItemList rule_future(std::span<const ItemId> seq, const ItemCatalog& catalog, std::size_t future_len,
                     std::uint64_t seed);

// Per-item substitution by the nearest same-category neighbour, then
// adjacent swaps. Length preserving.
ItemList rule_paraphrase(std::span<const ItemId> seq, const ItemCatalog& catalog, double substitute_prob,
                         double swap_prob, std::uint64_t seed);

// Same-length sequence of items far from the user's mean latent (or from the
// categories least represented in the history). Excludes history items
// whenever the catalog is large enough.
ItemList rule_counterfactual(std::span<const ItemId> seq, const ItemCatalog& catalog, std::uint64_t seed);

// Sequence-level augmentations used by the local-augmentation contrastive
// baseline: a contiguous crop, a random item mask (masked positions take the
// padding id) and a random non-history sequence as the negative.
ItemList augment_crop(std::span<const ItemId> seq, double crop_ratio, std::uint64_t seed);
ItemList augment_mask(std::span<const ItemId> seq, double mask_prob, ItemId mask_id, std::uint64_t seed);
ItemList random_negative(std::span<const ItemId> seq, std::size_t n_items, std::uint64_t seed);

// Prompt templates, versioned through kPromptVersion (it feeds cache keys).
inline constexpr std::string_view kPromptVersion = "prompts-v1";
std::string build_prompt(ViewKind kind, const std::vector<std::string>& titles, std::size_t n_items);

// Maps generated text back onto catalog ids. Returns nullopt when no line
// matches a known title.
std::optional<ItemList> parse_generated_items(std::string_view text, const ItemCatalog& catalog);

} // namespace fsl::views
