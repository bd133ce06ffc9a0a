#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>
#include <unordered_set>

#include "fsl/common/errors.hpp"
#include "fsl/common/log.hpp"
#include "fsl/common/rng.hpp"
#include "fsl/views/views.hpp"

namespace fsl::views {

namespace {

// Stream tags so the three views never share random draws.
constexpr std::uint64_t kFutureTag = 0x46555455ULL;
constexpr std::uint64_t kParaphraseTag = 0x50415241ULL;
constexpr std::uint64_t kCounterTag = 0x434f554eULL;
constexpr std::uint64_t kCropTag = 0x43524f50ULL;
constexpr std::uint64_t kMaskTag = 0x4d41534bULL;
constexpr std::uint64_t kNegTag = 0x4e454741ULL;
constexpr std::uint64_t kTieTag = 0x54494553ULL;

void require_ids(std::span<const ItemId> seq, std::size_t n_items) {
    if (seq.empty()) {
        throw ContractError("view generation needs a nonempty sequence");
    }
    for (const ItemId id : seq) {
        if (id >= n_items) {
            throw IndexError("item id " + std::to_string(id) + " outside catalog of " + std::to_string(n_items));
        }
    }
}

void require_prob(double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw ConfigError(std::string(name) + " must lie in [0, 1], got " + std::to_string(p));
    }
}

// Candidates ordered by (distance to center, tie key, id); only the first
// `keep` are guaranteed sorted. Without a tie engine, exact ties go by id.
ItemList nearest_to(const ItemCatalog& catalog, const std::vector<double>& center, ItemList candidates,
                    std::size_t keep, bool farthest, rng::Engine* ties = nullptr) {
    std::vector<std::tuple<double, std::uint64_t, ItemId>> keyed;
    keyed.reserve(candidates.size());
    for (const ItemId id : candidates) {
        const double d = squared_distance(catalog.latent(id), center);
        keyed.emplace_back(farthest ? -d : d, ties ? (*ties)() : 0, id);
    }
    keep = std::min(keep, keyed.size());
    std::partial_sort(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(keep), keyed.end());
    ItemList out;
    out.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) {
        out.push_back(std::get<2>(keyed[i]));
    }
    return out;
}

std::size_t modal_category(const ItemCatalog& catalog, std::span<const ItemId> window) {
    std::vector<std::size_t> counts(catalog.category_count(), 0);
    for (const ItemId id : window) {
        ++counts[catalog.category_of(id)];
    }
    return static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

} // namespace

ItemList rule_future(std::span<const ItemId> seq, const ItemCatalog& catalog, std::size_t future_len,
                     std::uint64_t seed) {
    require_ids(seq, catalog.size());
    if (future_len == 0) {
        throw ConfigError("future_len must be >= 1");
    }
    auto eng = rng::make_engine(rng::derive({seed, kFutureTag}));
    std::vector<bool> used(catalog.size(), false);
    for (const ItemId id : seq) {
        used[id] = true;
    }
    ItemList extended(seq.begin(), seq.end());
    ItemList out;
    const std::size_t pool_size = future_len * 4;
    for (std::size_t step = 0; step < future_len; ++step) {
        const std::size_t w = std::min<std::size_t>(3, extended.size());
        const std::span<const ItemId> window(extended.data() + extended.size() - w, w);
        ItemList pool;
        if (catalog.has_latents()) {
            ItemList unused;
            for (ItemId id = 0; id < catalog.size(); ++id) {
                if (!used[id]) {
                    unused.push_back(id);
                }
            }
            // Equidistant items must all stay reachable.
            auto ties = rng::make_engine(rng::derive({seed, kTieTag, step}));
            pool = nearest_to(catalog, catalog.mean_latent(window), std::move(unused), pool_size, false, &ties);
        } else {
            for (const ItemId id : catalog.category_members(modal_category(catalog, window))) {
                if (!used[id]) {
                    pool.push_back(id);
                }
            }
            if (pool.empty()) {
                for (ItemId id = 0; id < catalog.size() && pool.size() < pool_size; ++id) {
                    if (!used[id]) {
                        pool.push_back(id);
                    }
                }
            }
        }
        if (pool.empty()) {
            break;
        }
        const ItemId pick = pool[rng::uniform_index(eng, pool.size())];
        out.push_back(pick);
        used[pick] = true;
        extended.push_back(pick);
    }
    if (out.empty()) {
        // Every catalog item is already in the history: repeat the last one.
        out.push_back(seq.back());
    }
    return out;
}

ItemList rule_paraphrase(std::span<const ItemId> seq, const ItemCatalog& catalog, double substitute_prob,
                         double swap_prob, std::uint64_t seed) {
    require_ids(seq, catalog.size());
    require_prob(substitute_prob, "substitute_prob");
    require_prob(swap_prob, "swap_prob");
    auto eng = rng::make_engine(rng::derive({seed, kParaphraseTag}));
    ItemList out(seq.begin(), seq.end());
    for (ItemId& id : out) {
        if (rng::uniform01(eng) < substitute_prob) {
            id = catalog.nearest_in_category(id);
        }
    }
    for (std::size_t i = 0; i + 1 < out.size(); ++i) {
        if (rng::uniform01(eng) < swap_prob) {
            std::swap(out[i], out[i + 1]);
        }
    }
    return out;
}

ItemList rule_counterfactual(std::span<const ItemId> seq, const ItemCatalog& catalog, std::uint64_t seed) {
    require_ids(seq, catalog.size());
    auto eng = rng::make_engine(rng::derive({seed, kCounterTag}));
    const std::size_t n = seq.size();
    std::vector<bool> in_history(catalog.size(), false);
    for (const ItemId id : seq) {
        in_history[id] = true;
    }
    ItemList candidates;
    for (ItemId id = 0; id < catalog.size(); ++id) {
        if (!in_history[id]) {
            candidates.push_back(id);
        }
    }
    bool overlap = false;
    if (candidates.size() < n) {
        log::warn("catalog of " + std::to_string(catalog.size()) + " items cannot exclude a history of " +
                  std::to_string(n) + " distinct items; counterfactual view may overlap it");
        overlap = true;
        candidates.resize(catalog.size());
        std::iota(candidates.begin(), candidates.end(), ItemId{0});
    }

    ItemList pool;
    if (catalog.has_latents()) {
        const std::size_t keep = std::max(n, std::min(2 * n, candidates.size()));
        pool = nearest_to(catalog, catalog.mean_latent(seq), std::move(candidates), keep, true);
    } else {
        // Categories ordered by (count in history, category index); zero
        // counts included, so unseen categories come first.
        std::vector<std::size_t> counts(catalog.category_count(), 0);
        for (const ItemId id : seq) {
            ++counts[catalog.category_of(id)];
        }
        std::vector<std::size_t> order(catalog.category_count());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return counts[a] < counts[b]; });
        for (const std::size_t c : order) {
            for (const ItemId id : catalog.category_members(c)) {
                if (overlap || !in_history[id]) {
                    pool.push_back(id);
                }
            }
            if (pool.size() >= n) {
                break;
            }
        }
    }
    ItemList out;
    out.reserve(n);
    if (pool.size() >= n) {
        for (const std::size_t k : rng::sample_without_replacement(eng, pool.size(), n)) {
            out.push_back(pool[k]);
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            out.push_back(pool[rng::uniform_index(eng, pool.size())]);
        }
    }
    return out;
}

ItemList augment_crop(std::span<const ItemId> seq, double crop_ratio, std::uint64_t seed) {
    if (seq.empty()) {
        throw ContractError("augment_crop needs a nonempty sequence");
    }
    if (!(crop_ratio > 0.0 && crop_ratio <= 1.0)) {
        throw ConfigError("crop_ratio must lie in (0, 1], got " + std::to_string(crop_ratio));
    }
    auto eng = rng::make_engine(rng::derive({seed, kCropTag}));
    const auto len = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround(crop_ratio * static_cast<double>(seq.size()))));
    const std::size_t start = rng::uniform_index(eng, seq.size() - len + 1);
    return ItemList(seq.begin() + static_cast<std::ptrdiff_t>(start),
                    seq.begin() + static_cast<std::ptrdiff_t>(start + len));
}

ItemList augment_mask(std::span<const ItemId> seq, double mask_prob, ItemId mask_id, std::uint64_t seed) {
    if (seq.empty()) {
        throw ContractError("augment_mask needs a nonempty sequence");
    }
    require_prob(mask_prob, "mask_prob");
    auto eng = rng::make_engine(rng::derive({seed, kMaskTag}));
    ItemList out(seq.begin(), seq.end());
    for (ItemId& id : out) {
        if (rng::uniform01(eng) < mask_prob) {
            id = mask_id;
        }
    }
    return out;
}

ItemList random_negative(std::span<const ItemId> seq, std::size_t n_items, std::uint64_t seed) {
    require_ids(seq, n_items);
    auto eng = rng::make_engine(rng::derive({seed, kNegTag}));
    std::vector<bool> in_history(n_items, false);
    for (const ItemId id : seq) {
        in_history[id] = true;
    }
    ItemList pool;
    for (ItemId id = 0; id < n_items; ++id) {
        if (!in_history[id]) {
            pool.push_back(id);
        }
    }
    if (pool.size() < seq.size()) {
        pool.resize(n_items);
        std::iota(pool.begin(), pool.end(), ItemId{0});
    }
    ItemList out;
    if (pool.size() < seq.size()) {
        for (std::size_t i = 0; i < seq.size(); ++i) {
            out.push_back(pool[rng::uniform_index(eng, pool.size())]);
        }
        return out;
    }
    for (const std::size_t k : rng::sample_without_replacement(eng, pool.size(), seq.size())) {
        out.push_back(pool[k]);
    }
    return out;
}

} // namespace fsl::views
