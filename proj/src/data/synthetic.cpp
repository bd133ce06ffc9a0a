#include <cmath>
#include <cstdio>
#include <limits>

#include "fsl/common/errors.hpp"
#include "fsl/common/rng.hpp"
#include "fsl/data/data.hpp"

namespace fsl::data {

namespace {

constexpr std::uint64_t kItemTag = 0x6974656dULL;
constexpr std::uint64_t kCentroidTag = 0x63656e74ULL;
constexpr std::uint64_t kPrefTag = 0x70726566ULL;
constexpr std::uint64_t kLenTag = 0x6c656e67ULL;
constexpr std::uint64_t kSeqTag = 0x73657175ULL;

void normalize(std::vector<double>& v) {
    double n = 0.0;
    for (const double x : v) {
        n += x * x;
    }
    n = std::sqrt(n);
    if (n > 0.0) {
        for (double& x : v) {
            x /= n;
        }
    }
}

std::vector<double> unit_normal(rng::Engine& eng, std::size_t k) {
    std::vector<double> v(k);
    for (double& x : v) {
        x = rng::normal(eng);
    }
    normalize(v);
    return v;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

std::string padded(const char* prefix, std::size_t i, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
    return buf;
}

} // namespace

void validate(const SyntheticConfig& cfg) {
    if (cfg.n_items < 20) {
        throw ConfigError("synthetic n_items must be >= 20, got " + std::to_string(cfg.n_items));
    }
    if (cfg.n_users == 0) {
        throw ConfigError("synthetic n_users must be >= 1");
    }
    if (cfg.latent_dim == 0 || cfg.n_categories == 0) {
        throw ConfigError("synthetic latent_dim and n_categories must be >= 1");
    }
    if (cfg.min_len < 5) {
        throw ConfigError("synthetic min_len must be >= 5, got " + std::to_string(cfg.min_len));
    }
    if (cfg.max_len < cfg.min_len) {
        throw ConfigError("synthetic max_len must be >= min_len");
    }
    if (cfg.max_len > cfg.n_items) {
        throw ConfigError("synthetic max_len " + std::to_string(cfg.max_len) + " exceeds n_items " +
                          std::to_string(cfg.n_items));
    }
    if (!(cfg.preference_temperature > 0.0) || !std::isfinite(cfg.preference_temperature)) {
        throw ConfigError("synthetic preference_temperature must be > 0");
    }
    if (!(cfg.drift >= 0.0)) {
        throw ConfigError("synthetic drift must be >= 0");
    }
}

ItemList sample_user_sequence(std::vector<double> preference, const std::vector<std::vector<double>>& latents,
                              std::size_t length, double temperature, double drift, std::uint64_t seed) {
    if (length > latents.size()) {
        throw ConfigError("sequence length exceeds the number of items");
    }
    auto eng = rng::make_engine(seed);
    const std::size_t k = preference.size();
    const double step_scale = drift / std::sqrt(static_cast<double>(k));
    std::vector<bool> used(latents.size(), false);
    std::vector<double> weights(latents.size());
    ItemList out;
    out.reserve(length);
    for (std::size_t t = 0; t < length; ++t) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < latents.size(); ++i) {
            weights[i] = used[i] ? -std::numeric_limits<double>::infinity() : dot(preference, latents[i]) / temperature;
            best = std::max(best, weights[i]);
        }
        double total = 0.0;
        for (double& w : weights) {
            w = std::exp(w - best);
            total += w;
        }
        const double u = rng::uniform01(eng) * total;
        double acc = 0.0;
        std::size_t pick = latents.size();
        for (std::size_t i = 0; i < latents.size(); ++i) {
            if (used[i]) {
                continue;
            }
            acc += weights[i];
            pick = i;
            if (u < acc) {
                break;
            }
        }
        used[pick] = true;
        out.push_back(static_cast<ItemId>(pick));
        if (drift > 0.0) {
            for (double& x : preference) {
                x += step_scale * rng::normal(eng);
            }
            normalize(preference);
        }
    }
    return out;
}

SyntheticData generate_synthetic(const SyntheticConfig& cfg) {
    validate(cfg);
    SyntheticData out;

    auto item_eng = rng::make_engine(rng::derive({cfg.seed, kItemTag}));
    std::vector<std::vector<double>> latents;
    latents.reserve(cfg.n_items);
    for (std::size_t i = 0; i < cfg.n_items; ++i) {
        latents.push_back(unit_normal(item_eng, cfg.latent_dim));
    }
    auto centroid_eng = rng::make_engine(rng::derive({cfg.seed, kCentroidTag}));
    std::vector<std::vector<double>> centroids;
    for (std::size_t c = 0; c < cfg.n_categories; ++c) {
        centroids.push_back(unit_normal(centroid_eng, cfg.latent_dim));
    }
    for (std::size_t i = 0; i < cfg.n_items; ++i) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < cfg.n_categories; ++c) {
            if (dot(latents[i], centroids[c]) > dot(latents[i], centroids[best])) {
                best = c;
            }
        }
        const auto id = static_cast<ItemId>(i);
        out.vocab.add(padded("i", i, 4));
        out.items.push_back(views::ItemMeta{id, padded("Item ", i, 4), padded("category-", best, 2), latents[i]});
    }

    for (std::size_t u = 0; u < cfg.n_users; ++u) {
        auto pref_eng = rng::make_engine(rng::derive({cfg.seed, kPrefTag, u}));
        std::vector<double> pref;
        if (cfg.preference_spread < 0.0) {
            pref = unit_normal(pref_eng, cfg.latent_dim);
        } else {
            const auto& centre = centroids[rng::uniform_index(pref_eng, cfg.n_categories)];
            const double scale = cfg.preference_spread / std::sqrt(static_cast<double>(cfg.latent_dim));
            pref = centre;
            for (double& x : pref) {
                x += scale * rng::normal(pref_eng);
            }
            normalize(pref);
        }
        auto len_eng = rng::make_engine(rng::derive({cfg.seed, kLenTag, u}));
        const std::size_t len = cfg.min_len + rng::uniform_index(len_eng, cfg.max_len - cfg.min_len + 1);
        const ItemList seq = sample_user_sequence(pref, latents, len, cfg.preference_temperature, cfg.drift,
                                                  rng::derive({cfg.seed, kSeqTag, u}));
        const std::string user = padded("u", u, 5);
        for (std::size_t t = 0; t < seq.size(); ++t) {
            out.interactions.push_back(RawInteraction{user, out.vocab.names[seq[t]], static_cast<std::int64_t>(t)});
        }
        out.preferences.push_back(std::move(pref));
    }
    out.clients = truncate_and_prune(split_leave_two(out.interactions, out.vocab));
    return out;
}

} // namespace fsl::data
