#include "fsl/views/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>

#include "fsl/common/errors.hpp"

namespace fsl::views {

std::string normalize_title(std::string_view title) {
    std::string out;
    out.reserve(title.size());
    bool pending_space = false;
    for (const char ch : title) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double cosine(std::span<const double> a, std::span<const double> b) {
    double ab = 0.0;
    double aa = 0.0;
    double bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    return ab / (std::sqrt(aa) * std::sqrt(bb) + 1e-12);
}

ItemCatalog::ItemCatalog(std::vector<ItemMeta> items) : items_(std::move(items)) {
    std::map<std::string, std::size_t> category_ids;
    category_index_.resize(items_.size());
    std::optional<std::size_t> dim;
    bool all_latent = !items_.empty();
    for (std::size_t i = 0; i < items_.size(); ++i) {
        const ItemMeta& m = items_[i];
        if (m.item_id != i) {
            throw DataError("item catalog must list ids 0..n-1 in order (position " + std::to_string(i) + " has id " +
                            std::to_string(m.item_id) + ")");
        }
        if (m.category.empty()) {
            throw DataError("item " + std::to_string(i) + " has an empty category");
        }
        const std::string norm = normalize_title(m.title);
        if (norm.empty()) {
            throw DataError("item " + std::to_string(i) + " has an empty title");
        }
        if (!title_index_.emplace(norm, m.item_id).second) {
            throw DataError("duplicate item title after normalization: '" + norm + "'");
        }
        auto [it, inserted] = category_ids.emplace(m.category, category_names_.size());
        if (inserted) {
            category_names_.push_back(m.category);
            category_members_.emplace_back();
        }
        category_index_[i] = it->second;
        category_members_[it->second].push_back(m.item_id);
        if (!m.latent || m.latent->empty()) {
            all_latent = false;
        } else if (!dim) {
            dim = m.latent->size();
        } else if (*dim != m.latent->size()) {
            throw DataError("item latent vectors have inconsistent dimensions");
        }
    }
    latent_dim_ = all_latent && dim ? *dim : 0;

    nearest_same_category_.resize(items_.size());
    for (const auto& members : category_members_) {
        for (std::size_t k = 0; k < members.size(); ++k) {
            const ItemId id = members[k];
            if (members.size() == 1) {
                nearest_same_category_[id] = id;
                continue;
            }
            if (!has_latents()) {
                nearest_same_category_[id] = members[(k + 1) % members.size()];
                continue;
            }
            ItemId best = id;
            double best_d = std::numeric_limits<double>::infinity();
            for (const ItemId other : members) {
                if (other == id) {
                    continue;
                }
                const double d = squared_distance(latent(id), latent(other));
                if (d < best_d) {
                    best_d = d;
                    best = other;
                }
            }
            nearest_same_category_[id] = best;
        }
    }
}

std::span<const double> ItemCatalog::latent(ItemId id) const {
    if (!has_latents()) {
        throw ContractError("item catalog carries no latent vectors");
    }
    return *items_.at(id).latent;
}

std::optional<ItemId> ItemCatalog::find_title(std::string_view title) const {
    const auto it = title_index_.find(normalize_title(title));
    if (it == title_index_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::vector<double> ItemCatalog::mean_latent(std::span<const ItemId> ids) const {
    std::vector<double> mean(latent_dim_, 0.0);
    if (ids.empty()) {
        return mean;
    }
    for (const ItemId id : ids) {
        const auto v = latent(id);
        for (std::size_t j = 0; j < latent_dim_; ++j) {
            mean[j] += v[j];
        }
    }
    for (double& v : mean) {
        v /= static_cast<double>(ids.size());
    }
    return mean;
}

} // namespace fsl::views
