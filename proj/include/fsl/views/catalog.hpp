#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fsl/common/types.hpp"

namespace fsl::views {

struct ItemMeta {
    ItemId item_id = 0;
    std::string title;
    std::string category;
    std::optional<std::vector<double>> latent; // synthetic data only
};

// Lowercase, trim, collapse internal whitespace.
std::string normalize_title(std::string_view title);

// Read-only item catalog with the lookups the view generators need.
// Items must be listed with ids 0..n-1 in order.
class ItemCatalog {
  public:
    ItemCatalog() = default;
    explicit ItemCatalog(std::vector<ItemMeta> items);

    [[nodiscard]] std::size_t size() const noexcept { return items_.size(); }
    [[nodiscard]] const ItemMeta& at(ItemId id) const { return items_.at(id); }
    [[nodiscard]] const std::vector<ItemMeta>& items() const noexcept { return items_; }

    // True when every item carries a latent vector of one common dimension.
    [[nodiscard]] bool has_latents() const noexcept { return latent_dim_ > 0; }
    [[nodiscard]] std::size_t latent_dim() const noexcept { return latent_dim_; }
    [[nodiscard]] std::span<const double> latent(ItemId id) const;

    [[nodiscard]] std::size_t category_count() const noexcept { return category_names_.size(); }
    [[nodiscard]] std::size_t category_of(ItemId id) const { return category_index_.at(id); }
    [[nodiscard]] const std::string& category_name(std::size_t c) const { return category_names_.at(c); }
    [[nodiscard]] const ItemList& category_members(std::size_t c) const { return category_members_.at(c); }

    // Closest other item in the same category (latent distance, else next id
    // in the category, cyclically). Singleton categories map to the item itself.
    [[nodiscard]] ItemId nearest_in_category(ItemId id) const { return nearest_same_category_.at(id); }

    [[nodiscard]] std::optional<ItemId> find_title(std::string_view title) const;

    // Mean latent vector of the given items (has_latents() required).
    [[nodiscard]] std::vector<double> mean_latent(std::span<const ItemId> ids) const;

  private:
    std::vector<ItemMeta> items_;
    std::size_t latent_dim_ = 0;
    std::vector<std::string> category_names_;
    std::vector<std::size_t> category_index_;
    std::vector<ItemList> category_members_;
    std::vector<ItemId> nearest_same_category_;
    std::unordered_map<std::string, ItemId> title_index_;
};

double squared_distance(std::span<const double> a, std::span<const double> b);
double cosine(std::span<const double> a, std::span<const double> b);

} // namespace fsl::views
