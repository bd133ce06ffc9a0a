#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fsl/common/types.hpp"
#include "fsl/encoder/params.hpp"
#include "fsl/views/catalog.hpp"

namespace fsl::data {

struct RawInteraction {
    std::string user;
    std::string item;
    std::int64_t ts = 0;

    friend bool operator==(const RawInteraction&, const RawInteraction&) = default;
};

enum class InteractionFormat { jsonl, csv };

// By extension: .csv is CSV, anything else JSONL.
InteractionFormat format_for(const std::filesystem::path& path);

std::vector<RawInteraction> parse_interactions_jsonl(std::istream& in, std::string_view source = "<stream>");
std::vector<RawInteraction> parse_interactions_csv(std::istream& in, std::string_view source = "<stream>");
std::vector<RawInteraction> load_interactions(const std::filesystem::path& path, InteractionFormat format);

void write_interactions_jsonl(std::ostream& out, const std::vector<RawInteraction>& records);

// Removes users and items with fewer than min_count interactions, repeated
// until nothing changes. Input order of the survivors is kept.
std::vector<RawInteraction> k_core_filter(std::vector<RawInteraction> records, std::size_t min_count = 5);

// Dense ids in first-appearance order.
struct ItemVocab {
    std::vector<std::string> names;
    std::unordered_map<std::string, ItemId> index;

    ItemId add(const std::string& name);
    [[nodiscard]] ItemId id(const std::string& name) const;
    [[nodiscard]] bool contains(const std::string& name) const { return index.contains(name); }
    [[nodiscard]] std::size_t size() const noexcept { return names.size(); }
};

ItemVocab build_vocab(const std::vector<RawInteraction>& records);

struct ClientDataset {
    std::string user_id;
    encoder::InteractionSequence train;
    ItemId valid_target = 0;
    ItemId test_target = 0;
    ItemList seen; // sorted, unique; every item of the original sequence
};

// Throws DataError naming the user when an invariant fails.
void check_client(const ClientDataset& c, std::size_t n_items);

// Per user: order by (ts, input position); last is test, second-to-last is
// validation, the rest is train. Users with fewer than 3 interactions are
// skipped. Clients come back sorted by user id.
std::vector<ClientDataset> split_leave_two(const std::vector<RawInteraction>& records, const ItemVocab& vocab);

// Keeps the most recent max_len - 2 train items and drops users whose full
// sequence (train + 2 targets, before truncation) is shorter than min_len.
std::vector<ClientDataset> truncate_and_prune(std::vector<ClientDataset> clients, std::size_t max_len = 50,
                                              std::size_t min_len = 5);

struct PrepareOptions {
    std::size_t min_count = 5;
    std::size_t max_len = 50;
    std::size_t min_len = 5;
};

struct PreparedData {
    ItemVocab vocab;
    std::vector<ClientDataset> clients;
};

// load -> k-core -> vocab -> split -> truncate.
PreparedData prepare(const std::vector<RawInteraction>& records, const PrepareOptions& opts = {});

// Item metadata JSONL: {"item", "title", "category"[, "latent"]}.
struct ItemMetaRecord {
    std::string item;
    std::string title;
    std::string category;
    std::optional<std::vector<double>> latent;
};

std::vector<ItemMetaRecord> load_item_meta_records(const std::filesystem::path& path);

// Metadata in vocab order. Items without a record get their raw name as the
// title and category "unknown" (logged once with a count).
std::vector<views::ItemMeta> align_item_meta(const std::vector<ItemMetaRecord>& records, const ItemVocab& vocab);

void write_item_meta(std::ostream& out, const std::vector<views::ItemMeta>& items, const ItemVocab& vocab);

// Items file of a prepared dataset: file order defines the ids.
struct Catalog {
    ItemVocab vocab;
    std::vector<views::ItemMeta> items;
};
Catalog load_catalog(const std::filesystem::path& path);

// Prepared clients: {"user", "train": [names], "ts": [ints], "valid", "test", "seen": [names]}.
void write_clients(std::ostream& out, const std::vector<ClientDataset>& clients, const ItemVocab& vocab);
std::vector<ClientDataset> load_clients(const std::filesystem::path& path, const ItemVocab& vocab);

struct SyntheticConfig {
    std::size_t n_users = 256;
    std::size_t n_items = 200;
    std::size_t latent_dim = 16;
    std::size_t n_categories = 8;
    std::size_t min_len = 8;
    std::size_t max_len = 30;
    double preference_temperature = 0.1;
    // Users draw their preference around one of the category centroids:
    // normalize(centroid + spread * g / sqrt(k)). Negative means uniform on the
    // sphere (no taste clusters).
    double preference_spread = 0.5;
    double drift = 0.05;
    std::uint64_t seed = 1;
};

void validate(const SyntheticConfig& cfg);

struct SyntheticData {
    std::vector<RawInteraction> interactions; // ts = step index per user
    std::vector<views::ItemMeta> items;       // ids 0..n_items-1 with latents
    ItemVocab vocab;                           // id i <-> name of item i
    std::vector<ClientDataset> clients;
    std::vector<std::vector<double>> preferences; // initial, per user
};

SyntheticData generate_synthetic(const SyntheticConfig& cfg);

// One user's sequence: softmax(pref . latent / temperature) without
// replacement, with pref perturbed by `drift` and renormalised every step.
ItemList sample_user_sequence(std::vector<double> preference, const std::vector<std::vector<double>>& latents,
                              std::size_t length, double temperature, double drift, std::uint64_t seed);

} // namespace fsl::data
