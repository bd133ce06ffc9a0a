#include <algorithm>
#include <map>
#include <numeric>
#include <unordered_map>

#include "fsl/common/errors.hpp"
#include "fsl/common/log.hpp"
#include "fsl/data/data.hpp"

namespace fsl::data {

ItemId ItemVocab::add(const std::string& name) {
    const auto [it, inserted] = index.emplace(name, static_cast<ItemId>(names.size()));
    if (inserted) {
        names.push_back(name);
    }
    return it->second;
}

ItemId ItemVocab::id(const std::string& name) const {
    const auto it = index.find(name);
    if (it == index.end()) {
        throw DataError("unknown item '" + name + "'");
    }
    return it->second;
}

ItemVocab build_vocab(const std::vector<RawInteraction>& records) {
    ItemVocab v;
    for (const auto& r : records) {
        v.add(r.item);
    }
    return v;
}

std::vector<RawInteraction> k_core_filter(std::vector<RawInteraction> records, std::size_t min_count) {
    if (min_count == 0) {
        throw ConfigError("min_count must be >= 1");
    }
    while (true) {
        std::unordered_map<std::string, std::size_t> users;
        std::unordered_map<std::string, std::size_t> items;
        for (const auto& r : records) {
            ++users[r.user];
            ++items[r.item];
        }
        const auto before = records.size();
        std::erase_if(records, [&](const RawInteraction& r) {
            return users[r.user] < min_count || items[r.item] < min_count;
        });
        if (records.size() == before) {
            return records;
        }
    }
}

void check_client(const ClientDataset& c, std::size_t n_items) {
    auto bad = [&](const std::string& what) { throw DataError("client '" + c.user_id + "': " + what); };
    if (c.train.items.empty()) {
        bad("empty train sequence");
    }
    auto valid = [&](ItemId id) { return id < n_items; };
    if (!std::all_of(c.train.items.begin(), c.train.items.end(), valid) || !valid(c.valid_target) ||
        !valid(c.test_target)) {
        bad("item id out of range");
    }
    if (c.train.timestamps && c.train.timestamps->size() != c.train.items.size()) {
        bad("timestamps and items differ in length");
    }
    if (!std::is_sorted(c.seen.begin(), c.seen.end()) ||
        std::adjacent_find(c.seen.begin(), c.seen.end()) != c.seen.end()) {
        bad("seen set must be sorted and unique");
    }
    auto in_seen = [&](ItemId id) { return std::binary_search(c.seen.begin(), c.seen.end(), id); };
    if (!std::all_of(c.train.items.begin(), c.train.items.end(), in_seen) || !in_seen(c.valid_target) ||
        !in_seen(c.test_target)) {
        bad("seen set misses a sequence item");
    }
}

std::vector<ClientDataset> split_leave_two(const std::vector<RawInteraction>& records, const ItemVocab& vocab) {
    std::map<std::string, std::vector<std::size_t>> by_user; // ordered by user id
    for (std::size_t i = 0; i < records.size(); ++i) {
        by_user[records[i].user].push_back(i);
    }
    std::vector<ClientDataset> out;
    out.reserve(by_user.size());
    std::size_t skipped = 0;
    for (auto& [user, idx] : by_user) {
        if (idx.size() < 3) {
            ++skipped;
            continue;
        }
        // idx is already in input order, so a stable sort on ts gives the
        // (ts, input position) order.
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return records[a].ts < records[b].ts; });
        ClientDataset c;
        c.user_id = user;
        c.train.user_id = user;
        std::vector<std::int64_t> ts;
        for (std::size_t k = 0; k + 2 < idx.size(); ++k) {
            c.train.items.push_back(vocab.id(records[idx[k]].item));
            ts.push_back(records[idx[k]].ts);
        }
        c.train.timestamps = std::move(ts);
        c.valid_target = vocab.id(records[idx[idx.size() - 2]].item);
        c.test_target = vocab.id(records[idx.back()].item);
        for (const std::size_t k : idx) {
            c.seen.push_back(vocab.id(records[k].item));
        }
        std::sort(c.seen.begin(), c.seen.end());
        c.seen.erase(std::unique(c.seen.begin(), c.seen.end()), c.seen.end());
        out.push_back(std::move(c));
    }
    if (skipped > 0) {
        log::info(std::to_string(skipped) + " users with fewer than 3 interactions skipped at split");
    }
    return out;
}

std::vector<ClientDataset> truncate_and_prune(std::vector<ClientDataset> clients, std::size_t max_len,
                                              std::size_t min_len) {
    if (max_len < 3) {
        throw ConfigError("max_len must be >= 3");
    }
    const std::size_t keep = max_len - 2;
    std::erase_if(clients, [&](const ClientDataset& c) { return c.train.items.size() + 2 < min_len; });
    for (auto& c : clients) {
        auto& items = c.train.items;
        if (items.size() <= keep) {
            continue;
        }
        const auto drop = static_cast<std::ptrdiff_t>(items.size() - keep);
        items.erase(items.begin(), items.begin() + drop);
        if (c.train.timestamps) {
            auto& ts = *c.train.timestamps;
            ts.erase(ts.begin(), ts.begin() + drop);
        }
    }
    return clients;
}

PreparedData prepare(const std::vector<RawInteraction>& records, const PrepareOptions& opts) {
    auto filtered = k_core_filter(records, opts.min_count);
    if (filtered.empty()) {
        throw DataError("no interactions survive " + std::to_string(opts.min_count) + "-core filtering");
    }
    PreparedData out;
    out.vocab = build_vocab(filtered);
    out.clients = truncate_and_prune(split_leave_two(filtered, out.vocab), opts.max_len, opts.min_len);
    if (out.clients.empty()) {
        throw DataError("no users left after splitting and pruning");
    }
    for (const auto& c : out.clients) {
        check_client(c, out.vocab.size());
    }
    return out;
}

} // namespace fsl::data
