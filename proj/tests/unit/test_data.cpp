#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "doctest.h"
#include "fsl/common/errors.hpp"
#include "fsl/common/rng.hpp"
#include "fsl/data/data.hpp"
#include "support/tmpdir.hpp"

using namespace fsl;
using namespace fsl::data;
using testing::TempDir;

namespace {

RawInteraction rec(std::string u, std::string i, std::int64_t ts = 0) { return {std::move(u), std::move(i), ts}; }

// Removes one offending user or item at a time until none is left. Slow but
// obviously correct; the k-core is unique, so any removal order ends here.
std::vector<RawInteraction> naive_core(std::vector<RawInteraction> records, std::size_t k) {
    while (true) {
        std::map<std::string, std::size_t> users;
        std::map<std::string, std::size_t> items;
        for (const auto& r : records) {
            ++users[r.user];
            ++items[r.item];
        }
        std::optional<std::string> bad_user;
        std::optional<std::string> bad_item;
        for (const auto& [u, n] : users) {
            if (n < k) {
                bad_user = u;
                break;
            }
        }
        if (!bad_user) {
            for (const auto& [i, n] : items) {
                if (n < k) {
                    bad_item = i;
                    break;
                }
            }
        }
        if (!bad_user && !bad_item) {
            return records;
        }
        std::vector<RawInteraction> kept;
        for (const auto& r : records) {
            if (!(bad_user && r.user == *bad_user) && !(bad_item && r.item == *bad_item)) {
                kept.push_back(r);
            }
        }
        records = std::move(kept);
    }
}

std::vector<RawInteraction> parse_jsonl(const std::string& text) {
    std::istringstream in(text);
    return parse_interactions_jsonl(in, "fixture");
}

std::string error_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const DataError& e) {
        return e.what();
    }
    return "";
}

ItemVocab vocab_of(std::initializer_list<const char*> names) {
    ItemVocab v;
    for (const char* n : names) {
        v.add(n);
    }
    return v;
}

std::vector<RawInteraction> user_run(const std::string& user, std::size_t n, const std::string& prefix = "i") {
    std::vector<RawInteraction> out;
    for (std::size_t t = 0; t < n; ++t) {
        out.push_back(rec(user, prefix + std::to_string(t), static_cast<std::int64_t>(t)));
    }
    return out;
}

} // namespace

TEST_CASE("jsonl and csv renderings agree") {
    const auto j = load_interactions("fixtures/interactions.jsonl", format_for("fixtures/interactions.jsonl"));
    const auto c = load_interactions("fixtures/interactions.csv", format_for("fixtures/interactions.csv"));
    REQUIRE(j.size() == 7);
    CHECK(j == c);
    CHECK(j[0] == rec("alice", "B0001", 1700000300));
    CHECK(j[2].user == "smith, j");
    CHECK(j[3].item == "case \"slim\"");
    CHECK(j[5].item == "line\nbreak");
    CHECK(format_for("x.CSV") == InteractionFormat::csv);
    CHECK(format_for("x.jsonl") == InteractionFormat::jsonl);
}

TEST_CASE("malformed interaction files") {
    CHECK(parse_jsonl("{\"user\":\"a\",\"item\":\"x\",\"ts\":1}\n{\"user\":\"b\",\"item\":\"y\",\"ts\":2}\n"
                      "{\"user\":\"c\",\"item\":\"z\",\"ts\":3}\n")
              .size() == 3);
    CHECK(error_of([] { load_interactions("fixtures/header_only.csv", InteractionFormat::csv); })
              .find("no interactions") != std::string::npos);
    CHECK(error_of([] { parse_jsonl(""); }).find("no interactions") != std::string::npos);
    const std::string missing =
        error_of([] { parse_jsonl("{\"user\":\"a\",\"item\":\"x\",\"ts\":1}\n\n{\"user\":\"a\",\"ts\":2}\n"); });
    CHECK(missing.find(":3") != std::string::npos);
    CHECK(missing.find("item") != std::string::npos);
    CHECK(error_of([] { parse_jsonl("{\"user\":\"a\",\"item\":\"x\",\"ts\":\"yesterday\"}\n"); }).find(":1") !=
          std::string::npos);
    CHECK(error_of([] { parse_jsonl("not json\n"); }).find(":1") != std::string::npos);
    std::istringstream bad_csv("user,item,ts\na,b,1\na,b,notanumber\n");
    CHECK_THROWS_AS(parse_interactions_csv(bad_csv, "csv"), DataError);
    std::istringstream no_ts("user,item\na,b\n");
    CHECK_THROWS_AS(parse_interactions_csv(no_ts, "csv"), DataError);
    CHECK_THROWS_AS(load_interactions("fixtures/does-not-exist.jsonl", InteractionFormat::jsonl), IoError);
}

TEST_CASE("jsonl write and read round trip") {
    const auto records = load_interactions("fixtures/interactions.jsonl", InteractionFormat::jsonl);
    std::ostringstream out;
    write_interactions_jsonl(out, records);
    std::istringstream in(out.str());
    CHECK(parse_interactions_jsonl(in) == records);
}

TEST_CASE("k-core filtering") {
    SUBCASE("fixpoint at input") {
        std::vector<RawInteraction> dense;
        for (int u = 0; u < 5; ++u) {
            for (int i = 0; i < 5; ++i) {
                dense.push_back(rec("u" + std::to_string(u), "i" + std::to_string(i)));
            }
        }
        CHECK(k_core_filter(dense) == dense);
    }
    SUBCASE("lone short user") { CHECK(k_core_filter(user_run("u", 4)).empty()); }
    SUBCASE("cascade: user u drops item i, which drops user w") {
        std::vector<RawInteraction> core;
        for (int u = 0; u < 6; ++u) {
            for (const char* it : {"A", "B", "C", "D", "E", "F"}) {
                core.push_back(rec("c" + std::to_string(u), it));
            }
        }
        std::vector<RawInteraction> all = core;
        for (const char* it : {"i", "A", "B", "C"}) {
            all.push_back(rec("u", it));
        }
        for (const char* it : {"i", "A", "B", "C", "D"}) {
            all.push_back(rec("w", it));
        }
        for (const char* c : {"c0", "c1", "c2"}) {
            all.push_back(rec(c, "i"));
        }
        const auto got = k_core_filter(all);
        CHECK(got == naive_core(all, 5));
        CHECK(got == core);
    }
    SUBCASE("random logs against the brute-force oracle") {
        auto eng = rng::make_engine(2024);
        for (int trial = 0; trial < 40; ++trial) {
            std::vector<RawInteraction> recs;
            const std::size_t n = 50 + rng::uniform_index(eng, 300);
            const std::size_t users = 5 + rng::uniform_index(eng, 30);
            const std::size_t items = 5 + rng::uniform_index(eng, 30);
            for (std::size_t r = 0; r < n; ++r) {
                recs.push_back(rec("u" + std::to_string(rng::uniform_index(eng, users)),
                                   "i" + std::to_string(rng::uniform_index(eng, items)), static_cast<std::int64_t>(r)));
            }
            const std::size_t k = 1 + rng::uniform_index(eng, 6);
            const auto got = k_core_filter(recs, k);
            CHECK(got == naive_core(recs, k));
            CHECK(k_core_filter(got, k) == got);
        }
    }
    CHECK_THROWS_AS(k_core_filter({}, 0), ConfigError);
}

TEST_CASE("vocabulary follows first appearance") {
    const auto v = build_vocab({rec("a", "z"), rec("b", "y"), rec("a", "z"), rec("c", "x")});
    CHECK(v.names == std::vector<std::string>{"z", "y", "x"});
    CHECK(v.id("x") == 2);
    CHECK_THROWS_AS(v.id("nope"), DataError);
}

TEST_CASE("leave-two split") {
    const auto v = vocab_of({"a", "b", "c", "d", "e"});
    SUBCASE("time order") {
        const auto clients = split_leave_two(
            {rec("u", "c", 3), rec("u", "a", 1), rec("u", "e", 5), rec("u", "b", 2), rec("u", "d", 4)}, v);
        REQUIRE(clients.size() == 1);
        CHECK(clients[0].train.items == ItemList{0, 1, 2});
        CHECK(clients[0].valid_target == 3);
        CHECK(clients[0].test_target == 4);
        CHECK(clients[0].seen == ItemList{0, 1, 2, 3, 4});
        CHECK(*clients[0].train.timestamps == std::vector<std::int64_t>{1, 2, 3});
    }
    SUBCASE("ties keep input order") {
        const auto clients = split_leave_two(
            {rec("u", "e", 7), rec("u", "b", 7), rec("u", "a", 1), rec("u", "d", 7), rec("u", "c", 7)}, v);
        CHECK(clients[0].train.items == ItemList{0, 4, 1});
        CHECK(clients[0].valid_target == 3);
        CHECK(clients[0].test_target == 2);
    }
    SUBCASE("shuffled input with distinct timestamps gives the same split") {
        std::vector<RawInteraction> recs;
        const char* names[] = {"a", "b", "c", "d", "e"};
        for (int u = 0; u < 4; ++u) {
            for (int t = 0; t < 5; ++t) {
                recs.push_back(rec("user" + std::to_string(u), names[(t + u) % 5], 10 * t + u));
            }
        }
        const auto sorted = split_leave_two(recs, v);
        auto eng = rng::make_engine(5);
        for (int trial = 0; trial < 10; ++trial) {
            auto shuffled = recs;
            for (std::size_t i = shuffled.size() - 1; i > 0; --i) {
                std::swap(shuffled[i], shuffled[rng::uniform_index(eng, i + 1)]);
            }
            const auto again = split_leave_two(shuffled, v);
            REQUIRE(again.size() == sorted.size());
            for (std::size_t c = 0; c < sorted.size(); ++c) {
                CHECK(again[c].user_id == sorted[c].user_id);
                CHECK(again[c].train.items == sorted[c].train.items);
                CHECK(again[c].valid_target == sorted[c].valid_target);
                CHECK(again[c].test_target == sorted[c].test_target);
            }
        }
    }
    SUBCASE("clients sorted by user id, short users skipped") {
        const auto clients = split_leave_two({rec("zed", "a", 1), rec("zed", "b", 2), rec("zed", "c", 3),
                                              rec("amy", "a", 1), rec("amy", "b", 2), rec("amy", "c", 3),
                                              rec("bo", "a", 1), rec("bo", "b", 2)},
                                             v);
        REQUIRE(clients.size() == 2);
        CHECK(clients[0].user_id == "amy");
        CHECK(clients[1].user_id == "zed");
    }
    SUBCASE("repeat interactions stay scoreable") {
        const auto clients = split_leave_two({rec("u", "a", 1), rec("u", "b", 2), rec("u", "a", 3),
                                              rec("u", "c", 4), rec("u", "a", 5)},
                                             v);
        CHECK(clients[0].test_target == 0);
        CHECK(clients[0].seen == ItemList{0, 1, 2});
    }
}

TEST_CASE("truncation and pruning boundaries") {
    ItemVocab v;
    for (int i = 0; i < 100; ++i) {
        v.add("i" + std::to_string(i));
    }
    std::vector<RawInteraction> recs = user_run("long", 100);
    for (const auto& r : user_run("five", 5)) {
        recs.push_back(r);
    }
    for (const auto& r : user_run("four", 4)) {
        recs.push_back(r);
    }
    const auto clients = truncate_and_prune(split_leave_two(recs, v));
    REQUIRE(clients.size() == 2);
    CHECK(clients[0].user_id == "five");
    CHECK(clients[0].train.items.size() == 3);
    CHECK(clients[1].user_id == "long");
    CHECK(clients[1].train.items.size() == 48);
    CHECK(clients[1].train.items.front() == 50);
    CHECK(clients[1].train.items.back() == 97);
    CHECK(clients[1].train.timestamps->size() == 48);
    CHECK(clients[1].seen.size() == 100);
    CHECK_THROWS_AS(truncate_and_prune({}, 2), ConfigError);
}

TEST_CASE("prepare keeps every client invariant") {
    const auto synth = generate_synthetic(SyntheticConfig{});
    const auto prepared = prepare(synth.interactions);
    CHECK(!prepared.clients.empty());
    std::map<std::string, std::vector<std::string>> original;
    for (const auto& r : k_core_filter(synth.interactions)) {
        original[r.user].push_back(r.item);
    }
    for (const auto& c : prepared.clients) {
        CHECK_NOTHROW(check_client(c, prepared.vocab.size()));
        CHECK(c.train.items.size() >= 3);
        const auto& full = original.at(c.user_id);
        std::vector<std::string> rebuilt;
        for (const ItemId id : c.train.items) {
            rebuilt.push_back(prepared.vocab.names[id]);
        }
        rebuilt.push_back(prepared.vocab.names[c.valid_target]);
        rebuilt.push_back(prepared.vocab.names[c.test_target]);
        CHECK(std::equal(rebuilt.begin(), rebuilt.end(), full.end() - static_cast<std::ptrdiff_t>(rebuilt.size())));
    }
    CHECK(std::is_sorted(prepared.clients.begin(), prepared.clients.end(),
                         [](const ClientDataset& a, const ClientDataset& b) { return a.user_id < b.user_id; }));
    CHECK_THROWS_AS(prepare(user_run("u", 4)), DataError);
}

TEST_CASE("check_client rejects broken datasets") {
    ClientDataset c;
    c.user_id = "u";
    c.train.items = {0, 1, 2};
    c.valid_target = 3;
    c.test_target = 4;
    c.seen = {0, 1, 2, 3, 4};
    CHECK_NOTHROW(check_client(c, 5));
    CHECK_THROWS_AS(check_client(c, 4), DataError);
    auto broken = c;
    broken.seen = {0, 1, 2, 3};
    CHECK_THROWS_AS(check_client(broken, 5), DataError);
    broken = c;
    broken.train.items.clear();
    CHECK_THROWS_AS(check_client(broken, 5), DataError);
}

TEST_CASE("item metadata and prepared clients round trip") {
    TempDir dir("meta");
    SyntheticConfig sc;
    sc.n_users = 20;
    sc.n_items = 40;
    const auto synth = generate_synthetic(sc);
    {
        std::ofstream out(dir / "items.jsonl");
        write_item_meta(out, synth.items, synth.vocab);
        std::ofstream cl(dir / "clients.jsonl");
        write_clients(cl, synth.clients, synth.vocab);
    }
    const Catalog cat = load_catalog(dir / "items.jsonl");
    CHECK(cat.vocab.names == synth.vocab.names);
    REQUIRE(cat.items.size() == synth.items.size());
    for (std::size_t i = 0; i < cat.items.size(); ++i) {
        CHECK(cat.items[i].title == synth.items[i].title);
        CHECK(cat.items[i].category == synth.items[i].category);
        CHECK(*cat.items[i].latent == *synth.items[i].latent);
    }
    const auto clients = load_clients(dir / "clients.jsonl", cat.vocab);
    REQUIRE(clients.size() == synth.clients.size());
    for (std::size_t i = 0; i < clients.size(); ++i) {
        CHECK(clients[i].user_id == synth.clients[i].user_id);
        CHECK(clients[i].train.items == synth.clients[i].train.items);
        CHECK(clients[i].valid_target == synth.clients[i].valid_target);
        CHECK(clients[i].test_target == synth.clients[i].test_target);
        CHECK(clients[i].seen == synth.clients[i].seen);
    }

    const auto v = vocab_of({"a", "b"});
    const auto aligned = align_item_meta({{"b", "Bee", "insects", std::nullopt}}, v);
    CHECK(aligned[0].title == "a");
    CHECK(aligned[0].category == "unknown");
    CHECK(aligned[1].title == "Bee");
    CHECK(aligned[1].item_id == 1);
}

TEST_CASE("synthetic generator") {
    SUBCASE("deterministic in the seed") {
        SyntheticConfig sc;
        sc.n_users = 40;
        const auto a = generate_synthetic(sc);
        const auto b = generate_synthetic(sc);
        CHECK(a.interactions == b.interactions);
        sc.seed = 2;
        CHECK(generate_synthetic(sc).interactions != a.interactions);
    }
    SUBCASE("validation") {
        SyntheticConfig sc;
        sc.n_items = 19;
        CHECK_THROWS_AS(validate(sc), ConfigError);
        sc = {};
        sc.max_len = 201;
        CHECK_THROWS_AS(validate(sc), ConfigError);
        sc = {};
        sc.min_len = 4;
        CHECK_THROWS_AS(validate(sc), ConfigError);
    }
    SUBCASE("shape of the default dataset") {
        const auto s = generate_synthetic(SyntheticConfig{});
        CHECK(s.items.size() == 200);
        CHECK(s.clients.size() == 256);
        std::set<std::string> cats;
        for (const auto& m : s.items) {
            cats.insert(m.category);
            double n = 0.0;
            for (const double x : *m.latent) {
                n += x * x;
            }
            CHECK(n == doctest::Approx(1.0).epsilon(1e-12));
        }
        CHECK(cats.size() <= 8);
        for (const auto& c : s.clients) {
            const std::size_t len = c.train.items.size() + 2;
            CHECK(len >= 8);
            CHECK(len <= 30);
            CHECK(c.seen.size() == len); // without replacement
        }
    }
    SUBCASE("near-zero temperature picks the top items greedily") {
        auto eng = rng::make_engine(9);
        std::vector<std::vector<double>> latents(30, std::vector<double>(4));
        for (auto& l : latents) {
            for (double& x : l) {
                x = rng::normal(eng);
            }
        }
        const std::vector<double> pref{0.5, -0.5, 0.5, 0.5};
        std::vector<ItemId> order(30);
        std::iota(order.begin(), order.end(), ItemId{0});
        auto score = [&](ItemId i) {
            return std::inner_product(pref.begin(), pref.end(), latents[i].begin(), 0.0);
        };
        std::sort(order.begin(), order.end(), [&](ItemId a, ItemId b) { return score(a) > score(b); });
        order.resize(10);
        CHECK(sample_user_sequence(pref, latents, 10, 1e-9, 0.0, 1) == order);
    }
    SUBCASE("identical preferences and seed give identical sequences") {
        SyntheticConfig sc;
        const auto s = generate_synthetic(sc);
        std::vector<std::vector<double>> latents;
        for (const auto& m : s.items) {
            latents.push_back(*m.latent);
        }
        CHECK(sample_user_sequence(s.preferences[0], latents, 12, 0.1, 0.0, 77) ==
              sample_user_sequence(s.preferences[0], latents, 12, 0.1, 0.0, 77));
    }
    SUBCASE("consecutive items are more similar than cross-user pairs") {
        const auto s = generate_synthetic(SyntheticConfig{});
        auto cos = [&](ItemId a, ItemId b) {
            return std::inner_product(s.items[a].latent->begin(), s.items[a].latent->end(),
                                      s.items[b].latent->begin(), 0.0);
        };
        double within = 0.0;
        std::size_t nw = 0;
        double across = 0.0;
        std::size_t na = 0;
        for (std::size_t u = 0; u < s.clients.size(); ++u) {
            const auto& seq = s.clients[u].train.items;
            for (std::size_t t = 1; t < seq.size(); ++t) {
                within += cos(seq[t - 1], seq[t]);
                ++nw;
            }
            const auto& other = s.clients[(u + 1) % s.clients.size()].train.items;
            for (std::size_t t = 0; t < std::min(seq.size(), other.size()); ++t) {
                across += cos(seq[t], other[t]);
                ++na;
            }
        }
        MESSAGE("within " << within / nw << " across " << across / na);
        CHECK(within / nw > across / na + 0.1);
    }
}
