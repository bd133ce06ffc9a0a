#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "doctest.h"
#include "fsl/cli/app.hpp"
#include "fsl/cli/config.hpp"
#include "fsl/common/errors.hpp"
#include "fsl/federation/federation.hpp"
#include "support/tmpdir.hpp"

using namespace fsl;
using namespace fsl::cli;
using testing::TempDir;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) {
        out.push_back(l);
    }
    return out;
}

std::vector<std::string> fields(const std::string& row) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        const auto c = row.find(',', pos);
        out.push_back(row.substr(pos, c == std::string::npos ? std::string::npos : c - pos));
        if (c == std::string::npos) {
            return out;
        }
        pos = c + 1;
    }
}

int synth_into(const std::filesystem::path& dir, std::size_t n_items = 40, std::uint64_t seed = 3) {
    return run({"synth", "--set", "synth.output_dir=\"" + dir.string() + "\"", "--set", "synth.n_users=48", "--set",
                "synth.n_items=" + std::to_string(n_items), "--set", "synth.min_len=6", "--set", "synth.max_len=12",
                "--set", "synth.seed=" + std::to_string(seed)});
}

// A small, fast run over a synthetic dataset in `data`.
std::vector<std::string> train_args(const std::filesystem::path& data, const std::filesystem::path& out) {
    return {"train",
            "--set", "data.clients=\"" + (data / "clients.jsonl").string() + "\"",
            "--set", "data.items=\"" + (data / "items.jsonl").string() + "\"",
            "--set", "run.output_dir=\"" + out.string() + "\"",
            "--set", "model.dim=8",
            "--set", "federation.rounds=3",
            "--set", "federation.local_epochs=1",
            "--set", "federation.client_fraction=0.25",
            "--set", "run.eval_every=2",
            "--set", "run.seed=5"};
}

std::vector<std::string> with(std::vector<std::string> args, std::initializer_list<std::string> extra) {
    for (const auto& e : extra) {
        args.push_back("--set");
        args.push_back(e);
    }
    return args;
}

} // namespace

TEST_CASE("config file parsing") {
    const auto cfg = ConfigFile::parse("# top\n[model]\ndim = 16  # inline\nbackbone = \"gru\"\n\n[run]\n"
                                       "output_dir = \"a \\\"b\\\" #c\"\nrecord_wall_ms = true\n",
                                       "t.toml");
    CHECK(cfg.get_size("model.dim") == 16u);
    CHECK(cfg.get_string("model.backbone") == "gru");
    CHECK(cfg.get_string("run.output_dir") == "a \"b\" #c");
    CHECK(cfg.get_bool("run.record_wall_ms") == true);
    CHECK_FALSE(cfg.get_string("model.max_len"));

    CHECK_THROWS_AS(ConfigFile::parse("[a]\nx = 1\nx = 2\n"), ConfigError);
    CHECK_THROWS_AS(ConfigFile::parse("x = 1\n"), ConfigError);
    CHECK_THROWS_AS(ConfigFile::parse("[a]\nx\n"), ConfigError);
    CHECK_THROWS_AS(ConfigFile::parse("[a\n"), ConfigError);
    CHECK_THROWS_AS(ConfigFile::parse("[a]\nx = \"open\n"), ConfigError);
    CHECK_THROWS_AS(ConfigFile::parse("[a]\nx =\n"), ConfigError);
    CHECK_THROWS_AS((void)ConfigFile::parse("[model]\ndim = \"16\"\n").get_size("model.dim"), ConfigError);
    CHECK_THROWS_AS((void)ConfigFile::parse("[model]\ndim = -1\n").get_size("model.dim"), ConfigError);
    CHECK_THROWS_AS((void)ConfigFile::parse("[model]\ndim = 1.5\n").get_int("model.dim"), ConfigError);
    CHECK_THROWS_AS((void)ConfigFile::parse("[run]\nrecord_wall_ms = yes\n").get_bool("run.record_wall_ms"), ConfigError);

    try {
        (void)ConfigFile::parse("[a]\n\nbroken line\n", "f.toml");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("f.toml:3") != std::string::npos);
    }
}

TEST_CASE("overrides and unknown keys") {
    auto cfg = ConfigFile::parse("[federation]\nrounds = 7\n");
    cfg.set_override("federation.rounds=9");
    cfg.set_override("run.mode = fedseq");
    CHECK(cfg.get_size("federation.rounds") == 9u);
    const RunConfig rc = read_run_config(cfg);
    CHECK(rc.round.rounds == 9);
    CHECK(rc.mode == Mode::fedseq);
    CHECK_THROWS_AS(cfg.set_override("rounds=3"), ConfigError);
    CHECK_THROWS_AS(cfg.set_override("federation.rounds"), ConfigError);

    auto unknown = ConfigFile::parse("[federation]\nround = 3\n");
    CHECK_THROWS_AS(read_run_config(unknown), ConfigError);
    CHECK_THROWS_AS(read_run_config(ConfigFile::parse("[federation]\nlearning_rate = -1\n")), ConfigError);
    CHECK_THROWS_AS(read_run_config(ConfigFile::parse("[run]\nmode = \"federated\"\n")), ConfigError);
    CHECK_THROWS_AS(read_run_config(ConfigFile::parse("[model]\nbackbone = \"gru\"\n"
                                                      "[federation]\nloss_positions = \"all\"\n")),
                    ConfigError);
}

TEST_CASE("defaults follow the training recipe") {
    const RunConfig rc = read_run_config(ConfigFile{});
    CHECK(rc.round.client_fraction == 0.10);
    CHECK(rc.round.local_epochs == 5);
    CHECK(rc.round.rounds == 100);
    CHECK(rc.round.learning_rate == 1e-3);
    CHECK(rc.round.weight_decay == 1e-5);
    CHECK(rc.round.clip_norm == 5.0);
    CHECK(rc.round.lambda_cl == 0.1);
    CHECK(rc.round.tau == 0.07);
    CHECK(rc.max_len == 50);
    CHECK(rc.mode == Mode::lumos);
    CHECK_FALSE(rc.record_wall_ms);
}

TEST_CASE("mode rules") {
    auto cfg = ConfigFile::parse("[federation]\nlambda_cl = 0.4\n");
    cfg.set_override("run.mode=fedseq");
    CHECK(read_run_config(cfg).round.lambda_cl == 0.0);
    cfg.set_override("run.mode=centralized");
    CHECK(read_run_config(cfg).round.lambda_cl == 0.0);
    CHECK(training_mode(Mode::centralized) == federation::TrainingMode::centralized);
    cfg.set_override("run.mode=confedsrs");
    const RunConfig conf = read_run_config(cfg);
    CHECK(conf.views.kind == views::GeneratorKind::augment);
    CHECK(conf.round.lambda_cl == 0.4);
    cfg.set_override("run.mode=lumos");
    cfg.set_override("views.kind=augment");
    CHECK_THROWS_AS(read_run_config(cfg), ConfigError);
    cfg.set_override("run.mode=local_only");
    CHECK_THROWS_AS(read_run_config(cfg), ConfigError);
    cfg.set_override("views.kind=rule");
    CHECK(training_mode(read_run_config(cfg).mode) == federation::TrainingMode::local_only);
}

TEST_CASE("endpoint environment variable wins over the file") {
    auto cfg = ConfigFile::parse("[llm]\nendpoint = \"http://file:1\"\n");
    ::setenv("FEDSEQ_LLM_ENDPOINT", "http://env:2", 1);
    CHECK(read_run_config(cfg).views.llm.endpoint == "http://env:2");
    ::unsetenv("FEDSEQ_LLM_ENDPOINT");
    CHECK(read_run_config(cfg).views.llm.endpoint == "http://file:1");
}

TEST_CASE("resolved snapshot reads back to the same configuration") {
    auto cfg = ConfigFile::parse("[data]\nclients = \"c \\\"q\\\".jsonl\"\nitems = \"i.jsonl\"\n"
                                 "[model]\nbackbone = \"gru\"\ndim = 12\nmax_len = 20\n"
                                 "[federation]\nlearning_rate = 0.0031\nclients_per_round = 9\nuse_paraphrase = false\n"
                                 "[views]\nfuture_len = 4\n[run]\nseed = 77\nmode = \"confedsrs\"\n");
    const RunConfig a = read_run_config(cfg);
    const std::string text = to_config_text(a);
    const RunConfig b = read_run_config(ConfigFile::parse(text));
    CHECK(to_config_text(b) == text);
    CHECK(b.clients_path == "c \"q\".jsonl");
    CHECK(b.backbone == encoder::BackboneKind::gru);
    CHECK(b.round.learning_rate == 0.0031);
    CHECK(b.round.clients_per_round == 9u);
    CHECK_FALSE(b.round.views.paraphrase);
    CHECK(b.round.global_seed == 77);
    CHECK(b.views.kind == views::GeneratorKind::augment);
    const auto reparsed = ConfigFile::parse(text);
    for (const auto& [key, value] : reparsed.values()) {
        CHECK(std::find(known_keys().begin(), known_keys().end(), key) != known_keys().end());
    }
}

TEST_CASE("synth command") {
    TempDir tmp("cli-synth");
    REQUIRE(synth_into(tmp / "a") == kExitOk);
    REQUIRE(synth_into(tmp / "b") == kExitOk);
    for (const char* f : {"interactions.jsonl", "items.jsonl", "clients.jsonl"}) {
        CHECK(slurp(tmp / "a" / f) == slurp(tmp / "b" / f));
    }
    CHECK(synth_into(tmp / "c", 10) == kExitConfig);
    CHECK(run({"synth", "--set", "synth.nope=1"}) == kExitConfig);
    CHECK(run({"synth", "--config", (tmp / "missing.toml").string()}) == kExitIo);
}

TEST_CASE("prepare command") {
    TempDir tmp("cli-prepare");
    const auto out = tmp / "p";
    REQUIRE(run({"prepare", "--set", "prepare.input=\"fixtures/interactions.csv\"", "--set", "prepare.min_count=1",
                 "--set", "prepare.min_len=3", "--set", "prepare.output_dir=\"" + out.string() + "\""}) == kExitOk);
    const auto cat = data::load_catalog(out / "items.jsonl");
    const auto clients = data::load_clients(out / "clients.jsonl", cat.vocab);
    CHECK(!clients.empty());
    for (const auto& c : clients) {
        CHECK_NOTHROW(data::check_client(c, cat.vocab.size()));
    }
    CHECK(run({"prepare", "--set", "prepare.input=\"fixtures/none.csv\"", "--set",
               "prepare.output_dir=\"" + out.string() + "\""}) == kExitIo);
    CHECK(run({"prepare"}) == kExitConfig);
}

TEST_CASE("train command outputs") {
    TempDir tmp("cli-train");
    REQUIRE(synth_into(tmp / "data") == kExitOk);

    SUBCASE("zero rounds writes the header only") {
        REQUIRE(run(with(train_args(tmp / "data", tmp / "r0"), {"federation.rounds=0"})) == kExitOk);
        CHECK(slurp(tmp / "r0" / "metrics.csv") == std::string(kMetricsHeader) + "\n");
        CHECK(std::filesystem::exists(tmp / "r0" / "checkpoint.fsql"));
        CHECK(std::filesystem::exists(tmp / "r0" / "config.resolved.toml"));
    }
    SUBCASE("metrics schema and the resolved snapshot") {
        REQUIRE(run(train_args(tmp / "data", tmp / "r1")) == kExitOk);
        const auto rows = lines(slurp(tmp / "r1" / "metrics.csv"));
        REQUIRE(rows.size() == 4);
        CHECK(rows[0] == kMetricsHeader);
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const auto f = fields(rows[i]);
            REQUIRE(f.size() == 8);
            CHECK(f[0] == std::to_string(i));
            CHECK(f[6] == "12");
            CHECK(f[7] == "0");
            const bool evaluated = i % 2 == 0 || i == 3;
            CHECK(f[3].empty() != evaluated);
            if (evaluated) {
                const double hr = std::stod(f[3]);
                CHECK(hr >= 0.0);
                CHECK(hr <= 1.0);
            }
        }
        // Re-running from the snapshot alone reproduces the run.
        const std::string snapshot = (tmp / "r1" / "config.resolved.toml").string();
        REQUIRE(run({"train", "--config", snapshot, "--set",
                     "run.output_dir=\"" + (tmp / "r1b").string() + "\""}) == kExitOk);
        CHECK(slurp(tmp / "r1" / "metrics.csv") == slurp(tmp / "r1b" / "metrics.csv"));
        CHECK(slurp(tmp / "r1" / "checkpoint.fsql") == slurp(tmp / "r1b" / "checkpoint.fsql"));
    }
    SUBCASE("fedseq has an all-zero contrastive column") {
        REQUIRE(run(with(train_args(tmp / "data", tmp / "f"), {"run.mode=fedseq"})) == kExitOk);
        const auto rows = lines(slurp(tmp / "f" / "metrics.csv"));
        REQUIRE(rows.size() == 4);
        for (std::size_t i = 1; i < rows.size(); ++i) {
            CHECK(fields(rows[i])[2] == "0");
        }
    }
    SUBCASE("byte-identical across runs and worker counts") {
        REQUIRE(run(with(train_args(tmp / "data", tmp / "p1"), {"run.parallel_clients=1"})) == kExitOk);
        REQUIRE(run(with(train_args(tmp / "data", tmp / "p4"), {"run.parallel_clients=4"})) == kExitOk);
        REQUIRE(run(with(train_args(tmp / "data", tmp / "p4b"), {"run.parallel_clients=4"})) == kExitOk);
        CHECK(slurp(tmp / "p1" / "metrics.csv") == slurp(tmp / "p4" / "metrics.csv"));
        CHECK(slurp(tmp / "p4" / "metrics.csv") == slurp(tmp / "p4b" / "metrics.csv"));
    }
    SUBCASE("local_only keeps models on the clients") {
        REQUIRE(run(with(train_args(tmp / "data", tmp / "lo"), {"run.mode=local_only"})) == kExitOk);
        CHECK_FALSE(std::filesystem::exists(tmp / "lo" / "checkpoint.fsql"));
        CHECK(std::filesystem::exists(tmp / "lo" / "final_metrics.json"));
    }
    SUBCASE("exit codes") {
        CHECK(run(with(train_args(tmp / "data", tmp / "e"), {"federation.tau=0"})) == kExitConfig);
        CHECK(run(with(train_args(tmp / "data", tmp / "e"), {"data.items=\"nope.jsonl\""})) == kExitIo);
        CHECK(run(with(train_args(tmp / "data", tmp / "e"),
                       {"federation.learning_rate=1e308", "run.log_level=off"})) == kExitNumerical);
        CHECK(run({"train", "--unknown-flag"}) == kExitConfig);
        CHECK(run({"train"}) == kExitConfig);
        CHECK(run({}) == kExitConfig);
        CHECK(run({"--help"}) == kExitOk);
    }
}

TEST_CASE("evaluate command") {
    TempDir tmp("cli-eval");
    REQUIRE(synth_into(tmp / "data") == kExitOk);
    REQUIRE(run(train_args(tmp / "data", tmp / "run")) == kExitOk);
    const auto clients = (tmp / "data" / "clients.jsonl").string();
    const auto items = (tmp / "data" / "items.jsonl").string();
    const auto ckpt = (tmp / "run" / "checkpoint.fsql").string();

    auto evaluate = [&](const std::string& split, const std::string& k, const std::string& out) {
        REQUIRE(run({"evaluate", "--checkpoint", ckpt, "--clients", clients, "--items", items, "--split", split, "--k",
                     k, "--out", out}) == kExitOk);
        return nlohmann::json::parse(slurp(out));
    };

    const auto final_metrics = nlohmann::json::parse(slurp(tmp / "run" / "final_metrics.json"));
    for (const char* split : {"valid", "test"}) {
        const auto j = evaluate(split, "20", (tmp / "m.json").string());
        CHECK(j["hr_at_k"].get<double>() == final_metrics[split]["hr_at_k"].get<double>());
        CHECK(j["ndcg_at_k"].get<double>() == final_metrics[split]["ndcg_at_k"].get<double>());
        CHECK(j["mrr"].get<double>() == final_metrics[split]["mrr"].get<double>());
        CHECK(j["split"] == split);
    }
    // The last metrics.csv row is the final validation evaluation.
    const auto rows = lines(slurp(tmp / "run" / "metrics.csv"));
    const auto last = fields(rows.back());
    CHECK(std::stod(last[5]) == final_metrics["valid"]["mrr"].get<double>());

    // k moves the cutoff only.
    const auto k5 = evaluate("test", "5", (tmp / "k5.json").string());
    const auto k50 = evaluate("test", "50", (tmp / "k50.json").string());
    CHECK(k5["mrr"].get<double>() == k50["mrr"].get<double>());
    CHECK(k5["hr_at_k"].get<double>() <= k50["hr_at_k"].get<double>());

    SUBCASE("vocabulary mismatch names both sizes") {
        REQUIRE(synth_into(tmp / "other", 30) == kExitOk);
        CHECK(run({"evaluate", "--checkpoint", ckpt, "--clients", (tmp / "other" / "clients.jsonl").string(),
                   "--items", (tmp / "other" / "items.jsonl").string()}) == kExitConfig);
        try {
            const auto cat = data::load_catalog(tmp / "other" / "items.jsonl");
            (void)cat;
        } catch (...) {
            FAIL("fixture");
        }
    }
    SUBCASE("bad inputs") {
        CHECK(run({"evaluate", "--checkpoint", ckpt, "--clients", clients, "--items", items, "--split", "train"}) ==
              kExitConfig);
        CHECK(run({"evaluate", "--checkpoint", (tmp / "none.fsql").string(), "--clients", clients, "--items", items}) ==
              kExitIo);
        CHECK(run({"evaluate", "--clients", clients, "--items", items}) == kExitConfig);
    }
}

TEST_CASE("untrained checkpoint sits in the chance band") {
    TempDir tmp("cli-chance");
    REQUIRE(run({"synth", "--set", "synth.output_dir=\"" + (tmp / "d").string() + "\""}) == kExitOk);
    auto cfg = ConfigFile{};
    cfg.set_override("run.seed=2");
    const RunConfig rc = read_run_config(cfg);
    federation::save_checkpoint(tmp / "init.fsql", initial_params(rc, 200));
    REQUIRE(run({"evaluate", "--checkpoint", (tmp / "init.fsql").string(), "--clients",
                 (tmp / "d" / "clients.jsonl").string(), "--items", (tmp / "d" / "items.jsonl").string(), "--out",
                 (tmp / "m.json").string()}) == kExitOk);
    const double hr = nlohmann::json::parse(slurp(tmp / "m.json"))["hr_at_k"].get<double>();
    MESSAGE("untrained HR@20 " << hr);
    CHECK(hr >= 0.05);
    CHECK(hr <= 0.18);
}

TEST_CASE("ablate command") {
    TempDir tmp("cli-ablate");
    REQUIRE(synth_into(tmp / "data") == kExitOk);
    auto args = train_args(tmp / "data", tmp / "abl");
    args[0] = "ablate";
    REQUIRE(run(args) == kExitOk);
    const auto rows = lines(slurp(tmp / "abl" / "ablation.csv"));
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == "variant,hr20,ndcg20,mrr,rec_loss,cl_loss");
    CHECK(fields(rows[1])[0] == "full");
    CHECK(fields(rows[2])[0] == "no_future");
    CHECK(fields(rows[3])[0] == "no_paraphrase");
    CHECK(fields(rows[4])[0] == "no_counterfactual");

    // The full variant is an ordinary train run with the same seed.
    REQUIRE(run(train_args(tmp / "data", tmp / "plain")) == kExitOk);
    CHECK(slurp(tmp / "abl" / "full" / "metrics.csv") == slurp(tmp / "plain" / "metrics.csv"));
    const auto fm = nlohmann::json::parse(slurp(tmp / "plain" / "final_metrics.json"));
    CHECK(std::stod(fields(rows[1])[1]) == fm["test"]["hr_at_k"].get<double>());
    CHECK(slurp(tmp / "abl" / "no_future" / "metrics.csv") != slurp(tmp / "plain" / "metrics.csv"));

    auto fedseq = args;
    fedseq.push_back("--set");
    fedseq.push_back("run.mode=fedseq");
    CHECK(run(fedseq) == kExitConfig);
}
