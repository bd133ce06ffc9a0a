#include "fsl/cli/app.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fsl/common/errors.hpp"
#include "fsl/common/log.hpp"
#include "fsl/common/rng.hpp"

namespace fsl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kInitTag = 0x494E4954ULL; // "INIT"

std::string num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
    }
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    return out;
}

void finish(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) {
        throw IoError("write failed for " + path.string());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
    finish(out, path);
}

json metrics_object(const eval::RankingMetrics& m) {
    return json{{"hr_at_k", m.hr_at_k}, {"ndcg_at_k", m.ndcg_at_k}, {"mrr", m.mrr}, {"k", m.k},
                {"n_users", m.n_users}};
}

ConfigFile gather(const std::string& config_path, const std::vector<std::string>& overrides) {
    ConfigFile cfg = config_path.empty() ? ConfigFile{} : ConfigFile::load(config_path);
    for (const auto& o : overrides) {
        cfg.set_override(o);
    }
    return cfg;
}

RunConfig resolve_run(const std::string& config_path, const std::vector<std::string>& overrides) {
    RunConfig rc = read_run_config(gather(config_path, overrides));
    log::set_level(parse_log_level(rc.log_level));
    if (rc.clients_path.empty() || rc.items_path.empty()) {
        throw ConfigError("data.clients and data.items are required");
    }
    return rc;
}

// Runs one configuration into `dir`: config snapshot, metrics.csv streamed
// per round, checkpoint and final metrics.
RunOutcome train_into(const RunConfig& rc, const Dataset& ds, const views::ItemCatalog& catalog, const fs::path& dir) {
    make_dir(dir);
    write_text(dir / "config.resolved.toml", to_config_text(rc));

    const fs::path metrics_path = dir / "metrics.csv";
    auto metrics = open_out(metrics_path);
    metrics << kMetricsHeader << '\n';
    metrics.flush();
    auto on_round = [&](const federation::RoundReport& r) {
        metrics << format_report(r) << '\n';
        metrics.flush();
        if (r.metrics) {
            log::info("round " + std::to_string(r.round) + " rec " + num(r.rec_loss) + " cl " + num(r.cl_loss) +
                      " hr@" + std::to_string(r.metrics->k) + " " + num(r.metrics->hr_at_k));
        }
    };
    RunOutcome out = execute(rc, ds.clients, catalog, on_round);
    finish(metrics, metrics_path);

    // Per-client models never leave the client in local_only mode.
    if (rc.mode != Mode::local_only) {
        federation::save_checkpoint(dir / "checkpoint.fsql", out.result.params);
    }
    const auto& vs = out.result.view_stats;
    json fm{{"mode", std::string(to_string(rc.mode))},
            {"rounds", rc.round.rounds},
            {"valid", metrics_object(out.valid)},
            {"test", metrics_object(out.test)},
            {"excluded_updates", out.result.excluded_updates},
            {"views",
             {{"triples", vs.triples},
              {"llm_views", vs.llm_views},
              {"fallback_views", vs.fallback_views},
              {"cache_hits", vs.cache_hits}}}};
    write_text(dir / "final_metrics.json", fm.dump(2) + "\n");
    return out;
}

int cmd_synth(const std::string& config_path, const std::vector<std::string>& overrides) {
    const SynthCommandConfig sc = read_synth_config(gather(config_path, overrides));
    const data::SyntheticData d = data::generate_synthetic(sc.synth);
    const fs::path dir = sc.output_dir;
    make_dir(dir);
    {
        auto out = open_out(dir / "interactions.jsonl");
        data::write_interactions_jsonl(out, d.interactions);
        finish(out, dir / "interactions.jsonl");
    }
    {
        auto out = open_out(dir / "items.jsonl");
        data::write_item_meta(out, d.items, d.vocab);
        finish(out, dir / "items.jsonl");
    }
    {
        auto out = open_out(dir / "clients.jsonl");
        data::write_clients(out, d.clients, d.vocab);
        finish(out, dir / "clients.jsonl");
    }
    const double mean_len = static_cast<double>(d.interactions.size()) / static_cast<double>(sc.synth.n_users);
    std::printf("users %zu items %zu mean_length %.2f -> %s\n", sc.synth.n_users, sc.synth.n_items, mean_len,
                dir.string().c_str());
    return kExitOk;
}

int cmd_prepare(const std::string& config_path, const std::vector<std::string>& overrides) {
    const PrepareCommandConfig pc = read_prepare_config(gather(config_path, overrides));
    data::InteractionFormat format = data::format_for(pc.input);
    if (pc.format == "jsonl") {
        format = data::InteractionFormat::jsonl;
    } else if (pc.format == "csv") {
        format = data::InteractionFormat::csv;
    }
    const auto records = data::load_interactions(pc.input, format);
    const data::PreparedData prepared = data::prepare(records, pc.options);
    if (prepared.clients.empty()) {
        throw DataError(pc.input + ": no user survives filtering");
    }
    const auto meta = pc.meta.empty() ? std::vector<data::ItemMetaRecord>{} : data::load_item_meta_records(pc.meta);
    const auto items = data::align_item_meta(meta, prepared.vocab);

    const fs::path dir = pc.output_dir;
    make_dir(dir);
    {
        auto out = open_out(dir / "items.jsonl");
        data::write_item_meta(out, items, prepared.vocab);
        finish(out, dir / "items.jsonl");
    }
    {
        auto out = open_out(dir / "clients.jsonl");
        data::write_clients(out, prepared.clients, prepared.vocab);
        finish(out, dir / "clients.jsonl");
    }
    std::printf("records %zu users %zu items %zu -> %s\n", records.size(), prepared.clients.size(),
                prepared.vocab.size(), dir.string().c_str());
    return kExitOk;
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides) {
    const RunConfig rc = resolve_run(config_path, overrides);
    const Dataset ds = load_dataset(rc);
    const views::ItemCatalog catalog(ds.catalog.items);
    const RunOutcome out = train_into(rc, ds, catalog, rc.output_dir);
    std::printf("test hr@%zu %.4f ndcg@%zu %.4f mrr %.4f -> %s\n", out.test.k, out.test.hr_at_k, out.test.k,
                out.test.ndcg_at_k, out.test.mrr, rc.output_dir.c_str());
    return kExitOk;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& clients_path, const std::string& items_path,
                 const std::string& split_text, std::size_t k, std::size_t max_len, std::size_t workers,
                 const std::string& out_path) {
    const eval::Split split = eval::parse_split(split_text);
    if (k == 0) {
        throw ConfigError("--k must be >= 1");
    }
    encoder::ParamSet params = federation::load_checkpoint(checkpoint);
    const data::Catalog cat = data::load_catalog(items_path);
    if (params.dims().n_items != cat.vocab.size()) {
        throw ConfigError("checkpoint has " + std::to_string(params.dims().n_items) + " items but " + items_path +
                          " has " + std::to_string(cat.vocab.size()));
    }
    if (max_len != 0 && max_len != params.dims().max_len) {
        if (params.kind() == encoder::BackboneKind::attention) {
            throw ConfigError("--max-len " + std::to_string(max_len) + " does not match the checkpoint's " +
                              std::to_string(params.dims().max_len));
        }
        encoder::ModelDims dims = params.dims();
        dims.max_len = max_len;
        auto tensors = params.tensors();
        params = encoder::ParamSet::zeros(params.kind(), dims);
        params.tensors() = std::move(tensors);
    }
    const auto clients = data::load_clients(clients_path, cat.vocab);
    if (clients.empty()) {
        throw DataError(clients_path + ": no clients");
    }
    const auto m = eval::evaluate_split(params, clients, split, k, std::max<std::size_t>(1, workers));
    json j = metrics_object(m);
    j["split"] = std::string(eval::to_string(split));
    const std::string text = j.dump(2) + "\n";
    std::fputs(text.c_str(), stdout);
    if (!out_path.empty()) {
        write_text(out_path, text);
    }
    return kExitOk;
}

int cmd_ablate(const std::string& config_path, const std::vector<std::string>& overrides) {
    const RunConfig base = resolve_run(config_path, overrides);
    if (base.round.lambda_cl <= 0.0) {
        throw ConfigError("ablate needs federation.lambda_cl > 0 (mode " + std::string(to_string(base.mode)) + ")");
    }
    const Dataset ds = load_dataset(base);
    const views::ItemCatalog catalog(ds.catalog.items);

    struct Variant {
        const char* name;
        triview::ViewMask mask;
    };
    const triview::ViewMask all = base.round.views;
    std::vector<Variant> variants{{"full", all}};
    variants.push_back({"no_future", all});
    variants.back().mask.future = false;
    variants.push_back({"no_paraphrase", all});
    variants.back().mask.paraphrase = false;
    variants.push_back({"no_counterfactual", all});
    variants.back().mask.counterfactual = false;

    const fs::path root = base.output_dir;
    make_dir(root);
    std::ostringstream csv;
    csv << "variant,hr20,ndcg20,mrr,rec_loss,cl_loss\n";
    for (const auto& v : variants) {
        RunConfig rc = base;
        rc.round.views = v.mask;
        rc.output_dir = (root / v.name).string();
        if (!v.mask.counterfactual) {
            std::printf("ablate %s: no negative view, the contrastive term reduces to multi-positive alignment\n",
                        v.name);
        } else {
            std::printf("ablate %s\n", v.name);
        }
        std::fflush(stdout);
        const RunOutcome out = train_into(rc, ds, catalog, rc.output_dir);
        const auto& last = out.result.history.empty() ? federation::RoundReport{} : out.result.history.back();
        csv << v.name << ',' << num(out.test.hr_at_k) << ',' << num(out.test.ndcg_at_k) << ',' << num(out.test.mrr)
            << ',' << num(last.rec_loss) << ',' << num(last.cl_loss) << '\n';
    }
    write_text(root / "ablation.csv", csv.str());
    std::fputs(csv.str().c_str(), stdout);
    return kExitOk;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) != nullptr) {
        return kExitConfig;
    }
    if (dynamic_cast<const IoError*>(&e) != nullptr || dynamic_cast<const DataError*>(&e) != nullptr) {
        return kExitIo;
    }
    if (dynamic_cast<const NumericalError*>(&e) != nullptr) {
        return kExitNumerical;
    }
    return 1;
}

} // namespace

Dataset load_dataset(const RunConfig& cfg) {
    Dataset ds;
    ds.catalog = data::load_catalog(cfg.items_path);
    ds.clients = data::load_clients(cfg.clients_path, ds.catalog.vocab);
    if (ds.clients.empty()) {
        throw DataError(cfg.clients_path + ": no clients");
    }
    return ds;
}

encoder::ParamSet initial_params(const RunConfig& cfg, std::size_t n_items) {
    return encoder::ParamSet::initialize(cfg.backbone, encoder::ModelDims{n_items, cfg.dim, cfg.max_len},
                                         rng::derive({cfg.round.global_seed, kInitTag}), cfg.init);
}

RunOutcome execute(const RunConfig& cfg, const std::vector<data::ClientDataset>& clients,
                   const views::ItemCatalog& catalog, std::function<void(const federation::RoundReport&)> on_round,
                   std::shared_ptr<views::CompletionClient> llm_client) {
    federation::TrainingSetup setup;
    setup.clients = &clients;
    setup.catalog = &catalog;
    setup.init = initial_params(cfg, catalog.size());
    setup.round = cfg.round;
    setup.generator = cfg.views;
    setup.mode = training_mode(cfg.mode);
    setup.llm_client = std::move(llm_client);
    setup.record_wall_ms = cfg.record_wall_ms;
    setup.on_round = std::move(on_round);

    RunOutcome out;
    out.result = federation::run_training(setup);
    const std::size_t k = cfg.round.eval_k;
    const std::size_t workers = std::max<std::size_t>(1, cfg.round.parallel_clients);
    out.valid = federation::evaluate_result(out.result, setup.mode, clients, eval::Split::valid, k, workers);
    out.test = federation::evaluate_result(out.result, setup.mode, clients, eval::Split::test, k, workers);
    return out;
}

std::string format_report(const federation::RoundReport& r) {
    std::string row = std::to_string(r.round) + "," + num(r.rec_loss) + "," + num(r.cl_loss) + ",";
    if (r.metrics) {
        row += num(r.metrics->hr_at_k) + "," + num(r.metrics->ndcg_at_k) + "," + num(r.metrics->mrr);
    } else {
        row += ",,";
    }
    row += "," + std::to_string(r.clients) + "," + std::to_string(r.wall_ms);
    return row;
}

std::string metrics_json(const eval::RankingMetrics& m) { return metrics_object(m).dump(); }

int run(const std::vector<std::string>& args) {
    CLI::App app{"Federated sequential recommendation with tri-view contrastive training", "fedseq"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    auto common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "TOML configuration file");
        sub->add_option("--set", overrides, "Override one key, e.g. --set federation.rounds=10")->take_all();
    };
    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
    common(synth);
    auto* prepare = app.add_subcommand("prepare", "Filter and split a raw interaction log");
    common(prepare);
    auto* train = app.add_subcommand("train", "Run one training configuration");
    common(train);
    auto* ablate = app.add_subcommand("ablate", "Train the full model and the three single-view ablations");
    common(ablate);

    std::string checkpoint;
    std::string clients_path;
    std::string items_path;
    std::string split = "test";
    std::size_t k = 20;
    std::size_t max_len = 0;
    std::size_t workers = 1;
    std::string out_path;
    auto* evaluate = app.add_subcommand("evaluate", "Rank every client with a saved checkpoint");
    evaluate->add_option("--checkpoint", checkpoint, "checkpoint.fsql of a run")->required();
    evaluate->add_option("--clients", clients_path, "clients.jsonl")->required();
    evaluate->add_option("--items", items_path, "items.jsonl")->required();
    evaluate->add_option("--split", split, "valid or test")->capture_default_str();
    evaluate->add_option("--k", k, "metric cutoff")->capture_default_str();
    evaluate->add_option("--max-len", max_len, "encoder window for GRU checkpoints (0: from the checkpoint)");
    evaluate->add_option("--workers", workers, "ranking threads")->capture_default_str();
    evaluate->add_option("--out", out_path, "also write the JSON here");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e); // 0 for --help
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*synth) {
            return cmd_synth(config_path, overrides);
        }
        if (*prepare) {
            return cmd_prepare(config_path, overrides);
        }
        if (*train) {
            return cmd_train(config_path, overrides);
        }
        if (*ablate) {
            return cmd_ablate(config_path, overrides);
        }
        return cmd_evaluate(checkpoint, clients_path, items_path, split, k, max_len, workers, out_path);
    } catch (const std::exception& e) {
        const int code = exit_code_for(e);
        std::fprintf(stderr, "error: %s\n", e.what());
        return code;
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) {
        args.emplace_back(argv[i]);
    }
    return run(args);
}

} // namespace fsl::cli
