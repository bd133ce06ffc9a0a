#include "fsl/cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "fsl/common/errors.hpp"

namespace fsl::cli {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool valid_name(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_' || c == '-';
    });
}

// Parses a value literal, stopping at an unquoted '#'.
ConfigFile::Value parse_value(std::string_view raw, const std::string& origin) {
    raw = trim(raw);
    ConfigFile::Value v;
    v.origin = origin;
    if (!raw.empty() && raw.front() == '"') {
        v.quoted = true;
        std::size_t i = 1;
        bool closed = false;
        for (; i < raw.size(); ++i) {
            const char c = raw[i];
            if (c == '"') {
                closed = true;
                ++i;
                break;
            }
            if (c == '\\' && i + 1 < raw.size()) {
                const char n = raw[++i];
                switch (n) {
                case 'n':
                    v.text.push_back('\n');
                    break;
                case 't':
                    v.text.push_back('\t');
                    break;
                case '"':
                case '\\':
                    v.text.push_back(n);
                    break;
                default:
                    throw ConfigError(origin + ": unknown escape '\\" + std::string(1, n) + "'");
                }
                continue;
            }
            v.text.push_back(c);
        }
        if (!closed) {
            throw ConfigError(origin + ": unterminated string");
        }
        const auto rest = trim(raw.substr(i));
        if (!rest.empty() && rest.front() != '#') {
            throw ConfigError(origin + ": unexpected text after string: '" + std::string(rest) + "'");
        }
        return v;
    }
    const auto hash = raw.find('#');
    v.text = std::string(trim(raw.substr(0, hash)));
    if (v.text.empty()) {
        throw ConfigError(origin + ": missing value");
    }
    return v;
}

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (const char c : s) {
        switch (c) {
        case '"':
            out += "\\\"";
            break;
        case '\\':
            out += "\\\\";
            break;
        case '\n':
            out += "\\n";
            break;
        case '\t':
            out += "\\t";
            break;
        default:
            out.push_back(c);
        }
    }
    return out + "\"";
}

std::string num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string flag(bool b) { return b ? "true" : "false"; }

[[noreturn]] void bad_value(const std::string& key, const ConfigFile::Value& v, const char* expected) {
    throw ConfigError(v.origin + ": " + key + " = '" + v.text + "' is not " + expected);
}

} // namespace

ConfigFile ConfigFile::parse(std::string_view text, const std::string& source) {
    ConfigFile cfg;
    std::string section;
    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const auto line = trim(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++lineno;
        const std::string origin = source + ":" + std::to_string(lineno);
        if (line.empty() || line.front() == '#') {
            continue;
        }
        if (line.front() == '[') {
            const auto close = line.find(']');
            if (close == std::string_view::npos) {
                throw ConfigError(origin + ": unterminated section header");
            }
            const auto rest = trim(line.substr(close + 1));
            if (!rest.empty() && rest.front() != '#') {
                throw ConfigError(origin + ": unexpected text after section header");
            }
            section = std::string(trim(line.substr(1, close - 1)));
            if (!valid_name(section)) {
                throw ConfigError(origin + ": bad section name '" + section + "'");
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError(origin + ": expected 'key = value'");
        }
        const auto key = trim(line.substr(0, eq));
        if (!valid_name(key)) {
            throw ConfigError(origin + ": bad key '" + std::string(key) + "'");
        }
        if (section.empty()) {
            throw ConfigError(origin + ": key '" + std::string(key) + "' appears before any [section]");
        }
        const std::string full = section + "." + std::string(key);
        if (cfg.values_.contains(full)) {
            throw ConfigError(origin + ": duplicate key '" + full + "'");
        }
        cfg.values_[full] = parse_value(line.substr(eq + 1), origin);
    }
    return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read config " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

void ConfigFile::set_override(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) {
        throw ConfigError("--set expects section.key=value, got '" + std::string(assignment) + "'");
    }
    const std::string key(trim(assignment.substr(0, eq)));
    const auto dot = key.find('.');
    if (dot == std::string::npos || !valid_name(key.substr(0, dot)) || !valid_name(key.substr(dot + 1))) {
        throw ConfigError("--set key must look like section.key, got '" + key + "'");
    }
    values_[key] = parse_value(assignment.substr(eq + 1), "--set " + key);
}

const ConfigFile::Value* ConfigFile::find(const std::string& key) const {
    const auto it = values_.find(key);
    return it == values_.end() ? nullptr : &it->second;
}

std::optional<std::string> ConfigFile::get_string(const std::string& key) const {
    const Value* v = find(key);
    if (v == nullptr) {
        return std::nullopt;
    }
    return v->text;
}

std::optional<double> ConfigFile::get_double(const std::string& key) const {
    const Value* v = find(key);
    if (v == nullptr) {
        return std::nullopt;
    }
    if (v->quoted) {
        bad_value(key, *v, "a number");
    }
    errno = 0;
    char* end = nullptr;
    const double x = std::strtod(v->text.c_str(), &end);
    if (end != v->text.c_str() + v->text.size() || errno == ERANGE || !std::isfinite(x)) {
        bad_value(key, *v, "a finite number");
    }
    return x;
}

std::optional<std::int64_t> ConfigFile::get_int(const std::string& key) const {
    const Value* v = find(key);
    if (v == nullptr) {
        return std::nullopt;
    }
    if (v->quoted) {
        bad_value(key, *v, "an integer");
    }
    errno = 0;
    char* end = nullptr;
    const long long x = std::strtoll(v->text.c_str(), &end, 10);
    if (end != v->text.c_str() + v->text.size() || errno == ERANGE) {
        bad_value(key, *v, "an integer");
    }
    return static_cast<std::int64_t>(x);
}

std::optional<std::size_t> ConfigFile::get_size(const std::string& key) const {
    const auto x = get_int(key);
    if (x && *x < 0) {
        bad_value(key, *find(key), "a non-negative integer");
    }
    return x ? std::optional<std::size_t>(static_cast<std::size_t>(*x)) : std::nullopt;
}

std::optional<bool> ConfigFile::get_bool(const std::string& key) const {
    const Value* v = find(key);
    if (v == nullptr) {
        return std::nullopt;
    }
    if (!v->quoted && v->text == "true") {
        return true;
    }
    if (!v->quoted && v->text == "false") {
        return false;
    }
    bad_value(key, *v, "true or false");
}

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys{
        "data.clients", "data.items",
        "model.backbone", "model.dim", "model.max_len", "model.embedding_std", "model.weight_gain",
        "model.positional_std",
        "federation.client_fraction", "federation.clients_per_round", "federation.local_epochs",
        "federation.rounds", "federation.learning_rate", "federation.weight_decay", "federation.batch_size",
        "federation.clip_norm", "federation.lambda_cl", "federation.tau", "federation.optimizer",
        "federation.loss_positions", "federation.similarity", "federation.use_future", "federation.use_paraphrase",
        "federation.use_counterfactual", "federation.stop_gradient_views",
        "views.kind", "views.future_len", "views.substitute_prob", "views.swap_prob", "views.crop_ratio",
        "views.mask_prob", "views.cache_path",
        "llm.endpoint", "llm.timeout_ms", "llm.max_retries", "llm.temperature", "llm.max_tokens", "llm.backoff_ms",
        "llm.parallelism",
        "run.mode", "run.output_dir", "run.seed", "run.eval_every", "run.eval_k", "run.parallel_clients",
        "run.record_wall_ms", "run.log_level",
        "synth.n_users", "synth.n_items", "synth.latent_dim", "synth.n_categories", "synth.min_len",
        "synth.max_len", "synth.preference_temperature", "synth.preference_spread", "synth.drift", "synth.seed",
        "synth.output_dir",
        "prepare.input", "prepare.format", "prepare.meta", "prepare.min_count", "prepare.max_len",
        "prepare.min_len", "prepare.output_dir",
    };
    return keys;
}

void check_known_keys(const ConfigFile& cfg) {
    static const std::set<std::string> known(known_keys().begin(), known_keys().end());
    for (const auto& [key, value] : cfg.values()) {
        if (!known.contains(key)) {
            throw ConfigError(value.origin + ": unknown key '" + key + "'");
        }
    }
}

std::string_view to_string(Mode mode) {
    switch (mode) {
    case Mode::lumos:
        return "lumos";
    case Mode::fedseq:
        return "fedseq";
    case Mode::confedsrs:
        return "confedsrs";
    case Mode::centralized:
        return "centralized";
    case Mode::local_only:
        return "local_only";
    }
    return "lumos";
}

Mode parse_mode(std::string_view text) {
    for (const Mode m : {Mode::lumos, Mode::fedseq, Mode::confedsrs, Mode::centralized, Mode::local_only}) {
        if (text == to_string(m)) {
            return m;
        }
    }
    throw ConfigError("unknown run.mode '" + std::string(text) +
                      "' (expected lumos|fedseq|confedsrs|centralized|local_only)");
}

federation::TrainingMode training_mode(Mode mode) {
    switch (mode) {
    case Mode::centralized:
        return federation::TrainingMode::centralized;
    case Mode::local_only:
        return federation::TrainingMode::local_only;
    default:
        return federation::TrainingMode::federated;
    }
}

log::Level parse_log_level(std::string_view text) {
    if (text == "debug") {
        return log::Level::debug;
    }
    if (text == "info") {
        return log::Level::info;
    }
    if (text == "warn") {
        return log::Level::warn;
    }
    if (text == "error") {
        return log::Level::error;
    }
    if (text == "off") {
        return log::Level::off;
    }
    throw ConfigError("unknown run.log_level '" + std::string(text) + "' (expected debug|info|warn|error|off)");
}

void apply_mode(RunConfig& cfg) {
    switch (cfg.mode) {
    case Mode::fedseq:
    case Mode::centralized:
        cfg.round.lambda_cl = 0.0;
        break;
    case Mode::confedsrs:
        cfg.views.kind = views::GeneratorKind::augment;
        break;
    case Mode::lumos:
    case Mode::local_only:
        if (cfg.views.kind == views::GeneratorKind::augment) {
            throw ConfigError("run.mode = " + std::string(to_string(cfg.mode)) +
                              " needs views.kind = rule or llm (augment is the confedsrs baseline)");
        }
        break;
    }
}

RunConfig read_run_config(const ConfigFile& cfg) {
    check_known_keys(cfg);
    RunConfig rc;
    auto& r = rc.round;
    auto& v = rc.views;

    if (auto s = cfg.get_string("data.clients")) rc.clients_path = *s;
    if (auto s = cfg.get_string("data.items")) rc.items_path = *s;

    if (auto s = cfg.get_string("model.backbone")) rc.backbone = encoder::parse_backbone(*s);
    if (auto x = cfg.get_size("model.dim")) rc.dim = *x;
    if (auto x = cfg.get_size("model.max_len")) rc.max_len = *x;
    if (auto x = cfg.get_double("model.embedding_std")) rc.init.embedding_std = *x;
    if (auto x = cfg.get_double("model.weight_gain")) rc.init.weight_gain = *x;
    if (auto x = cfg.get_double("model.positional_std")) rc.init.positional_std = *x;

    if (auto x = cfg.get_double("federation.client_fraction")) r.client_fraction = *x;
    if (auto x = cfg.get_size("federation.clients_per_round")) {
        r.clients_per_round = *x == 0 ? std::nullopt : std::optional<std::size_t>(*x);
    }
    if (auto x = cfg.get_size("federation.local_epochs")) r.local_epochs = *x;
    if (auto x = cfg.get_size("federation.rounds")) r.rounds = *x;
    if (auto x = cfg.get_double("federation.learning_rate")) r.learning_rate = *x;
    if (auto x = cfg.get_double("federation.weight_decay")) r.weight_decay = *x;
    if (auto x = cfg.get_size("federation.batch_size")) r.batch_size = *x;
    if (auto x = cfg.get_double("federation.clip_norm")) r.clip_norm = *x;
    if (auto x = cfg.get_double("federation.lambda_cl")) r.lambda_cl = *x;
    if (auto x = cfg.get_double("federation.tau")) r.tau = *x;
    if (auto s = cfg.get_string("federation.optimizer")) r.optimizer = federation::parse_optimizer(*s);
    if (auto s = cfg.get_string("federation.loss_positions")) r.loss_positions = federation::parse_loss_positions(*s);
    if (auto s = cfg.get_string("federation.similarity")) r.similarity = triview::parse_similarity(*s);
    if (auto b = cfg.get_bool("federation.use_future")) r.views.future = *b;
    if (auto b = cfg.get_bool("federation.use_paraphrase")) r.views.paraphrase = *b;
    if (auto b = cfg.get_bool("federation.use_counterfactual")) r.views.counterfactual = *b;
    if (auto b = cfg.get_bool("federation.stop_gradient_views")) r.stop_gradient_views = *b;

    if (auto s = cfg.get_string("views.kind")) v.kind = views::parse_generator_kind(*s);
    if (auto x = cfg.get_size("views.future_len")) v.future_len = *x;
    if (auto x = cfg.get_double("views.substitute_prob")) v.substitute_prob = *x;
    if (auto x = cfg.get_double("views.swap_prob")) v.swap_prob = *x;
    if (auto x = cfg.get_double("views.crop_ratio")) v.crop_ratio = *x;
    if (auto x = cfg.get_double("views.mask_prob")) v.mask_prob = *x;
    if (auto s = cfg.get_string("views.cache_path")) v.cache_path = *s;

    if (auto s = cfg.get_string("llm.endpoint")) v.llm.endpoint = *s;
    if (auto x = cfg.get_int("llm.timeout_ms")) v.llm.timeout_ms = static_cast<int>(*x);
    if (auto x = cfg.get_int("llm.max_retries")) v.llm.max_retries = static_cast<int>(*x);
    if (auto x = cfg.get_double("llm.temperature")) v.llm.temperature = *x;
    if (auto x = cfg.get_int("llm.max_tokens")) v.llm.max_tokens = static_cast<int>(*x);
    if (auto x = cfg.get_int("llm.backoff_ms")) v.llm.backoff_ms = static_cast<int>(*x);
    if (auto x = cfg.get_int("llm.parallelism")) v.llm.parallelism = static_cast<int>(*x);
    if (const char* env = std::getenv("FEDSEQ_LLM_ENDPOINT"); env != nullptr && *env != '\0') {
        v.llm.endpoint = env;
    }

    if (auto s = cfg.get_string("run.mode")) rc.mode = parse_mode(*s);
    if (auto s = cfg.get_string("run.output_dir")) rc.output_dir = *s;
    if (auto x = cfg.get_int("run.seed")) r.global_seed = static_cast<std::uint64_t>(*x);
    if (auto x = cfg.get_size("run.eval_every")) r.eval_every = *x;
    if (auto x = cfg.get_size("run.eval_k")) r.eval_k = *x;
    if (auto x = cfg.get_size("run.parallel_clients")) r.parallel_clients = *x;
    if (auto b = cfg.get_bool("run.record_wall_ms")) rc.record_wall_ms = *b;
    if (auto s = cfg.get_string("run.log_level")) {
        parse_log_level(*s);
        rc.log_level = *s;
    }

    if (rc.dim == 0) {
        throw ConfigError("model.dim must be >= 1");
    }
    if (rc.max_len < 2) {
        throw ConfigError("model.max_len must be >= 2");
    }
    if (rc.backbone == encoder::BackboneKind::gru && r.loss_positions == federation::LossPositions::all) {
        throw ConfigError("federation.loss_positions = all requires model.backbone = attention");
    }
    apply_mode(rc);
    federation::validate(rc.round);
    views::validate(rc.views);
    return rc;
}

std::string to_config_text(const RunConfig& c) {
    const auto& r = c.round;
    const auto& v = c.views;
    std::ostringstream o;
    o << "# resolved configuration; re-running with it reproduces this run\n";
    o << "[data]\n";
    o << "clients = " << quote(c.clients_path) << "\n";
    o << "items = " << quote(c.items_path) << "\n";
    o << "\n[model]\n";
    o << "backbone = " << quote(std::string(encoder::to_string(c.backbone))) << "\n";
    o << "dim = " << c.dim << "\n";
    o << "max_len = " << c.max_len << "\n";
    o << "embedding_std = " << num(c.init.embedding_std) << "\n";
    o << "weight_gain = " << num(c.init.weight_gain) << "\n";
    o << "positional_std = " << num(c.init.positional_std) << "\n";
    o << "\n[federation]\n";
    o << "client_fraction = " << num(r.client_fraction) << "\n";
    o << "clients_per_round = " << r.clients_per_round.value_or(0) << "\n";
    o << "local_epochs = " << r.local_epochs << "\n";
    o << "rounds = " << r.rounds << "\n";
    o << "learning_rate = " << num(r.learning_rate) << "\n";
    o << "weight_decay = " << num(r.weight_decay) << "\n";
    o << "batch_size = " << r.batch_size << "\n";
    o << "clip_norm = " << num(r.clip_norm) << "\n";
    o << "lambda_cl = " << num(r.lambda_cl) << "\n";
    o << "tau = " << num(r.tau) << "\n";
    o << "optimizer = " << quote(std::string(federation::to_string(r.optimizer))) << "\n";
    o << "loss_positions = " << quote(std::string(federation::to_string(r.loss_positions))) << "\n";
    o << "similarity = " << quote(std::string(triview::to_string(r.similarity))) << "\n";
    o << "use_future = " << flag(r.views.future) << "\n";
    o << "use_paraphrase = " << flag(r.views.paraphrase) << "\n";
    o << "use_counterfactual = " << flag(r.views.counterfactual) << "\n";
    o << "stop_gradient_views = " << flag(r.stop_gradient_views) << "\n";
    o << "\n[views]\n";
    o << "kind = " << quote(std::string(views::to_string(v.kind))) << "\n";
    o << "future_len = " << v.future_len << "\n";
    o << "substitute_prob = " << num(v.substitute_prob) << "\n";
    o << "swap_prob = " << num(v.swap_prob) << "\n";
    o << "crop_ratio = " << num(v.crop_ratio) << "\n";
    o << "mask_prob = " << num(v.mask_prob) << "\n";
    o << "cache_path = " << quote(v.cache_path) << "\n";
    o << "\n[llm]\n";
    o << "endpoint = " << quote(v.llm.endpoint) << "\n";
    o << "timeout_ms = " << v.llm.timeout_ms << "\n";
    o << "max_retries = " << v.llm.max_retries << "\n";
    o << "temperature = " << num(v.llm.temperature) << "\n";
    o << "max_tokens = " << v.llm.max_tokens << "\n";
    o << "backoff_ms = " << v.llm.backoff_ms << "\n";
    o << "parallelism = " << v.llm.parallelism << "\n";
    o << "\n[run]\n";
    o << "mode = " << quote(std::string(to_string(c.mode))) << "\n";
    o << "output_dir = " << quote(c.output_dir) << "\n";
    o << "seed = " << r.global_seed << "\n";
    o << "eval_every = " << r.eval_every << "\n";
    o << "eval_k = " << r.eval_k << "\n";
    o << "parallel_clients = " << r.parallel_clients << "\n";
    o << "record_wall_ms = " << flag(c.record_wall_ms) << "\n";
    o << "log_level = " << quote(c.log_level) << "\n";
    return o.str();
}

SynthCommandConfig read_synth_config(const ConfigFile& cfg) {
    check_known_keys(cfg);
    SynthCommandConfig sc;
    auto& s = sc.synth;
    if (auto x = cfg.get_size("synth.n_users")) s.n_users = *x;
    if (auto x = cfg.get_size("synth.n_items")) s.n_items = *x;
    if (auto x = cfg.get_size("synth.latent_dim")) s.latent_dim = *x;
    if (auto x = cfg.get_size("synth.n_categories")) s.n_categories = *x;
    if (auto x = cfg.get_size("synth.min_len")) s.min_len = *x;
    if (auto x = cfg.get_size("synth.max_len")) s.max_len = *x;
    if (auto x = cfg.get_double("synth.preference_temperature")) s.preference_temperature = *x;
    if (auto x = cfg.get_double("synth.preference_spread")) s.preference_spread = *x;
    if (auto x = cfg.get_double("synth.drift")) s.drift = *x;
    if (auto x = cfg.get_int("synth.seed")) s.seed = static_cast<std::uint64_t>(*x);
    if (auto str = cfg.get_string("synth.output_dir")) sc.output_dir = *str;
    data::validate(s);
    return sc;
}

PrepareCommandConfig read_prepare_config(const ConfigFile& cfg) {
    check_known_keys(cfg);
    PrepareCommandConfig pc;
    if (auto s = cfg.get_string("prepare.input")) pc.input = *s;
    if (auto s = cfg.get_string("prepare.format")) pc.format = *s;
    if (auto s = cfg.get_string("prepare.meta")) pc.meta = *s;
    if (auto x = cfg.get_size("prepare.min_count")) pc.options.min_count = *x;
    if (auto x = cfg.get_size("prepare.max_len")) pc.options.max_len = *x;
    if (auto x = cfg.get_size("prepare.min_len")) pc.options.min_len = *x;
    if (auto s = cfg.get_string("prepare.output_dir")) pc.output_dir = *s;
    if (pc.input.empty()) {
        throw ConfigError("prepare.input is required");
    }
    if (pc.format != "auto" && pc.format != "jsonl" && pc.format != "csv") {
        throw ConfigError("prepare.format must be auto, jsonl or csv");
    }
    if (pc.options.min_count == 0 || pc.options.max_len < 3) {
        throw ConfigError("prepare.min_count must be >= 1 and prepare.max_len >= 3");
    }
    return pc;
}

} // namespace fsl::cli
