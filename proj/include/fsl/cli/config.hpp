#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fsl/common/log.hpp"
#include "fsl/data/data.hpp"
#include "fsl/encoder/params.hpp"
#include "fsl/federation/federation.hpp"
#include "fsl/views/generator.hpp"

namespace fsl::cli {

// Flat TOML subset: [section] headers, key = value lines, # comments.
// Values are quoted strings, numbers, true/false, or bare words (read as
// strings). Keys are stored as "section.key".
class ConfigFile {
  public:
    struct Value {
        std::string text; // unescaped for quoted strings, verbatim otherwise
        bool quoted = false;
        std::string origin; // "file:line" or "--set"
    };

    static ConfigFile parse(std::string_view text, const std::string& source = "<config>");
    static ConfigFile load(const std::filesystem::path& path);

    // Applies one "section.key=value" override.
    void set_override(std::string_view assignment);
    void set(const std::string& key, Value value) { values_[key] = std::move(value); }

    [[nodiscard]] const std::map<std::string, Value>& values() const noexcept { return values_; }
    [[nodiscard]] const Value* find(const std::string& key) const;

    [[nodiscard]] std::optional<std::string> get_string(const std::string& key) const;
    [[nodiscard]] std::optional<double> get_double(const std::string& key) const;
    [[nodiscard]] std::optional<std::int64_t> get_int(const std::string& key) const;
    [[nodiscard]] std::optional<std::size_t> get_size(const std::string& key) const;
    [[nodiscard]] std::optional<bool> get_bool(const std::string& key) const;

  private:
    std::map<std::string, Value> values_;
};

// Every key the commands understand. Unknown keys are configuration errors.
const std::vector<std::string>& known_keys();
void check_known_keys(const ConfigFile& cfg);

enum class Mode { lumos, fedseq, confedsrs, centralized, local_only };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);

struct RunConfig {
    // [data]
    std::string clients_path;
    std::string items_path;
    // [model]
    encoder::BackboneKind backbone = encoder::BackboneKind::attention;
    std::size_t dim = 32;
    std::size_t max_len = encoder::kMaxSeqLen;
    encoder::InitConfig init;
    // [federation] and the evaluation cadence from [run]
    federation::RoundConfig round;
    // [views] and [llm]
    views::GeneratorConfig views;
    // [run]
    Mode mode = Mode::lumos;
    std::string output_dir = "runs/default";
    bool record_wall_ms = false;
    std::string log_level = "warn";
};

// Reads a run configuration, applies FEDSEQ_LLM_ENDPOINT and the mode rules,
// and validates the result.
RunConfig read_run_config(const ConfigFile& cfg);

// Mode rules: fedseq and centralized train without the contrastive term,
// confedsrs uses the augmentation views, lumos and local_only need rule or
// llm views.
void apply_mode(RunConfig& cfg);

federation::TrainingMode training_mode(Mode mode);

// Snapshot that reads back into the same RunConfig.
std::string to_config_text(const RunConfig& cfg);

struct SynthCommandConfig {
    data::SyntheticConfig synth;
    std::string output_dir = "data/synthetic";
};
SynthCommandConfig read_synth_config(const ConfigFile& cfg);

struct PrepareCommandConfig {
    std::string input;
    std::string format = "auto"; // auto | jsonl | csv
    std::string meta;            // optional item metadata JSONL
    data::PrepareOptions options;
    std::string output_dir = "data/prepared";
};
PrepareCommandConfig read_prepare_config(const ConfigFile& cfg);

log::Level parse_log_level(std::string_view text);

} // namespace fsl::cli
