#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "deft/errors.hpp"

namespace deft {

/// One flat configuration for all subcommands; flags not used by a command
/// are ignored by it. Defaults reproduce the protocol constants (100
/// keystrokes per window, 5000 ms flight filter, 5 folds).
struct RunConfig {
    // shared
    std::uint64_t seed = 42;
    std::filesystem::path out = "out";
    int threads = 0;  // 0 = auto

    // extract
    std::filesystem::path dataset;
    std::string format = "jsonl";
    std::string device;  // empty = all devices
    int window_len = 100;
    std::int64_t max_flight_ms = 5000;
    std::filesystem::path layout_file;  // optional layout override

    // select
    std::filesystem::path features_csv;
    std::string policy = "mass:0.95";
    int rf_trees = 200;
    int rf_depth = 12;

    // evaluate
    std::filesystem::path selection_file;
    std::vector<std::string> families;
    bool all_features = false;
    int folds = 5;
    int gbm_trees = 100;
    int gbm_depth = 4;
    double gbm_eta = 0.1;
    double gbm_lambda = 1.0;
    int smote_k = 5;

    // synth
    int synth_users = 10;
    int synth_windows = 40;
    std::string signal = "distinct";
};

/// Applies a JSON config file onto defaults; CLI flags override afterwards.
/// Keys mirror the long flag names with dashes replaced by underscores.
void apply_config_file(RunConfig& config, const std::filesystem::path& path);
void apply_config_json(RunConfig& config, const nlohmann::json& doc);

/// Echo of the effective configuration, written next to every command's
/// outputs as manifest_<command>.json.
nlohmann::ordered_json config_echo(const RunConfig& config);
void write_manifest(const RunConfig& config, const std::string& command);

int cmd_extract(const RunConfig& config);
int cmd_select(const RunConfig& config);
int cmd_evaluate(const RunConfig& config);
int cmd_synth(const RunConfig& config);

}  // namespace deft
