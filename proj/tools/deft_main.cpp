#include <cstring>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "deft/cli.hpp"
#include "deft/version.hpp"

using deft::RunConfig;

namespace {

// The config file seeds the defaults, so it is applied before CLI11 sees
// the remaining flags; flags always win.
RunConfig preload_config(int argc, char** argv) {
    RunConfig config;
    for (int i = 1; i < argc; ++i) {
        std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) {
            deft::apply_config_file(config, argv[i + 1]);
        } else if (arg.rfind("--config=", 0) == 0) {
            deft::apply_config_file(config, arg.substr(std::strlen("--config=")));
        }
    }
    return config;
}

void add_common(CLI::App* cmd, RunConfig& config) {
    cmd->add_option("--config", "JSON config file; flags override its values")
        ->type_name("FILE");
    cmd->add_option("--seed", config.seed, "master seed for all stochastic stages");
    cmd->add_option("--out", config.out, "output directory");
    cmd->add_option("--threads", config.threads, "worker threads (0 = auto)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"keystroke-dynamics authentication toolkit"};
    app.set_version_flag("--version", deft::kVersion);
    app.require_subcommand(1);

    RunConfig config;
    try {
        config = preload_config(argc, argv);
    } catch (const deft::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    auto* extract = app.add_subcommand(
        "extract", "parse raw keystroke logs into per-device feature matrices");
    add_common(extract, config);
    extract->add_option("--dataset", config.dataset,
                        "dataset file or directory");
    extract->add_option("--format", config.format, "bbmas | buffalo | jsonl");
    extract->add_option("--device", config.device,
                        "keep only this device (desktop | mobile | tablet)");
    extract->add_option("--window-len", config.window_len, "keystrokes per sample");
    extract->add_option("--max-flight-ms", config.max_flight_ms,
                        "digraph flight-time filter bound");
    extract->add_option("--layout", config.layout_file, "keyboard layout JSON override");

    auto* select = app.add_subcommand(
        "select", "rank features with a multi-class random forest and select");
    add_common(select, config);
    select->add_option("--features", config.features_csv, "feature matrix CSV");
    select->add_option("--policy", config.policy, "topk:<k> or mass:<p>");
    select->add_option("--rf-trees", config.rf_trees, "forest size");
    select->add_option("--rf-depth", config.rf_depth, "tree depth limit");

    auto* evaluate = app.add_subcommand(
        "evaluate", "per-user authentication protocol with cross-validation");
    add_common(evaluate, config);
    evaluate->add_option("--features", config.features_csv, "feature matrix CSV");
    evaluate->add_option("--selection", config.selection_file,
                         "selection report JSON from `select`");
    evaluate->add_option("--families", config.families,
                         "feature families to keep (TEMP,NC,CKP,DEFT)")
        ->delimiter(',');
    evaluate->add_flag("--all-features", config.all_features,
                       "use the full schema without selection");
    evaluate->add_option("--folds", config.folds, "cross-validation folds");
    evaluate->add_option("--gbm-trees", config.gbm_trees, "boosting rounds");
    evaluate->add_option("--gbm-depth", config.gbm_depth, "boosted tree depth");
    evaluate->add_option("--gbm-eta", config.gbm_eta, "learning rate");
    evaluate->add_option("--gbm-lambda", config.gbm_lambda, "L2 leaf regularizer");
    evaluate->add_option("--smote-k", config.smote_k, "SMOTE neighbor count");

    auto* synth = app.add_subcommand(
        "synth", "generate a synthetic typist cohort as JSON lines");
    add_common(synth, config);
    synth->add_option("--users", config.synth_users, "cohort size");
    synth->add_option("--windows", config.synth_windows, "windows per user");
    synth->add_option("--signal", config.signal, "distinct | null");

    CLI11_PARSE(app, argc, argv);

    try {
        if (extract->parsed()) return deft::cmd_extract(config);
        if (select->parsed()) return deft::cmd_select(config);
        if (evaluate->parsed()) return deft::cmd_evaluate(config);
        if (synth->parsed()) return deft::cmd_synth(config);
    } catch (const deft::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
