#include "deft/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "deft/features.hpp"
#include "deft/ingest.hpp"
#include "deft/keyboard.hpp"
#include "deft/parallel.hpp"
#include "deft/protocol.hpp"
#include "deft/selection.hpp"
#include "deft/synth.hpp"
#include "deft/version.hpp"

namespace deft {

namespace {

int effective_threads(const RunConfig& config) {
    return config.threads > 0 ? config.threads : default_thread_count();
}

void ensure_out_dir(const RunConfig& config) {
    std::error_code ec;
    std::filesystem::create_directories(config.out, ec);
    if (ec) throw IoError("cannot create output directory " + config.out.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
}

KeyboardLayout load_layout(const RunConfig& config) {
    if (config.layout_file.empty()) return KeyboardLayout::default_qwerty();
    return KeyboardLayout::from_json_file(config.layout_file);
}

// One parseable input stream: a file for the CSV formats, a (user, device)
// event group for JSON lines.
struct EventStream {
    std::string user;
    Device device = Device::Unknown;
    std::vector<RawEvent> events;
};

std::vector<std::filesystem::path> sorted_files(const std::filesystem::path& root) {
    std::vector<std::filesystem::path> files;
    if (std::filesystem::is_regular_file(root)) {
        files.push_back(root);
        return files;
    }
    if (!std::filesystem::is_directory(root))
        throw IoError("dataset path " + root.string() + " does not exist");
    for (const auto& entry : std::filesystem::recursive_directory_iterator(root))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    return files;
}

std::vector<EventStream> load_streams(const RunConfig& config, LogFormat format,
                                      std::size_t& file_count) {
    auto files = sorted_files(config.dataset);
    file_count = files.size();
    if (files.empty()) throw NoDataError("no input files under " + config.dataset.string());

    std::vector<EventStream> streams;
    if (format == LogFormat::JsonLines) {
        std::map<std::pair<std::string, Device>, std::vector<RawEvent>> groups;
        for (const auto& file : files) {
            std::ifstream in(file);
            if (!in) throw IoError("cannot open " + file.string());
            for (auto& ev : parse_events(in, format))
                groups[{ev.user, ev.device}].push_back(std::move(ev));
        }
        for (auto& [key, events] : groups)
            streams.push_back({key.first, key.second, std::move(events)});
        return streams;
    }

    for (const auto& file : files) {
        ParseHints hints;
        hints.user = file.has_parent_path() ? file.parent_path().filename().string()
                                            : "unknown";
        hints.device = format == LogFormat::BbmasCsv ? parse_device(file.stem().string())
                                                     : Device::Desktop;
        std::ifstream in(file);
        if (!in) throw IoError("cannot open " + file.string());
        try {
            streams.push_back({hints.user, hints.device, parse_events(in, format, hints)});
        } catch (const ParseError& e) {
            throw ParseError(e.line(), file.string() + ": " + e.what());
        }
    }
    return streams;
}

}  // namespace

void apply_config_json(RunConfig& config, const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigError("config file must hold a JSON object");
    for (const auto& [key, value] : doc.items()) {
        try {
            if (key == "seed") config.seed = value.get<std::uint64_t>();
            else if (key == "out") config.out = value.get<std::string>();
            else if (key == "threads") config.threads = value.get<int>();
            else if (key == "dataset") config.dataset = value.get<std::string>();
            else if (key == "format") config.format = value.get<std::string>();
            else if (key == "device") config.device = value.get<std::string>();
            else if (key == "window_len") config.window_len = value.get<int>();
            else if (key == "max_flight_ms") config.max_flight_ms = value.get<std::int64_t>();
            else if (key == "layout") config.layout_file = value.get<std::string>();
            else if (key == "features") config.features_csv = value.get<std::string>();
            else if (key == "policy") config.policy = value.get<std::string>();
            else if (key == "rf_trees") config.rf_trees = value.get<int>();
            else if (key == "rf_depth") config.rf_depth = value.get<int>();
            else if (key == "selection") config.selection_file = value.get<std::string>();
            else if (key == "families") config.families = value.get<std::vector<std::string>>();
            else if (key == "all_features") config.all_features = value.get<bool>();
            else if (key == "folds") config.folds = value.get<int>();
            else if (key == "gbm_trees") config.gbm_trees = value.get<int>();
            else if (key == "gbm_depth") config.gbm_depth = value.get<int>();
            else if (key == "gbm_eta") config.gbm_eta = value.get<double>();
            else if (key == "gbm_lambda") config.gbm_lambda = value.get<double>();
            else if (key == "smote_k") config.smote_k = value.get<int>();
            else if (key == "users") config.synth_users = value.get<int>();
            else if (key == "windows") config.synth_windows = value.get<int>();
            else if (key == "signal") config.signal = value.get<std::string>();
            else throw ConfigError("unknown config key '" + key + "'");
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("bad value for config key '" + key + "': " + e.what());
        }
    }
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad JSON in " + path.string() + ": " + e.what());
    }
    apply_config_json(config, doc);
}

nlohmann::ordered_json config_echo(const RunConfig& config) {
    nlohmann::ordered_json doc;
    doc["seed"] = config.seed;
    doc["out"] = config.out.string();
    doc["threads"] = config.threads;
    doc["dataset"] = config.dataset.string();
    doc["format"] = config.format;
    doc["device"] = config.device;
    doc["window_len"] = config.window_len;
    doc["max_flight_ms"] = config.max_flight_ms;
    doc["layout"] = config.layout_file.string();
    doc["features"] = config.features_csv.string();
    doc["policy"] = config.policy;
    doc["rf_trees"] = config.rf_trees;
    doc["rf_depth"] = config.rf_depth;
    doc["selection"] = config.selection_file.string();
    doc["families"] = config.families;
    doc["all_features"] = config.all_features;
    doc["folds"] = config.folds;
    doc["gbm_trees"] = config.gbm_trees;
    doc["gbm_depth"] = config.gbm_depth;
    doc["gbm_eta"] = config.gbm_eta;
    doc["gbm_lambda"] = config.gbm_lambda;
    doc["smote_k"] = config.smote_k;
    doc["users"] = config.synth_users;
    doc["windows"] = config.synth_windows;
    doc["signal"] = config.signal;
    return doc;
}

void write_manifest(const RunConfig& config, const std::string& command) {
    nlohmann::ordered_json doc;
    doc["command"] = command;
    doc["version"] = kVersion;
    doc["config"] = config_echo(config);
    write_text(config.out / ("manifest_" + command + ".json"), doc.dump(2) + "\n");
}

int cmd_extract(const RunConfig& config) {
    if (config.dataset.empty()) throw ConfigError("--dataset is required");
    LogFormat format = parse_log_format(config.format);
    KeyboardLayout layout = load_layout(config);
    ensure_out_dir(config);

    std::size_t file_count = 0;
    auto streams = load_streams(config, format, file_count);

    std::optional<Device> device_filter;
    if (!config.device.empty()) {
        Device d = parse_device(config.device);
        if (d == Device::Unknown)
            throw ConfigError("unknown device filter '" + config.device + "'");
        device_filter = d;
    }

    struct DeviceStats {
        std::set<std::string> users;
        std::size_t events = 0, keystrokes = 0, dropped_downs = 0, orphan_ups = 0;
        std::size_t windows = 0, digraphs_kept = 0, digraphs_filtered = 0;
        std::vector<SampleWindow> window_list;
        std::map<std::string, int> next_window;  // per-user running index
    };
    std::map<Device, DeviceStats> per_device;
    std::size_t total_events = 0;

    for (auto& stream : streams) {
        if (device_filter && stream.device != *device_filter) continue;
        total_events += stream.events.size();
        auto& stats = per_device[stream.device];
        stats.users.insert(stream.user);
        stats.events += stream.events.size();

        auto paired = pair_events(std::move(stream.events));
        stats.keystrokes += paired.keystrokes.size();
        stats.dropped_downs += paired.dropped_downs;
        stats.orphan_ups += paired.orphan_ups;

        auto windows = segment_samples(paired.keystrokes, stream.user, stream.device,
                                       static_cast<std::size_t>(config.window_len));
        int& next = stats.next_window[stream.user];
        for (auto& window : windows) {
            window.index = next++;
            auto scan = scan_digraphs(window, config.max_flight_ms);
            stats.digraphs_kept += scan.records.size();
            stats.digraphs_filtered += scan.dropped;
            stats.window_list.push_back(std::move(window));
        }
        stats.windows = stats.window_list.size();
    }
    if (total_events == 0) throw NoDataError("no events parsed from " + config.dataset.string());

    nlohmann::ordered_json summary;
    summary["files"] = file_count;
    summary["events"] = total_events;
    summary["devices"] = nlohmann::ordered_json::object();

    std::size_t written = 0;
    for (auto& [device, stats] : per_device) {
        if (stats.window_list.empty()) continue;
        auto matrix = build_matrix(stats.window_list, layout, config.max_flight_ms);
        auto path = config.out / ("features_" + device_name(device) + ".csv");
        write_matrix_csv(path, matrix);
        ++written;

        summary["devices"][device_name(device)] = {
            {"users", stats.users.size()},
            {"events", stats.events},
            {"keystrokes", stats.keystrokes},
            {"dropped_downs", stats.dropped_downs},
            {"orphan_ups", stats.orphan_ups},
            {"windows", stats.windows},
            {"digraphs_kept", stats.digraphs_kept},
            {"digraphs_filtered", stats.digraphs_filtered},
            {"features_csv", path.filename().string()}};
        std::cout << "extract: " << device_name(device) << ": " << stats.windows
                  << " windows from " << stats.users.size() << " users -> "
                  << path.string() << "\n";
    }
    if (written == 0)
        throw NoDataError("no complete windows of " + std::to_string(config.window_len) +
                          " keystrokes in " + config.dataset.string());

    write_text(config.out / "ingest_summary.json", summary.dump(2) + "\n");
    write_manifest(config, "extract");
    return 0;
}

int cmd_select(const RunConfig& config) {
    if (config.features_csv.empty()) throw ConfigError("--features is required");
    ensure_out_dir(config);
    auto matrix = read_matrix_csv(config.features_csv);

    RfConfig rf;
    rf.n_trees = config.rf_trees;
    rf.max_depth = config.rf_depth;
    rf.seed = config.seed;
    rf.n_threads = effective_threads(config);
    SelectionPolicy policy = SelectionPolicy::parse(config.policy);

    auto run = run_selection(matrix, config.seed, rf, policy);

    write_text(config.out / "selection.json", run.report.to_json().dump(2) + "\n");
    write_manifest(config, "select");

    std::cout << "selected features by family (" << policy.to_string() << "):\n";
    std::size_t total = 0;
    for (const char* fam : {"DEFT", "CKP", "TEMP", "NC"}) {
        int count = run.report.family_counts.at(fam);
        total += static_cast<std::size_t>(count);
        std::cout << "  " << fam << "\t" << count << "\n";
    }
    std::cout << "  total\t" << total << "\n";
    if (run.report.test_accuracy >= 0.0)
        std::cout << "multi-class RF accuracy on the 30% split: "
                  << run.report.test_accuracy << "\n";
    return 0;
}

int cmd_evaluate(const RunConfig& config) {
    if (config.features_csv.empty()) throw ConfigError("--features is required");
    int sources = (!config.selection_file.empty()) + (!config.families.empty()) +
                  (config.all_features ? 1 : 0);
    if (sources != 1)
        throw ConfigError(
            "choose exactly one of --selection, --families or --all-features");

    ensure_out_dir(config);
    auto matrix = read_matrix_csv(config.features_csv);

    FeatureSchema schema = matrix.schema;
    if (!config.selection_file.empty()) {
        std::ifstream in(config.selection_file);
        if (!in) throw IoError("cannot open " + config.selection_file.string());
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError(std::string("bad selection JSON: ") + e.what());
        }
        auto report = ImportanceReport::from_json(doc);
        auto names = report.selected_names();
        if (names.empty()) throw ConfigError("selection file marks no features selected");
        schema = matrix.schema.subset_by_names(names);
    } else if (!config.families.empty()) {
        std::set<Family> keep;
        for (const auto& token : config.families) keep.insert(parse_family(token));
        schema = matrix.schema.subset_by_families(keep);
        if (schema.size() == 0) throw ConfigError("family filter matches no features");
    }

    auto subset = matrix.select_columns(schema);

    ProtocolConfig protocol;
    protocol.folds = config.folds;
    protocol.seed = config.seed;
    protocol.gbm.n_trees = config.gbm_trees;
    protocol.gbm.max_depth = config.gbm_depth;
    protocol.gbm.learning_rate = config.gbm_eta;
    protocol.gbm.l2_lambda = config.gbm_lambda;
    protocol.smote_k = config.smote_k;
    protocol.n_threads = effective_threads(config);

    auto report = run_protocol(subset, protocol);
    if (!config.selection_file.empty())
        report.notes.push_back(
            "features were selected on a separate 70/30 split; cross-validation "
            "runs on the full matrix");

    write_text(config.out / "eval_report.json", report.to_json().dump(2) + "\n");
    {
        std::ofstream out(config.out / "summary.csv", std::ios::binary);
        if (!out) throw IoError("cannot write summary.csv");
        report.write_summary_csv(out);
    }
    {
        std::ofstream out(config.out / "roc.csv", std::ios::binary);
        if (!out) throw IoError("cannot write roc.csv");
        report.write_roc_csv(out);
    }
    write_manifest(config, "evaluate");

    std::cout << "evaluate: " << report.model_name << " on "
              << device_name(report.device) << ": " << report.users.size()
              << " users, accuracy " << report.accuracy.mean << ", EER "
              << report.eer.mean << ", F1 " << report.f1.mean << ", AUC-ROC "
              << report.auc.mean << "\n";
    for (const auto& s : report.skipped)
        std::cout << "  skipped " << s.user << ": " << s.reason << "\n";
    return 0;
}

int cmd_synth(const RunConfig& config) {
    CohortSpec spec;
    spec.n_users = config.synth_users;
    spec.windows_per_user = config.synth_windows;
    spec.seed = config.seed;
    spec.signal = parse_signal_mode(config.signal);

    ensure_out_dir(config);
    auto path = config.out / "cohort.jsonl";
    write_text(path, generate_cohort_jsonl(spec));
    write_manifest(config, "synth");
    std::cout << "synth: " << spec.n_users << " users x " << spec.windows_per_user
              << " windows (" << signal_mode_name(spec.signal) << ") -> "
              << path.string() << "\n";
    return 0;
}

}  // namespace deft
