#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"

#include "deft/cli.hpp"
#include "deft/features.hpp"

using namespace deft;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;

    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("deft-test-" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("config file seeds defaults; unknown keys are rejected") {
    RunConfig config;
    apply_config_json(config, nlohmann::json{{"seed", 123},
                                             {"folds", 7},
                                             {"policy", "topk:12"},
                                             {"signal", "null"}});
    CHECK(config.seed == 123);
    CHECK(config.folds == 7);
    CHECK(config.policy == "topk:12");
    CHECK(config.signal == "null");

    CHECK_THROWS_AS(apply_config_json(config, nlohmann::json{{"bogus", 1}}),
                    ConfigError);
    CHECK_THROWS_AS(apply_config_json(config, nlohmann::json{{"folds", "many"}}),
                    ConfigError);
    CHECK_THROWS_AS(apply_config_json(config, nlohmann::json::array()), ConfigError);
}

TEST_CASE("command validation errors") {
    TempDir tmp("validation");
    RunConfig config;
    config.out = tmp.path / "out";
    CHECK_THROWS_AS(cmd_extract(config), ConfigError);  // no dataset

    config.dataset = tmp.path / "empty";
    fs::create_directories(config.dataset);
    CHECK_THROWS_AS(cmd_extract(config), NoDataError);

    RunConfig eval;
    eval.out = tmp.path / "out";
    CHECK_THROWS_AS(cmd_evaluate(eval), ConfigError);  // no features csv

    eval.features_csv = tmp.path / "f.csv";
    CHECK_THROWS_AS(cmd_evaluate(eval), ConfigError);  // no feature source chosen

    eval.all_features = true;
    eval.families = {"TEMP"};
    CHECK_THROWS_AS(cmd_evaluate(eval), ConfigError);  // two sources chosen
}

TEST_CASE("synth/extract/evaluate round through the command layer") {
    TempDir tmp("roundtrip");
    RunConfig config;
    config.seed = 31;
    config.out = tmp.path / "synth";
    config.synth_users = 3;
    config.synth_windows = 10;
    config.signal = "distinct";
    CHECK(cmd_synth(config) == 0);
    CHECK(fs::exists(config.out / "cohort.jsonl"));
    CHECK(fs::exists(config.out / "manifest_synth.json"));

    RunConfig extract;
    extract.dataset = config.out / "cohort.jsonl";
    extract.format = "jsonl";
    extract.out = tmp.path / "features";
    CHECK(cmd_extract(extract) == 0);
    auto csv = extract.out / "features_desktop.csv";
    REQUIRE(fs::exists(csv));
    auto matrix = read_matrix_csv(csv);
    CHECK(matrix.n_rows() == 30);
    CHECK(matrix.n_features() == 69);
    CHECK(fs::exists(extract.out / "ingest_summary.json"));

    RunConfig evaluate;
    evaluate.features_csv = csv;
    evaluate.families = {"TEMP", "DEFT"};
    evaluate.out = tmp.path / "eval";
    evaluate.seed = 31;
    evaluate.gbm_trees = 30;
    CHECK(cmd_evaluate(evaluate) == 0);
    CHECK(fs::exists(evaluate.out / "eval_report.json"));
    CHECK(fs::exists(evaluate.out / "summary.csv"));
    CHECK(fs::exists(evaluate.out / "roc.csv"));

    auto summary = slurp(evaluate.out / "summary.csv");
    CHECK(summary.find("desktop,TEMP+DEFT,") != std::string::npos);

    auto manifest = nlohmann::json::parse(slurp(evaluate.out / "manifest_evaluate.json"));
    CHECK(manifest.at("command") == "evaluate");
    CHECK(manifest.at("config").at("seed") == 31);
}

TEST_CASE("device filter rejects unknown tokens") {
    TempDir tmp("device");
    RunConfig config;
    config.seed = 3;
    config.out = tmp.path / "synth";
    config.synth_users = 2;
    config.synth_windows = 10;
    CHECK(cmd_synth(config) == 0);

    RunConfig extract;
    extract.dataset = config.out / "cohort.jsonl";
    extract.out = tmp.path / "f";
    extract.device = "typewriter";
    CHECK_THROWS_AS(cmd_extract(extract), ConfigError);
    extract.device = "desktop";
    CHECK(cmd_extract(extract) == 0);
}

TEST_SUITE_END();
