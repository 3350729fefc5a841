#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "deft/features.hpp"
#include "deft/forest.hpp"

namespace deft {

struct SplitResult {
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
    std::vector<std::string> warnings;
};

/// Per-user stratified split: ceil(0.7 * n) rows of each user go to train,
/// except that a user with at least two rows always contributes at least
/// one test row. Users are shuffled with seeds derived from (seed, user),
/// over each user's rows in (device, window) order, so the outcome does
/// not depend on row permutation. A single-row user goes entirely to train
/// with a recorded warning.
SplitResult split_70_30(const FeatureMatrix& matrix, std::uint64_t seed,
                        double train_fraction = 0.7);

struct SelectionPolicy {
    enum class Mode { TopK, CumulativeMass };
    Mode mode = Mode::CumulativeMass;
    int k = 0;            // TopK
    double mass = 0.95;   // CumulativeMass

    /// Parses "topk:40" or "mass:0.95".
    static SelectionPolicy parse(std::string_view token);
    std::string to_string() const;
};

struct FeatureImportance {
    std::string name;
    Family family = Family::TEMP;
    double importance = 0.0;
    bool selected = false;
};

struct ImportanceReport {
    std::uint64_t seed = 0;
    RfConfig rf;
    SelectionPolicy policy;
    std::vector<FeatureImportance> features;  // schema order
    std::map<std::string, int> family_counts; // selected features per family
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;
    double test_accuracy = -1.0;  // multi-class RF accuracy on the 30% side
    std::vector<std::string> warnings;

    std::vector<std::string> selected_names() const;

    nlohmann::ordered_json to_json() const;
    static ImportanceReport from_json(const nlohmann::json& doc);
};

/// Gini (mean decrease in impurity) feature importances from a multi-class
/// random forest over user labels. The training matrix must be imputed.
/// Rows are canonically ordered by (user, device, window) before training,
/// so the report does not depend on row permutation. When model_out is
/// given it receives the trained forest.
ImportanceReport rf_importance(const FeatureMatrix& train, const RfConfig& config,
                               RfModel* model_out = nullptr);

/// Applies a policy to the report: marks selected flags, fills the
/// per-family counts and returns the selected names in schema order.
/// TopK takes the k highest importances (ties by schema order);
/// CumulativeMass takes the smallest importance-sorted prefix reaching the
/// requested mass.
std::vector<std::string> select_features(ImportanceReport& report,
                                         const SelectionPolicy& policy);

struct SelectionRun {
    ImportanceReport report;
    std::vector<std::string> selected;
};

/// The whole selection stage on a raw (possibly Missing-bearing) matrix:
/// 70/30 per-user split, imputation fitted on the 70% side, multi-class RF
/// importances, policy application, plus RF accuracy on the held-out 30%
/// as a sanity figure.
SelectionRun run_selection(const FeatureMatrix& matrix, std::uint64_t seed,
                           const RfConfig& rf, const SelectionPolicy& policy);

}  // namespace deft
