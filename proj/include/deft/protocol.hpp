#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "deft/features.hpp"
#include "deft/gbm.hpp"
#include "deft/metrics.hpp"

namespace deft {

/// Per-class round-robin fold assignment after a seeded shuffle; per-fold
/// class counts differ by at most one within each class. A class with
/// fewer than k rows raises StratifyError.
std::vector<int> stratified_kfold(std::span<const int> labels, int k = 5,
                                  std::uint64_t seed = 0);

struct FoldMetrics {
    double accuracy = 0.0;
    double eer = 0.0;
    double f1 = 0.0;
    double auc = 0.0;
    std::size_t train_genuine = 0;    // before oversampling
    std::size_t train_synthetic = 0;  // SMOTE rows added
    std::size_t train_imposter = 0;
    std::size_t test_genuine = 0;
    std::size_t test_imposter = 0;
};

struct Stats {
    double mean = 0.0;
    double stddev = 0.0;
};

Stats mean_std(std::span<const double> values);

struct UserEvalResult {
    std::string user;
    std::vector<FoldMetrics> folds;
    Stats accuracy, eer, f1, auc;
};

struct SkippedUser {
    std::string user;
    std::string reason;
};

struct RocSummaryPoint {
    double fpr = 0.0;
    double tpr_mean = 0.0;
    double tpr_std = 0.0;
};

struct EvalReport {
    Device device = Device::Unknown;
    std::string model_name;  // feature families joined, e.g. TEMP+NC+CKP+DEFT
    int folds = 5;
    std::uint64_t seed = 0;
    std::vector<UserEvalResult> users;
    std::vector<SkippedUser> skipped;
    Stats accuracy, eer, f1, auc;  // unweighted over users
    std::vector<RocSummaryPoint> roc;
    std::vector<std::string> notes;  // protocol caveats, e.g. selection split

    nlohmann::ordered_json to_json() const;
    void write_summary_csv(std::ostream& out) const;
    void write_roc_csv(std::ostream& out) const;
};

struct ProtocolConfig {
    int folds = 5;
    std::uint64_t seed = 0;
    GbmConfig gbm;
    int smote_k = 5;
    double threshold = 0.5;
    int n_threads = 1;  // users evaluate in parallel
};

/// State fitted from one training fold only: imputation means and the
/// boosted-tree model trained on the imputed, SMOTE-balanced fold.
struct FoldModel {
    std::vector<double> impute_means;
    GbmModel model;
    std::size_t train_genuine = 0;
    std::size_t train_synthetic = 0;
    std::size_t train_imposter = 0;
};

/// Fits fold-local state from the given training rows. Test rows never
/// reach this function, which is what keeps imputation, SMOTE and training
/// free of test leakage.
FoldModel fit_fold(const FeatureMatrix& matrix,
                   std::span<const std::size_t> train_rows,
                   std::span<const int> labels, const ProtocolConfig& config,
                   std::uint64_t fold_seed);

/// The per-user authentication protocol: for every user, label rows
/// genuine/imposter, run stratified k-fold CV with fold-local imputation,
/// SMOTE balancing of the genuine class and a boosted-tree classifier,
/// and aggregate accuracy, EER, F1 and AUC-ROC per user and over users.
/// Users whose class counts cannot support the fold count are skipped with
/// a recorded reason. Deterministic for a fixed seed.
EvalReport run_protocol(const FeatureMatrix& matrix, const ProtocolConfig& config);

}  // namespace deft
