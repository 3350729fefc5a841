#include "deft/protocol.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <ostream>
#include <set>

#include "deft/parallel.hpp"
#include "deft/rng.hpp"
#include "deft/smote.hpp"

namespace deft {

namespace {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

constexpr std::size_t kRocGridSize = 101;  // FPR grid 0.00, 0.01, ..., 1.00

}  // namespace

std::vector<int> stratified_kfold(std::span<const int> labels, int k,
                                  std::uint64_t seed) {
    if (k < 2) throw ConfigError("fold count must be at least 2");
    std::set<int> classes(labels.begin(), labels.end());
    std::vector<int> folds(labels.size(), -1);
    for (int cls : classes) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == cls) rows.push_back(i);
        if (rows.size() < static_cast<std::size_t>(k))
            throw StratifyError("class " + std::to_string(cls) + " has " +
                                std::to_string(rows.size()) + " rows, fewer than " +
                                std::to_string(k) + " folds");
        Rng rng(derive_seed(seed, {fnv1a("kfold"), static_cast<std::uint64_t>(cls)}));
        rng.shuffle(rows);
        for (std::size_t i = 0; i < rows.size(); ++i)
            folds[rows[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    }
    return folds;
}

Stats mean_std(std::span<const double> values) {
    Stats s;
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() >= 2) {
        double ss = 0.0;
        for (double v : values) {
            double d = v - s.mean;
            ss += d * d;
        }
        s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

FoldModel fit_fold(const FeatureMatrix& matrix,
                   std::span<const std::size_t> train_rows,
                   std::span<const int> labels, const ProtocolConfig& config,
                   std::uint64_t fold_seed) {
    FoldModel fold;
    fold.impute_means = feature_means(matrix, train_rows);
    DenseMatrix train = to_dense_imputed(matrix, train_rows, fold.impute_means);

    std::vector<std::vector<double>> genuine;
    std::size_t imposters = 0;
    for (std::size_t i = 0; i < train_rows.size(); ++i) {
        if (labels[train_rows[i]] != 0) {
            auto row = train.row(i);
            genuine.emplace_back(row.begin(), row.end());
        } else {
            ++imposters;
        }
    }
    fold.train_genuine = genuine.size();
    fold.train_imposter = imposters;

    std::vector<std::vector<double>> synthetic;
    if (imposters > genuine.size()) {
        SmoteConfig smote_config;
        smote_config.k = config.smote_k;
        smote_config.target = imposters;
        smote_config.seed = derive_seed(fold_seed, {fnv1a("smote")});
        synthetic = smote(genuine, smote_config).rows;
    }
    fold.train_synthetic = synthetic.size();

    DenseMatrix X(train.rows + synthetic.size(), train.cols);
    std::vector<int> y(X.rows, 0);
    for (std::size_t i = 0; i < train.rows; ++i) {
        std::copy(train.row(i).begin(), train.row(i).end(), X.row(i).begin());
        y[i] = labels[train_rows[i]] != 0 ? 1 : 0;
    }
    for (std::size_t s = 0; s < synthetic.size(); ++s) {
        std::copy(synthetic[s].begin(), synthetic[s].end(),
                  X.row(train.rows + s).begin());
        y[train.rows + s] = 1;
    }

    GbmConfig gbm_config = config.gbm;
    gbm_config.seed = derive_seed(fold_seed, {fnv1a("gbm")});
    fold.model = train_gbm(X, y, gbm_config, matrix.schema.names());
    return fold;
}

namespace {

struct UserOutcome {
    bool skipped = false;
    std::string skip_reason;
    UserEvalResult result;
    std::vector<RocCurve> curves;  // one per fold
};

UserOutcome evaluate_user(const FeatureMatrix& matrix, const std::string& user,
                          const ProtocolConfig& config) {
    UserOutcome outcome;
    outcome.result.user = user;

    std::vector<int> labels(matrix.n_rows());
    std::size_t genuine = 0;
    for (std::size_t i = 0; i < matrix.n_rows(); ++i) {
        labels[i] = matrix.rows[i].user == user ? 1 : 0;
        genuine += labels[i];
    }
    std::size_t imposters = matrix.n_rows() - genuine;
    if (genuine < static_cast<std::size_t>(config.folds) ||
        imposters < static_cast<std::size_t>(config.folds)) {
        outcome.skipped = true;
        outcome.skip_reason = "needs at least " + std::to_string(config.folds) +
                              " genuine and imposter rows, has " +
                              std::to_string(genuine) + "/" + std::to_string(imposters);
        return outcome;
    }

    std::uint64_t user_seed = derive_seed(config.seed, {fnv1a("user"), fnv1a(user)});
    std::vector<int> folds = stratified_kfold(labels, config.folds, user_seed);

    for (int f = 0; f < config.folds; ++f) {
        std::vector<std::size_t> train_rows, test_rows;
        for (std::size_t i = 0; i < labels.size(); ++i)
            (folds[i] == f ? test_rows : train_rows).push_back(i);

        std::uint64_t fold_seed =
            derive_seed(user_seed, {fnv1a("fold"), static_cast<std::uint64_t>(f)});
        FoldModel fold = fit_fold(matrix, train_rows, labels, config, fold_seed);

        DenseMatrix test = to_dense_imputed(matrix, test_rows, fold.impute_means);
        std::vector<double> scores(test_rows.size());
        std::vector<int> test_labels(test_rows.size());
        for (std::size_t i = 0; i < test_rows.size(); ++i) {
            scores[i] = fold.model.predict_proba(test.row(i));
            test_labels[i] = labels[test_rows[i]];
        }

        FoldMetrics metrics;
        metrics.train_genuine = fold.train_genuine;
        metrics.train_synthetic = fold.train_synthetic;
        metrics.train_imposter = fold.train_imposter;
        for (int label : test_labels)
            (label != 0 ? metrics.test_genuine : metrics.test_imposter)++;

        RocCurve curve = roc_curve(scores, test_labels);
        metrics.auc = auc(curve);
        metrics.eer = eer(curve);
        PointMetrics point = point_metrics(scores, test_labels, config.threshold);
        metrics.accuracy = point.accuracy;
        metrics.f1 = point.f1;

        outcome.result.folds.push_back(metrics);
        outcome.curves.push_back(std::move(curve));
    }

    std::vector<double> acc, eers, f1s, aucs;
    for (const auto& m : outcome.result.folds) {
        acc.push_back(m.accuracy);
        eers.push_back(m.eer);
        f1s.push_back(m.f1);
        aucs.push_back(m.auc);
    }
    outcome.result.accuracy = mean_std(acc);
    outcome.result.eer = mean_std(eers);
    outcome.result.f1 = mean_std(f1s);
    outcome.result.auc = mean_std(aucs);
    return outcome;
}

std::string families_label(const FeatureSchema& schema) {
    std::set<Family> present(schema.families().begin(), schema.families().end());
    std::string label;
    for (Family f : {Family::TEMP, Family::NC, Family::CKP, Family::DEFT}) {
        if (present.count(f)) {
            if (!label.empty()) label += "+";
            label += family_name(f);
        }
    }
    return label;
}

}  // namespace

EvalReport run_protocol(const FeatureMatrix& matrix, const ProtocolConfig& config) {
    auto users = matrix.users();
    if (users.size() < 2)
        throw DegenerateLabelsError("the protocol needs at least two users");
    for (std::size_t i = 1; i < matrix.n_rows(); ++i)
        if (matrix.rows[i].device != matrix.rows[0].device)
            throw ConfigError("the protocol evaluates one device at a time");

    EvalReport report;
    report.device = matrix.n_rows() ? matrix.rows[0].device : Device::Unknown;
    report.model_name = families_label(matrix.schema);
    report.folds = config.folds;
    report.seed = config.seed;

    ProtocolConfig user_config = config;
    user_config.gbm.n_threads = 1;  // parallelism is across users

    std::vector<UserOutcome> outcomes(users.size());
    parallel_for(users.size(), config.n_threads, [&](std::size_t u) {
        outcomes[u] = evaluate_user(matrix, users[u], user_config);
    });

    std::vector<const RocCurve*> curves;
    std::vector<double> acc, eers, f1s, aucs;
    for (auto& outcome : outcomes) {
        if (outcome.skipped) {
            report.skipped.push_back({outcome.result.user, outcome.skip_reason});
            continue;
        }
        acc.push_back(outcome.result.accuracy.mean);
        eers.push_back(outcome.result.eer.mean);
        f1s.push_back(outcome.result.f1.mean);
        aucs.push_back(outcome.result.auc.mean);
        for (const auto& curve : outcome.curves) curves.push_back(&curve);
        report.users.push_back(std::move(outcome.result));
    }
    if (report.users.empty())
        throw DegenerateLabelsError("every user was skipped; nothing to evaluate");

    report.accuracy = mean_std(acc);
    report.eer = mean_std(eers);
    report.f1 = mean_std(f1s);
    report.auc = mean_std(aucs);

    // Vertical ROC averaging over all user-fold curves on a fixed FPR grid.
    report.roc.reserve(kRocGridSize);
    std::vector<double> tprs(curves.size());
    for (std::size_t g = 0; g < kRocGridSize; ++g) {
        double fpr = static_cast<double>(g) / static_cast<double>(kRocGridSize - 1);
        for (std::size_t c = 0; c < curves.size(); ++c)
            tprs[c] = tpr_at_fpr(*curves[c], fpr);
        Stats s = mean_std(tprs);
        report.roc.push_back({fpr, s.mean, s.stddev});
    }
    return report;
}

nlohmann::ordered_json EvalReport::to_json() const {
    nlohmann::ordered_json doc;
    doc["device"] = device_name(device);
    doc["model"] = model_name;
    doc["folds"] = folds;
    doc["seed"] = seed;
    doc["aggregate"] = {
        {"users", users.size()},
        {"accuracy", accuracy.mean}, {"accuracy_std", accuracy.stddev},
        {"eer", eer.mean},           {"eer_std", eer.stddev},
        {"f1", f1.mean},             {"f1_std", f1.stddev},
        {"auc_roc", auc.mean},       {"auc_roc_std", auc.stddev}};
    doc["users"] = nlohmann::ordered_json::array();
    for (const auto& user : users) {
        nlohmann::ordered_json u;
        u["user"] = user.user;
        u["accuracy"] = user.accuracy.mean;
        u["accuracy_std"] = user.accuracy.stddev;
        u["eer"] = user.eer.mean;
        u["eer_std"] = user.eer.stddev;
        u["f1"] = user.f1.mean;
        u["f1_std"] = user.f1.stddev;
        u["auc_roc"] = user.auc.mean;
        u["auc_roc_std"] = user.auc.stddev;
        u["folds"] = nlohmann::ordered_json::array();
        for (const auto& m : user.folds) {
            u["folds"].push_back({{"accuracy", m.accuracy},
                                  {"eer", m.eer},
                                  {"f1", m.f1},
                                  {"auc_roc", m.auc},
                                  {"train_genuine", m.train_genuine},
                                  {"train_synthetic", m.train_synthetic},
                                  {"train_imposter", m.train_imposter},
                                  {"test_genuine", m.test_genuine},
                                  {"test_imposter", m.test_imposter}});
        }
        doc["users"].push_back(std::move(u));
    }
    doc["skipped"] = nlohmann::ordered_json::array();
    for (const auto& s : skipped)
        doc["skipped"].push_back({{"user", s.user}, {"reason", s.reason}});
    doc["notes"] = notes;
    doc["roc"] = nlohmann::ordered_json::array();
    for (const auto& p : roc)
        doc["roc"].push_back(
            {{"fpr", p.fpr}, {"tpr_mean", p.tpr_mean}, {"tpr_std", p.tpr_std}});
    return doc;
}

void EvalReport::write_summary_csv(std::ostream& out) const {
    out << "device,model,accuracy,accuracy_std,eer,eer_std,f1,f1_std,auc_roc,auc_roc_std\n";
    out << device_name(device) << ',' << model_name << ','
        << format_double(accuracy.mean) << ',' << format_double(accuracy.stddev) << ','
        << format_double(eer.mean) << ',' << format_double(eer.stddev) << ','
        << format_double(f1.mean) << ',' << format_double(f1.stddev) << ','
        << format_double(auc.mean) << ',' << format_double(auc.stddev) << '\n';
}

void EvalReport::write_roc_csv(std::ostream& out) const {
    out << "fpr,tpr_mean,tpr_std\n";
    for (const auto& p : roc)
        out << format_double(p.fpr) << ',' << format_double(p.tpr_mean) << ','
            << format_double(p.tpr_std) << '\n';
}

}  // namespace deft
