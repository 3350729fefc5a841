#include "deft/selection.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "deft/rng.hpp"

namespace deft {

SplitResult split_70_30(const FeatureMatrix& matrix, std::uint64_t seed,
                        double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ConfigError("train fraction must lie in (0,1)");

    // Canonical per-user row order, independent of matrix row permutation.
    std::map<std::string, std::vector<std::size_t>> by_user;
    for (std::size_t r = 0; r < matrix.n_rows(); ++r)
        by_user[matrix.rows[r].user].push_back(r);

    SplitResult result;
    for (auto& [user, rows] : by_user) {
        std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
            const auto& ra = matrix.rows[a];
            const auto& rb = matrix.rows[b];
            if (ra.device != rb.device) return ra.device < rb.device;
            if (ra.window != rb.window) return ra.window < rb.window;
            return a < b;
        });
        if (rows.size() == 1) {
            result.warnings.push_back("user '" + user +
                                      "' has a single row; kept in train");
            result.train_rows.push_back(rows[0]);
            continue;
        }
        Rng rng(derive_seed(seed, {fnv1a("split"), fnv1a(user)}));
        rng.shuffle(rows);
        std::size_t n_train = static_cast<std::size_t>(
            std::ceil(train_fraction * static_cast<double>(rows.size())));
        if (n_train >= rows.size()) n_train = rows.size() - 1;  // min one test row
        if (n_train == 0) n_train = 1;
        for (std::size_t i = 0; i < rows.size(); ++i)
            (i < n_train ? result.train_rows : result.test_rows).push_back(rows[i]);
    }
    std::sort(result.train_rows.begin(), result.train_rows.end());
    std::sort(result.test_rows.begin(), result.test_rows.end());
    return result;
}

SelectionPolicy SelectionPolicy::parse(std::string_view token) {
    auto colon = token.find(':');
    std::string head(token.substr(0, colon));
    std::string tail = colon == std::string_view::npos
                           ? std::string()
                           : std::string(token.substr(colon + 1));
    for (auto& c : head) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    SelectionPolicy policy;
    try {
        if (head == "topk") {
            policy.mode = Mode::TopK;
            policy.k = std::stoi(tail);
        } else if (head == "mass" || head == "cumulative" || head == "cumulativemass") {
            policy.mode = Mode::CumulativeMass;
            policy.mass = tail.empty() ? 0.95 : std::stod(tail);
        } else {
            throw ConfigError("unknown selection policy '" + std::string(token) + "'");
        }
    } catch (const std::invalid_argument&) {
        throw ConfigError("bad selection policy argument '" + tail + "'");
    } catch (const std::out_of_range&) {
        throw ConfigError("bad selection policy argument '" + tail + "'");
    }
    return policy;
}

std::string SelectionPolicy::to_string() const {
    if (mode == Mode::TopK) return "topk:" + std::to_string(k);
    char buf[32];
    std::snprintf(buf, sizeof buf, "mass:%g", mass);
    return buf;
}

ImportanceReport rf_importance(const FeatureMatrix& train, const RfConfig& config,
                               RfModel* model_out) {
    // Canonical row order so bootstrap draws are permutation-invariant.
    std::vector<std::size_t> order(train.n_rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& ra = train.rows[a];
        const auto& rb = train.rows[b];
        if (ra.user != rb.user) return ra.user < rb.user;
        if (ra.device != rb.device) return ra.device < rb.device;
        if (ra.window != rb.window) return ra.window < rb.window;
        return a < b;
    });

    auto users = train.users();
    if (users.size() < 2)
        throw DegenerateLabelsError("feature selection needs at least two users");
    std::map<std::string, int> user_index;
    for (std::size_t i = 0; i < users.size(); ++i)
        user_index[users[i]] = static_cast<int>(i);

    DenseMatrix X(train.n_rows(), train.n_features());
    std::vector<int> y(train.n_rows());
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto& row = train.rows[order[i]];
        y[i] = user_index[row.user];
        for (std::size_t j = 0; j < row.values.size(); ++j) {
            if (!row.values[j])
                throw SchemaError("rf_importance requires an imputed matrix");
            X.at(i, j) = *row.values[j];
        }
    }

    RfModel model = train_rf(X, y, config, train.schema.names());

    ImportanceReport report;
    if (model_out) *model_out = model;
    report.seed = config.seed;
    report.rf = config;
    report.train_rows = train.n_rows();
    report.features.reserve(train.n_features());
    for (std::size_t j = 0; j < train.n_features(); ++j)
        report.features.push_back({train.schema.name(j), train.schema.family(j),
                                   model.importances[j], false});
    return report;
}

std::vector<std::string> select_features(ImportanceReport& report,
                                         const SelectionPolicy& policy) {
    const std::size_t d = report.features.size();
    if (d == 0) throw ConfigError("empty importance report");
    if (policy.mode == SelectionPolicy::Mode::TopK) {
        if (policy.k < 1 || static_cast<std::size_t>(policy.k) > d)
            throw ConfigError("topk must lie in [1, " + std::to_string(d) + "]");
    } else {
        if (!(policy.mass > 0.0 && policy.mass <= 1.0))
            throw ConfigError("cumulative mass must lie in (0, 1]");
    }

    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return report.features[a].importance > report.features[b].importance;
    });

    std::size_t cut = 0;
    if (policy.mode == SelectionPolicy::Mode::TopK) {
        cut = static_cast<std::size_t>(policy.k);
    } else {
        double mass = 0.0;
        while (cut < d) {
            mass += report.features[order[cut]].importance;
            ++cut;
            if (mass >= policy.mass) break;
        }
    }

    for (auto& f : report.features) f.selected = false;
    for (std::size_t i = 0; i < cut; ++i) report.features[order[i]].selected = true;

    report.policy = policy;
    report.family_counts = {{"TEMP", 0}, {"NC", 0}, {"CKP", 0}, {"DEFT", 0}};
    std::vector<std::string> names;
    for (const auto& f : report.features) {
        if (f.selected) {
            names.push_back(f.name);
            report.family_counts[family_name(f.family)] += 1;
        }
    }
    return names;
}

SelectionRun run_selection(const FeatureMatrix& matrix, std::uint64_t seed,
                           const RfConfig& rf, const SelectionPolicy& policy) {
    auto split = split_70_30(matrix, seed);

    FeatureMatrix train;
    train.schema = matrix.schema;
    for (std::size_t r : split.train_rows) train.rows.push_back(matrix.rows[r]);
    auto imputed = impute(train);  // means fitted on the 70% side only

    RfConfig config = rf;
    config.seed = seed;

    SelectionRun run;
    RfModel model;
    run.report = rf_importance(imputed.matrix, config, &model);
    run.report.warnings = split.warnings;
    run.report.test_rows = split.test_rows.size();
    run.selected = select_features(run.report, policy);

    if (!split.test_rows.empty()) {
        auto users = imputed.matrix.users();
        std::map<std::string, int> user_index;
        for (std::size_t i = 0; i < users.size(); ++i)
            user_index[users[i]] = static_cast<int>(i);

        DenseMatrix test = to_dense_imputed(matrix, split.test_rows, imputed.means);
        std::size_t correct = 0, scored = 0;
        for (std::size_t i = 0; i < split.test_rows.size(); ++i) {
            auto it = user_index.find(matrix.rows[split.test_rows[i]].user);
            if (it == user_index.end()) continue;  // user unseen in train
            ++scored;
            correct += model.predict(test.row(i)) == it->second;
        }
        if (scored > 0)
            run.report.test_accuracy =
                static_cast<double>(correct) / static_cast<double>(scored);
    }
    return run;
}

std::vector<std::string> ImportanceReport::selected_names() const {
    std::vector<std::string> names;
    for (const auto& f : features)
        if (f.selected) names.push_back(f.name);
    return names;
}

nlohmann::ordered_json ImportanceReport::to_json() const {
    nlohmann::ordered_json doc;
    doc["seed"] = seed;
    doc["policy"] = policy.to_string();
    doc["rf"] = {{"n_trees", rf.n_trees}, {"max_depth", rf.max_depth}};
    doc["train_rows"] = train_rows;
    doc["test_rows"] = test_rows;
    if (test_accuracy >= 0.0) doc["test_accuracy"] = test_accuracy;
    doc["features"] = nlohmann::ordered_json::array();
    for (const auto& f : features) {
        doc["features"].push_back({{"name", f.name},
                                   {"family", family_name(f.family)},
                                   {"importance", f.importance},
                                   {"selected", f.selected}});
    }
    doc["family_counts"] = family_counts;
    doc["warnings"] = warnings;
    return doc;
}

ImportanceReport ImportanceReport::from_json(const nlohmann::json& doc) {
    try {
        ImportanceReport report;
        report.seed = doc.value("seed", std::uint64_t{0});
        report.policy = SelectionPolicy::parse(doc.at("policy").get<std::string>());
        if (doc.contains("rf")) {
            report.rf.n_trees = doc["rf"].value("n_trees", report.rf.n_trees);
            report.rf.max_depth = doc["rf"].value("max_depth", report.rf.max_depth);
        }
        report.train_rows = doc.value("train_rows", std::size_t{0});
        report.test_rows = doc.value("test_rows", std::size_t{0});
        report.test_accuracy = doc.value("test_accuracy", -1.0);
        for (const auto& f : doc.at("features")) {
            report.features.push_back({f.at("name").get<std::string>(),
                                       parse_family(f.at("family").get<std::string>()),
                                       f.at("importance").get<double>(),
                                       f.at("selected").get<bool>()});
        }
        if (doc.contains("family_counts"))
            report.family_counts =
                doc["family_counts"].get<std::map<std::string, int>>();
        if (doc.contains("warnings"))
            report.warnings = doc["warnings"].get<std::vector<std::string>>();
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("bad importance report: ") + e.what());
    }
}

}  // namespace deft
