#include "deft/forest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "deft/parallel.hpp"
#include "deft/rng.hpp"

namespace deft {

namespace {

struct SplitCandidate {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

struct RfTreeBuilder {
    const DenseMatrix& X;
    std::span<const int> y;
    int n_classes;
    int max_depth;
    std::size_t m_try;
    Rng& rng;
    double n_root;

    std::vector<RfNode> nodes;
    std::vector<double> importance;  // raw impurity decrease, one per feature
    std::vector<std::size_t> feature_pool;

    static double gini_from_sumsq(double sumsq, double n) {
        return 1.0 - sumsq / (n * n);
    }

    int build(std::vector<std::size_t>& rows, int depth) {
        std::vector<double> counts(static_cast<std::size_t>(n_classes), 0.0);
        for (std::size_t r : rows) counts[static_cast<std::size_t>(y[r])] += 1.0;
        const double n = static_cast<double>(rows.size());
        double sumsq = 0.0;
        bool pure = false;
        for (double c : counts) {
            sumsq += c * c;
            if (c == n) pure = true;
        }

        int index = static_cast<int>(nodes.size());
        nodes.push_back({});
        nodes[index].dist = counts;
        for (double& c : nodes[index].dist) c /= n;

        if (depth >= max_depth || rows.size() < 2 || pure) return index;

        double parent_impurity = gini_from_sumsq(sumsq, n);
        SplitCandidate best = find_split(rows, counts, parent_impurity);
        if (best.feature < 0) return index;

        importance[static_cast<std::size_t>(best.feature)] +=
            (n / n_root) * best.gain;

        std::vector<std::size_t> left, right;
        left.reserve(rows.size());
        right.reserve(rows.size());
        for (std::size_t r : rows)
            (X.at(r, static_cast<std::size_t>(best.feature)) < best.threshold ? left
                                                                              : right)
                .push_back(r);
        rows.clear();
        rows.shrink_to_fit();

        nodes[index].feature = best.feature;
        nodes[index].threshold = best.threshold;
        nodes[index].dist.clear();
        int l = build(left, depth + 1);
        int r = build(right, depth + 1);
        nodes[index].left = l;
        nodes[index].right = r;
        return index;
    }

    SplitCandidate find_split(const std::vector<std::size_t>& rows,
                              const std::vector<double>& counts,
                              double parent_impurity) {
        // Partial Fisher-Yates draw of m_try distinct features, evaluated
        // in sorted order so ties resolve by feature index.
        std::iota(feature_pool.begin(), feature_pool.end(), std::size_t{0});
        std::size_t m = std::min(m_try, feature_pool.size());
        for (std::size_t i = 0; i < m; ++i) {
            std::size_t j = i + rng.uniform_int(feature_pool.size() - i);
            std::swap(feature_pool[i], feature_pool[j]);
        }
        std::vector<std::size_t> candidates(feature_pool.begin(),
                                            feature_pool.begin() + m);
        std::sort(candidates.begin(), candidates.end());

        SplitCandidate best;
        const double n = static_cast<double>(rows.size());

        struct Entry {
            double x;
            int label;
        };
        std::vector<Entry> entries;
        std::vector<double> left_counts(static_cast<std::size_t>(n_classes));

        for (std::size_t feature : candidates) {
            entries.clear();
            entries.reserve(rows.size());
            for (std::size_t r : rows) entries.push_back({X.at(r, feature), y[r]});
            std::sort(entries.begin(), entries.end(),
                      [](const Entry& a, const Entry& b) { return a.x < b.x; });
            if (entries.front().x == entries.back().x) continue;

            std::fill(left_counts.begin(), left_counts.end(), 0.0);
            double left_sumsq = 0.0;
            double right_sumsq = 0.0;
            for (double c : counts) right_sumsq += c * c;
            std::vector<double> right_counts = counts;

            for (std::size_t i = 1; i < entries.size(); ++i) {
                auto cls = static_cast<std::size_t>(entries[i - 1].label);
                left_sumsq += 2.0 * left_counts[cls] + 1.0;
                left_counts[cls] += 1.0;
                right_sumsq -= 2.0 * right_counts[cls] - 1.0;
                right_counts[cls] -= 1.0;
                if (entries[i].x == entries[i - 1].x) continue;
                double nl = static_cast<double>(i);
                double nr = n - nl;
                double child =
                    (nl / n) * gini_from_sumsq(left_sumsq, nl) +
                    (nr / n) * gini_from_sumsq(right_sumsq, nr);
                double gain = parent_impurity - child;
                if (gain > best.gain) {
                    double thr = 0.5 * (entries[i - 1].x + entries[i].x);
                    if (thr <= entries[i - 1].x) thr = entries[i].x;
                    best.gain = gain;
                    best.feature = static_cast<int>(feature);
                    best.threshold = thr;
                }
            }
        }
        if (best.gain <= 1e-12) best.feature = -1;
        return best;
    }
};

std::string schema_hash(const std::vector<std::string>& names) {
    std::string joined;
    for (const auto& n : names) {
        joined += n;
        joined.push_back('\n');
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(joined)));
    return std::string(buf);
}

void to_json_node(const std::vector<RfNode>& nodes, int index,
                  nlohmann::ordered_json& out) {
    const RfNode& n = nodes[static_cast<std::size_t>(index)];
    if (n.is_leaf()) {
        out["dist"] = n.dist;
        return;
    }
    out["feature"] = n.feature;
    out["threshold"] = n.threshold;
    out["left"] = nlohmann::ordered_json::object();
    out["right"] = nlohmann::ordered_json::object();
    to_json_node(nodes, n.left, out["left"]);
    to_json_node(nodes, n.right, out["right"]);
}

int from_json_node(const nlohmann::json& doc, std::vector<RfNode>& nodes) {
    int index = static_cast<int>(nodes.size());
    nodes.push_back({});
    if (doc.contains("dist")) {
        nodes[index].dist = doc.at("dist").get<std::vector<double>>();
        return index;
    }
    nodes[index].feature = doc.at("feature").get<int>();
    nodes[index].threshold = doc.at("threshold").get<double>();
    int l = from_json_node(doc.at("left"), nodes);
    int r = from_json_node(doc.at("right"), nodes);
    nodes[index].left = l;
    nodes[index].right = r;
    return index;
}

}  // namespace

const std::vector<double>& RfTree::predict_dist(std::span<const double> row) const {
    int node = 0;
    while (!nodes[node].is_leaf()) {
        const RfNode& n = nodes[node];
        node = row[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
    }
    return nodes[node].dist;
}

std::vector<double> RfModel::predict_proba(std::span<const double> row) const {
    std::vector<double> probs(static_cast<std::size_t>(n_classes), 0.0);
    for (const auto& tree : trees) {
        const auto& dist = tree.predict_dist(row);
        for (std::size_t c = 0; c < probs.size(); ++c) probs[c] += dist[c];
    }
    if (!trees.empty())
        for (double& p : probs) p /= static_cast<double>(trees.size());
    return probs;
}

int RfModel::predict(std::span<const double> row) const {
    auto probs = predict_proba(row);
    return static_cast<int>(std::max_element(probs.begin(), probs.end()) -
                            probs.begin());
}

RfModel train_rf(const DenseMatrix& X, std::span<const int> y, const RfConfig& config,
                 std::vector<std::string> feature_names) {
    if (X.rows != y.size()) throw ConfigError("X and y differ in length");
    if (X.rows == 0) throw ConfigError("empty training set");
    if (!feature_names.empty() && feature_names.size() != X.cols)
        throw SchemaError("feature name count does not match X columns");

    std::set<int> classes(y.begin(), y.end());
    if (classes.size() < 2)
        throw DegenerateLabelsError("random forest needs at least two classes");
    int n_classes = *classes.rbegin() + 1;

    RfModel model;
    model.n_classes = n_classes;
    model.feature_names = std::move(feature_names);
    model.trees.resize(static_cast<std::size_t>(config.n_trees));
    std::vector<std::vector<double>> per_tree_importance(
        static_cast<std::size_t>(config.n_trees));

    std::size_t m_try = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(X.cols)))));

    parallel_for(static_cast<std::size_t>(config.n_trees), config.n_threads,
                 [&](std::size_t t) {
                     Rng rng(derive_seed(config.seed, {fnv1a("tree"), t}));
                     std::vector<std::size_t> rows(X.rows);
                     for (auto& r : rows) r = rng.uniform_int(X.rows);

                     RfTreeBuilder builder{X,
                                           y,
                                           n_classes,
                                           config.max_depth,
                                           m_try,
                                           rng,
                                           static_cast<double>(X.rows),
                                           {},
                                           {},
                                           {}};
                     builder.importance.assign(X.cols, 0.0);
                     builder.feature_pool.assign(X.cols, 0);
                     builder.build(rows, 0);
                     model.trees[t].nodes = std::move(builder.nodes);
                     per_tree_importance[t] = std::move(builder.importance);
                 });

    model.importances.assign(X.cols, 0.0);
    for (const auto& imp : per_tree_importance)
        for (std::size_t f = 0; f < X.cols; ++f) model.importances[f] += imp[f];
    double total = std::accumulate(model.importances.begin(), model.importances.end(), 0.0);
    if (total > 0.0)
        for (double& v : model.importances) v /= total;
    return model;
}

nlohmann::ordered_json RfModel::to_json() const {
    nlohmann::ordered_json doc;
    doc["format"] = "deft-model";
    doc["version"] = 1;
    doc["kind"] = "rf";
    doc["n_classes"] = n_classes;
    doc["feature_names"] = feature_names;
    doc["schema_hash"] = schema_hash(feature_names);
    doc["importances"] = importances;
    doc["trees"] = nlohmann::ordered_json::array();
    for (const auto& tree : trees) {
        nlohmann::ordered_json node = nlohmann::ordered_json::object();
        to_json_node(tree.nodes, 0, node);
        doc["trees"].push_back(std::move(node));
    }
    return doc;
}

RfModel RfModel::from_json(const nlohmann::json& doc) {
    try {
        if (doc.value("format", std::string()) != "deft-model" ||
            doc.value("kind", std::string()) != "rf")
            throw SchemaError("not an rf model document");
        if (doc.value("version", 0) != 1)
            throw SchemaError("unsupported model version");
        RfModel model;
        model.n_classes = doc.at("n_classes").get<int>();
        model.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
        if (doc.at("schema_hash").get<std::string>() != schema_hash(model.feature_names))
            throw SchemaError("schema hash mismatch in model document");
        model.importances = doc.at("importances").get<std::vector<double>>();
        for (const auto& tree_doc : doc.at("trees")) {
            RfTree tree;
            from_json_node(tree_doc, tree.nodes);
            model.trees.push_back(std::move(tree));
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("bad model document: ") + e.what());
    }
}

}  // namespace deft
