#include "deft/gbm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "deft/parallel.hpp"
#include "deft/rng.hpp"

namespace deft {

double sigmoid(double x) {
    if (x >= 0.0) {
        double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

double log_loss(std::span<const double> p, std::span<const int> y) {
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double q = std::clamp(p[i], 1e-15, 1.0 - 1e-15);
        total += y[i] != 0 ? -std::log(q) : -std::log(1.0 - q);
    }
    return p.empty() ? 0.0 : total / static_cast<double>(p.size());
}

double GbmTree::predict(std::span<const double> row) const {
    int node = 0;
    while (!nodes[node].is_leaf()) {
        const GbmNode& n = nodes[node];
        node = row[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
    }
    return nodes[node].value;
}

double GbmModel::predict_margin(std::span<const double> row) const {
    return predict_margin(row, trees.size());
}

double GbmModel::predict_margin(std::span<const double> row,
                                std::size_t n_trees_used) const {
    double sum = 0.0;
    std::size_t limit = std::min(n_trees_used, trees.size());
    for (std::size_t t = 0; t < limit; ++t) sum += trees[t].predict(row);
    return base_score + learning_rate * sum;
}

double GbmModel::predict_proba(std::span<const double> row) const {
    if (!feature_names.empty() && row.size() != feature_names.size())
        throw SchemaError("row has " + std::to_string(row.size()) +
                          " features, model expects " +
                          std::to_string(feature_names.size()));
    return sigmoid(predict_margin(row));
}

namespace {

struct SplitCandidate {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

struct GbmBuilder {
    const DenseMatrix& X;
    std::span<const double> grad;
    std::span<const double> hess;
    double lambda;
    int max_depth;
    int n_threads;

    std::vector<GbmNode> nodes;
    // scratch, one per feature when parallel
    std::vector<SplitCandidate> per_feature;

    int build(std::vector<std::size_t>& rows, int depth) {
        double g_sum = 0.0, h_sum = 0.0;
        for (std::size_t r : rows) {
            g_sum += grad[r];
            h_sum += hess[r];
        }
        int index = static_cast<int>(nodes.size());
        nodes.push_back({});
        nodes[index].value = -g_sum / (h_sum + lambda);
        if (depth >= max_depth || rows.size() < 2) return index;

        SplitCandidate best = find_split(rows, g_sum, h_sum);
        if (best.feature < 0) return index;

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
        int l = build(left, depth + 1);
        int r = build(right, depth + 1);
        nodes[index].left = l;
        nodes[index].right = r;
        return index;
    }

    SplitCandidate find_split(const std::vector<std::size_t>& rows, double g_sum,
                              double h_sum) {
        const double parent_score = g_sum * g_sum / (h_sum + lambda);
        per_feature.assign(X.cols, SplitCandidate{});
        parallel_for(X.cols, n_threads, [&](std::size_t f) {
            per_feature[f] = best_for_feature(rows, f, g_sum, h_sum, parent_score);
        });
        SplitCandidate best;
        for (std::size_t f = 0; f < X.cols; ++f) {
            if (per_feature[f].feature >= 0 && per_feature[f].gain > best.gain)
                best = per_feature[f];
        }
        if (best.gain <= 1e-12) best.feature = -1;
        return best;
    }

    SplitCandidate best_for_feature(const std::vector<std::size_t>& rows,
                                    std::size_t feature, double g_sum, double h_sum,
                                    double parent_score) const {
        struct Entry {
            double x, g, h;
        };
        std::vector<Entry> entries;
        entries.reserve(rows.size());
        for (std::size_t r : rows)
            entries.push_back({X.at(r, feature), grad[r], hess[r]});
        std::sort(entries.begin(), entries.end(),
                  [](const Entry& a, const Entry& b) { return a.x < b.x; });

        SplitCandidate best;
        double gl = 0.0, hl = 0.0;
        for (std::size_t i = 1; i < entries.size(); ++i) {
            gl += entries[i - 1].g;
            hl += entries[i - 1].h;
            if (entries[i].x == entries[i - 1].x) continue;
            double gr = g_sum - gl;
            double hr = h_sum - hl;
            double gain = 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) -
                                 parent_score);
            if (gain > best.gain) {
                double thr = 0.5 * (entries[i - 1].x + entries[i].x);
                if (thr <= entries[i - 1].x) thr = entries[i].x;
                best.gain = gain;
                best.feature = static_cast<int>(feature);
                best.threshold = thr;
            }
        }
        return best;
    }
};

void to_json_node(const std::vector<GbmNode>& nodes, int index,
                  nlohmann::ordered_json& out) {
    const GbmNode& n = nodes[static_cast<std::size_t>(index)];
    if (n.is_leaf()) {
        out["leaf"] = n.value;
        return;
    }
    out["feature"] = n.feature;
    out["threshold"] = n.threshold;
    out["left"] = nlohmann::ordered_json::object();
    out["right"] = nlohmann::ordered_json::object();
    to_json_node(nodes, n.left, out["left"]);
    to_json_node(nodes, n.right, out["right"]);
}

int from_json_node(const nlohmann::json& doc, std::vector<GbmNode>& nodes) {
    int index = static_cast<int>(nodes.size());
    nodes.push_back({});
    if (doc.contains("leaf")) {
        nodes[index].value = doc.at("leaf").get<double>();
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

}  // namespace

GbmModel train_gbm(const DenseMatrix& X, std::span<const int> y,
                   const GbmConfig& config, std::vector<std::string> feature_names) {
    if (X.rows != y.size()) throw ConfigError("X and y differ in length");
    if (X.rows == 0) throw ConfigError("empty training set");
    if (!feature_names.empty() && feature_names.size() != X.cols)
        throw SchemaError("feature name count does not match X columns");

    std::size_t positives = 0;
    for (int v : y) positives += (v != 0);
    if (positives == 0 || positives == y.size())
        throw DegenerateLabelsError("GBM training needs both classes present");

    GbmModel model;
    model.learning_rate = config.learning_rate;
    model.l2_lambda = config.l2_lambda;
    model.feature_names = std::move(feature_names);
    double prior = static_cast<double>(positives) / static_cast<double>(y.size());
    model.base_score = std::log(prior / (1.0 - prior));

    std::vector<double> margin(X.rows, model.base_score);
    std::vector<double> grad(X.rows), hess(X.rows);
    std::vector<std::size_t> all_rows(X.rows);

    for (int round = 0; round < config.n_trees; ++round) {
        for (std::size_t i = 0; i < X.rows; ++i) {
            double p = sigmoid(margin[i]);
            grad[i] = p - (y[i] != 0 ? 1.0 : 0.0);
            hess[i] = p * (1.0 - p);
        }
        GbmBuilder builder{X,
                           grad,
                           hess,
                           config.l2_lambda,
                           config.max_depth,
                           config.n_threads,
                           {},
                           {}};
        std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});
        std::vector<std::size_t> rows = all_rows;
        builder.build(rows, 0);

        GbmTree tree{std::move(builder.nodes)};
        for (std::size_t i = 0; i < X.rows; ++i)
            margin[i] += config.learning_rate * tree.predict(X.row(i));
        model.trees.push_back(std::move(tree));
    }
    return model;
}

nlohmann::ordered_json GbmModel::to_json() const {
    nlohmann::ordered_json doc;
    doc["format"] = "deft-model";
    doc["version"] = 1;
    doc["kind"] = "gbm";
    doc["feature_names"] = feature_names;
    doc["schema_hash"] = schema_hash(feature_names);
    doc["base_score"] = base_score;
    doc["learning_rate"] = learning_rate;
    doc["l2_lambda"] = l2_lambda;
    doc["trees"] = nlohmann::ordered_json::array();
    for (const auto& tree : trees) {
        nlohmann::ordered_json node = nlohmann::ordered_json::object();
        to_json_node(tree.nodes, 0, node);
        doc["trees"].push_back(std::move(node));
    }
    return doc;
}

GbmModel GbmModel::from_json(const nlohmann::json& doc) {
    try {
        if (doc.value("format", std::string()) != "deft-model" ||
            doc.value("kind", std::string()) != "gbm")
            throw SchemaError("not a gbm model document");
        if (doc.value("version", 0) != 1)
            throw SchemaError("unsupported model version");
        GbmModel model;
        model.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
        if (doc.at("schema_hash").get<std::string>() != schema_hash(model.feature_names))
            throw SchemaError("schema hash mismatch in model document");
        model.base_score = doc.at("base_score").get<double>();
        model.learning_rate = doc.at("learning_rate").get<double>();
        model.l2_lambda = doc.at("l2_lambda").get<double>();
        for (const auto& tree_doc : doc.at("trees")) {
            GbmTree tree;
            from_json_node(tree_doc, tree.nodes);
            model.trees.push_back(std::move(tree));
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("bad model document: ") + e.what());
    }
}

}  // namespace deft
