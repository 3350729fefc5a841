#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "deft/dense.hpp"
#include "deft/errors.hpp"

namespace deft {

struct GbmConfig {
    int n_trees = 100;
    int max_depth = 4;
    double learning_rate = 0.1;
    double l2_lambda = 1.0;
    std::uint64_t seed = 0;
    int n_threads = 1;  // candidate features are searched in parallel
};

struct GbmNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf log-odds increment, -G/(H+lambda)

    bool is_leaf() const { return feature < 0; }
};

struct GbmTree {
    std::vector<GbmNode> nodes;

    double predict(std::span<const double> row) const;
};

/// Binary logistic boosted-tree model. Prediction is
/// sigmoid(base_score + learning_rate * sum of tree outputs).
class GbmModel {
public:
    double base_score = 0.0;
    double learning_rate = 0.1;
    double l2_lambda = 1.0;
    std::vector<GbmTree> trees;
    std::vector<std::string> feature_names;

    double predict_margin(std::span<const double> row) const;
    /// Margin using only the first n_trees_used trees (loss-curve probes).
    double predict_margin(std::span<const double> row, std::size_t n_trees_used) const;
    /// Probability in (0,1). Throws SchemaError if the row width does not
    /// match the model's schema.
    double predict_proba(std::span<const double> row) const;

    nlohmann::ordered_json to_json() const;
    static GbmModel from_json(const nlohmann::json& doc);
};

/// Stagewise second-order logistic boosting with exact greedy splits over
/// sorted unique feature values and L2 leaf regularization. Requires both
/// classes present (DegenerateLabelsError otherwise) and a fully imputed X.
GbmModel train_gbm(const DenseMatrix& X, std::span<const int> y,
                   const GbmConfig& config,
                   std::vector<std::string> feature_names = {});

double sigmoid(double x);

/// Mean negative log-likelihood of binary labels under probabilities p.
double log_loss(std::span<const double> p, std::span<const int> y);

}  // namespace deft
