#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "deft/dense.hpp"
#include "deft/errors.hpp"

namespace deft {

struct RfConfig {
    int n_trees = 200;
    int max_depth = 12;
    std::uint64_t seed = 0;
    int n_threads = 1;  // trees train in parallel
};

struct RfNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::vector<double> dist;  // leaf class distribution

    bool is_leaf() const { return feature < 0; }
};

struct RfTree {
    std::vector<RfNode> nodes;

    const std::vector<double>& predict_dist(std::span<const double> row) const;
};

/// Multi-class random forest: bootstrap samples, sqrt(d) feature
/// subsampling per split, Gini impurity, class-histogram leaves.
/// Per-tree seeds derive from (seed, tree index), so parallel and serial
/// training build identical forests.
class RfModel {
public:
    int n_classes = 0;
    std::vector<RfTree> trees;
    /// Mean decrease in impurity per feature, normalized to sum 1 (all
    /// zeros when no tree ever split).
    std::vector<double> importances;
    std::vector<std::string> feature_names;

    std::vector<double> predict_proba(std::span<const double> row) const;
    int predict(std::span<const double> row) const;  // ties to lowest class

    nlohmann::ordered_json to_json() const;
    static RfModel from_json(const nlohmann::json& doc);
};

/// Trains a forest on integer class labels 0..n_classes-1. Throws
/// DegenerateLabelsError when fewer than two classes are present.
RfModel train_rf(const DenseMatrix& X, std::span<const int> y, const RfConfig& config,
                 std::vector<std::string> feature_names = {});

}  // namespace deft
