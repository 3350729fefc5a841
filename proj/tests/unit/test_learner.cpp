#include <cmath>
#include <vector>

#include "doctest.h"

#include "deft/forest.hpp"
#include "deft/gbm.hpp"
#include "deft/rng.hpp"
#include "deft/smote.hpp"

using namespace deft;

namespace {

// Verifies a synthetic row is x + u*(x' - x) for some pair of real rows
// with one consistent u in [0,1].
bool is_convex_combination(const std::vector<double>& synth,
                           const std::vector<std::vector<double>>& real) {
    for (std::size_t a = 0; a < real.size(); ++a) {
        for (std::size_t b = 0; b < real.size(); ++b) {
            if (a == b) continue;
            bool ok = true;
            double u = -1.0;
            for (std::size_t c = 0; c < synth.size() && ok; ++c) {
                double denom = real[b][c] - real[a][c];
                if (std::fabs(denom) < 1e-12) {
                    if (std::fabs(synth[c] - real[a][c]) > 1e-9) ok = false;
                    continue;
                }
                double uc = (synth[c] - real[a][c]) / denom;
                if (u < 0.0) u = uc;
                else if (std::fabs(uc - u) > 1e-9) ok = false;
            }
            if (ok && (u < -1e-9 || u > 1.0 + 1e-9) && u != -1.0) ok = false;
            if (ok) return true;
        }
    }
    return false;
}

struct ToySet {
    DenseMatrix X;
    std::vector<int> y;
};

// 1-D separable set: y = [x > 0].
ToySet separable_toy(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    ToySet toy;
    toy.X = DenseMatrix(n, 1);
    toy.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double x = rng.uniform() * 2.0 - 1.0;
        if (x == 0.0) x = 0.5;
        toy.X.at(i, 0) = x;
        toy.y[i] = x > 0.0 ? 1 : 0;
    }
    return toy;
}

std::vector<double> round_losses(const GbmModel& model, const DenseMatrix& X,
                                 const std::vector<int>& y) {
    std::vector<double> losses;
    for (std::size_t used = 0; used <= model.trees.size(); ++used) {
        std::vector<double> p(X.rows);
        for (std::size_t i = 0; i < X.rows; ++i)
            p[i] = sigmoid(model.predict_margin(X.row(i), used));
        losses.push_back(log_loss(p, y));
    }
    return losses;
}

}  // namespace

TEST_SUITE_BEGIN("learner");

TEST_CASE("smote: synthetic rows lie on minority segments") {
    std::vector<std::vector<double>> minority = {{0.0, 0.0}, {1.0, 1.0}};
    auto result = smote(minority, {1, 12, 7});
    REQUIRE(result.rows.size() == 10);
    for (const auto& row : result.rows) {
        CHECK(row[0] == doctest::Approx(row[1]));  // on the segment t*(1,1)
        CHECK(row[0] >= -1e-12);
        CHECK(row[0] <= 1.0 + 1e-12);
        CHECK(is_convex_combination(row, minority));
    }
}

TEST_CASE("smote: identical minority rows reproduce themselves") {
    std::vector<std::vector<double>> minority = {{2.0, 3.0}, {2.0, 3.0}};
    auto result = smote(minority, {3, 6, 1});
    REQUIRE(result.rows.size() == 4);
    for (const auto& row : result.rows) {
        CHECK(row[0] == 2.0);
        CHECK(row[1] == 3.0);
    }
}

TEST_CASE("smote: target equal to current count yields nothing") {
    std::vector<std::vector<double>> minority = {{0.0}, {1.0}, {2.0}};
    CHECK(smote(minority, {5, 3, 1}).rows.empty());
}

TEST_CASE("smote: single row duplicates with a warning") {
    std::vector<std::vector<double>> minority = {{4.0, 5.0}};
    auto result = smote(minority, {5, 4, 1});
    REQUIRE(result.rows.size() == 3);
    CHECK(!result.warnings.empty());
    for (const auto& row : result.rows) CHECK(row == minority[0]);
}

TEST_CASE("smote: deterministic under seed, convex on random data") {
    Rng rng(99);
    std::vector<std::vector<double>> minority;
    for (int i = 0; i < 25; ++i) {
        std::vector<double> row(6);
        for (auto& v : row) v = rng.normal(0.0, 3.0);
        minority.push_back(std::move(row));
    }
    SmoteConfig config{5, 80, 123};
    auto a = smote(minority, config);
    auto b = smote(minority, config);
    CHECK(a.rows == b.rows);
    REQUIRE(a.rows.size() == 55);
    for (const auto& row : a.rows) CHECK(is_convex_combination(row, minority));
}

TEST_CASE("smote: config validation") {
    std::vector<std::vector<double>> minority = {{0.0}, {1.0}};
    CHECK_THROWS_AS(smote(minority, {0, 5, 1}), ConfigError);
    CHECK_THROWS_AS(smote(minority, {1, 1, 1}), ConfigError);
    CHECK_THROWS_AS(smote({}, {1, 5, 1}), ConfigError);
}

TEST_CASE("gbm: loss non-increasing and below 0.05 on the separable toy set") {
    auto toy = separable_toy(200, 42);
    GbmConfig config;
    config.n_trees = 50;
    auto model = train_gbm(toy.X, toy.y, config);
    auto losses = round_losses(model, toy.X, toy.y);
    REQUIRE(losses.size() == 51);
    for (std::size_t i = 1; i < losses.size(); ++i) CHECK(losses[i] <= losses[i - 1] + 1e-12);
    CHECK(losses.back() < 0.05);
}

TEST_CASE("gbm: zero learning rate predicts the prior everywhere") {
    auto toy = separable_toy(100, 7);
    GbmConfig config;
    config.n_trees = 10;
    config.learning_rate = 0.0;
    auto model = train_gbm(toy.X, toy.y, config);
    double prior = 0.0;
    for (int v : toy.y) prior += v;
    prior /= static_cast<double>(toy.y.size());
    for (std::size_t i = 0; i < 5; ++i)
        CHECK(model.predict_proba(toy.X.row(i)) == doctest::Approx(prior));
}

TEST_CASE("gbm: no trees means sigmoid(base_score)") {
    GbmModel model;
    model.base_score = 0.0;
    std::vector<double> row = {1.0};
    CHECK(model.predict_proba(row) == doctest::Approx(0.5));
    CHECK(model.predict_proba(row) > 0.0);
    CHECK(model.predict_proba(row) < 1.0);
}

TEST_CASE("gbm: leaf values satisfy -G/(H+lambda) exactly") {
    // Two rows, one round, depth 1, base_score = 0 (balanced prior):
    // g = {0.5, -0.5}, h = {0.25, 0.25} -> leaves -+0.4 with lambda = 1.
    DenseMatrix X(2, 1);
    X.at(0, 0) = 0.0;
    X.at(1, 0) = 1.0;
    std::vector<int> y = {0, 1};
    GbmConfig config;
    config.n_trees = 1;
    config.max_depth = 1;
    config.l2_lambda = 1.0;
    auto model = train_gbm(X, y, config);
    REQUIRE(model.trees.size() == 1);
    const auto& nodes = model.trees[0].nodes;
    REQUIRE(nodes.size() == 3);
    CHECK(model.base_score == doctest::Approx(0.0));
    CHECK(nodes[0].feature == 0);
    double left = nodes[static_cast<std::size_t>(nodes[0].left)].value;
    double right = nodes[static_cast<std::size_t>(nodes[0].right)].value;
    CHECK(left == doctest::Approx(-0.5 / 1.25));
    CHECK(right == doctest::Approx(0.5 / 1.25));
}

TEST_CASE("gbm: monotone probabilities on the 1-D toy model") {
    auto toy = separable_toy(200, 11);
    GbmConfig config;
    config.n_trees = 20;
    auto model = train_gbm(toy.X, toy.y, config);
    double prev = -1.0;
    for (double x = -1.0; x <= 1.0; x += 0.05) {
        std::vector<double> row = {x};
        double p = model.predict_proba(row);
        CHECK(p >= prev - 1e-12);
        prev = p;
    }
}

TEST_CASE("gbm: constant features are never split") {
    DenseMatrix X(50, 2);
    std::vector<int> y(50);
    Rng rng(3);
    for (std::size_t i = 0; i < 50; ++i) {
        X.at(i, 0) = 7.0;  // constant
        X.at(i, 1) = rng.uniform();
        y[i] = X.at(i, 1) > 0.5 ? 1 : 0;
    }
    auto model = train_gbm(X, y, {20, 3, 0.1, 1.0, 0, 1});
    for (const auto& tree : model.trees)
        for (const auto& node : tree.nodes)
            if (!node.is_leaf()) CHECK(node.feature == 1);
}

TEST_CASE("gbm: rejects a single class") {
    DenseMatrix X(4, 1);
    std::vector<int> y = {1, 1, 1, 1};
    CHECK_THROWS_AS(train_gbm(X, y, {}), DegenerateLabelsError);
}

TEST_CASE("gbm: serial and parallel training build identical models") {
    Rng rng(21);
    DenseMatrix X(150, 8);
    std::vector<int> y(150);
    for (std::size_t i = 0; i < X.rows; ++i) {
        for (std::size_t j = 0; j < X.cols; ++j) X.at(i, j) = rng.normal(0, 1);
        y[i] = X.at(i, 3) + 0.3 * X.at(i, 5) > 0 ? 1 : 0;
    }
    if (std::count(y.begin(), y.end(), 1) == 0) y[0] = 1;
    GbmConfig serial;
    serial.n_trees = 30;
    serial.seed = 5;
    serial.n_threads = 1;
    GbmConfig parallel = serial;
    parallel.n_threads = 4;
    auto a = train_gbm(X, y, serial);
    auto b = train_gbm(X, y, parallel);
    CHECK(a.to_json().dump() == b.to_json().dump());
}

TEST_CASE("gbm: json round-trip preserves predictions, hash is validated") {
    auto toy = separable_toy(80, 13);
    GbmConfig config;
    config.n_trees = 12;
    auto model = train_gbm(toy.X, toy.y, config, {"x"});
    auto doc = model.to_json();
    auto loaded = GbmModel::from_json(doc);
    for (std::size_t i = 0; i < 10; ++i)
        CHECK(loaded.predict_proba(toy.X.row(i)) ==
              doctest::Approx(model.predict_proba(toy.X.row(i))).epsilon(1e-15));

    auto corrupted = doc;
    corrupted["feature_names"] = {"y"};
    CHECK_THROWS_AS(GbmModel::from_json(corrupted), SchemaError);
}

TEST_CASE("rf: perfectly separable single feature reaches accuracy 1") {
    DenseMatrix X(60, 3);
    std::vector<int> y(60);
    Rng rng(17);
    for (std::size_t i = 0; i < X.rows; ++i) {
        y[i] = static_cast<int>(i % 2);
        X.at(i, 0) = rng.uniform();
        X.at(i, 1) = y[i] == 1 ? 1.0 + rng.uniform() : -1.0 - rng.uniform();
        X.at(i, 2) = rng.uniform();
    }
    RfConfig config;
    config.n_trees = 50;
    config.max_depth = 6;
    auto model = train_rf(X, y, config);
    for (std::size_t i = 0; i < X.rows; ++i) CHECK(model.predict(X.row(i)) == y[i]);
}

TEST_CASE("rf: depth zero predicts the majority class") {
    DenseMatrix X(30, 2);
    std::vector<int> y(30);
    Rng rng(19);
    for (std::size_t i = 0; i < X.rows; ++i) {
        X.at(i, 0) = rng.uniform();
        X.at(i, 1) = rng.uniform();
        y[i] = i < 20 ? 0 : 1;  // class 0 majority
    }
    RfConfig config;
    config.n_trees = 40;
    config.max_depth = 0;
    auto model = train_rf(X, y, config);
    for (std::size_t i = 0; i < 10; ++i) CHECK(model.predict(X.row(i)) == 0);
}

TEST_CASE("rf: same seed gives identical forests, serial or parallel") {
    DenseMatrix X(100, 5);
    std::vector<int> y(100);
    Rng rng(23);
    for (std::size_t i = 0; i < X.rows; ++i) {
        for (std::size_t j = 0; j < X.cols; ++j) X.at(i, j) = rng.normal(0, 1);
        y[i] = static_cast<int>(i % 3);
    }
    RfConfig config;
    config.n_trees = 24;
    config.seed = 77;
    config.n_threads = 1;
    auto a = train_rf(X, y, config);
    config.n_threads = 4;
    auto b = train_rf(X, y, config);
    auto c = train_rf(X, y, config);
    CHECK(a.to_json().dump() == b.to_json().dump());
    CHECK(b.to_json().dump() == c.to_json().dump());
}

TEST_CASE("rf: rejects a single class") {
    DenseMatrix X(5, 1);
    std::vector<int> y = {0, 0, 0, 0, 0};
    CHECK_THROWS_AS(train_rf(X, y, {}), DegenerateLabelsError);
}

TEST_CASE("rf: json round-trip preserves predictions and importances") {
    DenseMatrix X(40, 3);
    std::vector<int> y(40);
    Rng rng(29);
    for (std::size_t i = 0; i < X.rows; ++i) {
        for (std::size_t j = 0; j < X.cols; ++j) X.at(i, j) = rng.normal(0, 1);
        y[i] = X.at(i, 1) > 0 ? 1 : 0;
    }
    if (std::count(y.begin(), y.end(), 1) == 0) y[0] = 1;
    RfConfig config;
    config.n_trees = 15;
    config.max_depth = 4;
    auto model = train_rf(X, y, config, {"a", "b", "c"});
    auto loaded = RfModel::from_json(model.to_json());
    CHECK(loaded.importances == model.importances);
    for (std::size_t i = 0; i < X.rows; ++i)
        CHECK(loaded.predict(X.row(i)) == model.predict(X.row(i)));

    auto corrupted = model.to_json();
    corrupted["schema_hash"] = "0000000000000000";
    CHECK_THROWS_AS(RfModel::from_json(corrupted), SchemaError);
}

TEST_SUITE_END();
