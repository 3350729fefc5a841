#include "deft/smote.hpp"

#include <algorithm>
#include <cmath>

#include "deft/rng.hpp"

namespace deft {

namespace {

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace

SmoteResult smote(const std::vector<std::vector<double>>& minority,
                  const SmoteConfig& config) {
    if (minority.empty()) throw ConfigError("SMOTE needs at least one minority row");
    if (config.k < 1) throw ConfigError("SMOTE neighbor count must be >= 1");
    const std::size_t n = minority.size();
    if (config.target < n)
        throw ConfigError("SMOTE target " + std::to_string(config.target) +
                          " is below the current minority count " + std::to_string(n));
    const std::size_t width = minority.front().size();
    for (const auto& row : minority)
        if (row.size() != width) throw ConfigError("SMOTE rows differ in width");

    SmoteResult result;
    const std::size_t wanted = config.target - n;
    if (wanted == 0) return result;

    Rng rng(config.seed);
    if (n == 1) {
        result.warnings.push_back(
            "single minority row: k-NN undefined, duplicating the row");
        result.rows.assign(wanted, minority.front());
        return result;
    }

    const std::size_t k = std::min<std::size_t>(config.k, n - 1);
    // Neighbor lists: k nearest by squared distance, ties by index.
    std::vector<std::vector<std::size_t>> neighbors(n);
    std::vector<std::pair<double, std::size_t>> dist;
    for (std::size_t i = 0; i < n; ++i) {
        dist.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            dist.emplace_back(squared_distance(minority[i], minority[j]), j);
        }
        std::sort(dist.begin(), dist.end());
        neighbors[i].reserve(k);
        for (std::size_t m = 0; m < k; ++m) neighbors[i].push_back(dist[m].second);
    }

    result.rows.reserve(wanted);
    for (std::size_t s = 0; s < wanted; ++s) {
        std::size_t i = rng.uniform_int(n);
        std::size_t j = neighbors[i][rng.uniform_int(k)];
        double u = rng.uniform();
        std::vector<double> row(width);
        for (std::size_t c = 0; c < width; ++c)
            row[c] = minority[i][c] + u * (minority[j][c] - minority[i][c]);
        result.rows.push_back(std::move(row));
    }
    return result;
}

}  // namespace deft
