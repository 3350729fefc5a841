#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "deft/errors.hpp"

namespace deft {

struct SmoteConfig {
    int k = 5;               // neighbor count
    std::size_t target = 0;  // minority row count after oversampling
    std::uint64_t seed = 0;
};

struct SmoteResult {
    std::vector<std::vector<double>> rows;  // synthetic rows only
    std::vector<std::string> warnings;
};

/// Synthetic minority oversampling: each synthetic row is x + u*(x_nn - x)
/// for a uniformly chosen minority row x, one of its k nearest minority
/// neighbors x_nn (Euclidean) and u ~ Uniform[0,1]. Produces exactly
/// target - minority.size() rows; deterministic under seed. With a single
/// minority row the row is duplicated and a warning recorded.
SmoteResult smote(const std::vector<std::vector<double>>& minority,
                  const SmoteConfig& config);

}  // namespace deft
