#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace deft {

/// Row-major dense matrix of doubles; the form the learners consume.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<const double> row(std::size_t r) const {
        return {data.data() + r * cols, cols};
    }
    std::span<double> row(std::size_t r) {
        return {data.data() + r * cols, cols};
    }
};

}  // namespace deft
