#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace datadiet {

/// Dense row-major matrix of doubles.
struct Tensor2 {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Tensor2() = default;
    Tensor2(std::size_t rows, std::size_t cols, double fill = 0.0);

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    std::size_t size() const { return data.size(); }
    bool all_finite() const;

    bool operator==(const Tensor2&) const = default;
};

double l2_norm(std::span<const double> v);
double squared_l2_norm(std::span<const double> v);

} // namespace datadiet
