#include "datadiet/tensor.hpp"

#include <cmath>

namespace datadiet {

Tensor2::Tensor2(std::size_t r, std::size_t c, double fill) : rows(r), cols(c), data(r * c, fill) {}

bool Tensor2::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

double squared_l2_norm(std::span<const double> v) {
    double acc = 0.0;
    for (double e : v) acc += e * e;
    return acc;
}

double l2_norm(std::span<const double> v) { return std::sqrt(squared_l2_norm(v)); }

} // namespace datadiet
