#pragma once

// Closed-form gradient norm of the bias-free linear softmax classifier
// f(x) = softmax(W x) under cross-entropy. Row j of the gradient is
// (p_j - [j == y]) x, so the norm factors into a label-residual term times
// the input norm.

#include "datadiet/nn.hpp"
#include "datadiet/tensor.hpp"

#include <span>
#include <vector>

namespace datadiet {

struct LinearModel {
    Tensor2 weight; // C x d

    std::size_t num_classes() const { return weight.rows; }
    std::size_t input_dim() const { return weight.cols; }
    void validate() const;

    /// Single-layer Params without bias, for comparison against autodiff.
    Params as_params() const;
};

/// sqrt(sum_j (p_j - [j == y])^2) with p = softmax(W x).
double residual_factor(const LinearModel& model, std::span<const double> x, std::size_t label);

/// residual_factor(...) * ||x||_2.
double closed_form_grad_norm(const LinearModel& model, std::span<const double> x, std::size_t label);

/// Sample mean of residual_factor over the draws. Multiplying by ||x||_2
/// gives the sample-mean gradient norm over the same draws.
double expected_grad_norm_factor(std::span<const LinearModel> draws, std::span<const double> x, std::size_t label);

} // namespace datadiet
