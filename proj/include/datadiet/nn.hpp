#pragma once

// Minimal feedforward classifier: dense layers, ReLU or identity hidden
// activations, softmax output and cross-entropy loss, with exact
// per-example gradients.

#include "datadiet/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace datadiet {

enum class Activation { relu, identity };
enum class Init { he_normal, glorot_uniform };

std::string to_string(Activation a);
std::string to_string(Init i);
Activation parse_activation(std::string_view s);
Init parse_init(std::string_view s);

struct ModelSpec {
    /// Input dimension first, class count last.
    std::vector<std::size_t> layer_widths;
    Activation activation = Activation::relu;
    Init init = Init::he_normal;
    /// When false the layers carry no bias vector at all, so biases are
    /// neither trained nor part of any gradient norm.
    bool bias = true;

    void validate() const;
    std::size_t input_dim() const { return layer_widths.front(); }
    std::size_t num_classes() const { return layer_widths.back(); }
};

/// weight is (out x in) so that a layer computes W a + b.
struct Layer {
    Tensor2 weight;
    std::vector<double> bias;

    bool operator==(const Layer&) const = default;
};

struct Params {
    Activation activation = Activation::relu;
    std::vector<Layer> layers;

    std::size_t input_dim() const { return layers.front().weight.cols; }
    std::size_t num_classes() const { return layers.back().weight.rows; }
    bool has_bias() const { return !layers.empty() && !layers.front().bias.empty(); }
    std::size_t parameter_count() const;
    /// Throws DimensionError unless consecutive layers chain.
    void validate() const;

    bool operator==(const Params&) const = default;
};

/// Same layout as Params; one entry per trainable parameter.
using Gradient = Params;

Params init_params(const ModelSpec& spec, std::uint64_t seed);
Params zeros_like(const Params& p);

struct Prediction {
    std::vector<double> logits;
    std::vector<double> probs;
};

std::vector<double> softmax(std::span<const double> logits);
Prediction forward(const Params& params, std::span<const double> x);

inline constexpr double kProbabilityFloor = 1e-12;

/// -log(probs[label]) with the probability clamped at kProbabilityFloor.
double cross_entropy(std::span<const double> probs, std::size_t label);

Gradient backward_per_example(const Params& params, std::span<const double> x, std::size_t label);

/// Euclidean norm of every weight and bias entry taken together.
double flat_l2_norm(const Params& g);

/// First index of the maximum.
std::size_t argmax(std::span<const double> v);

// Batched paths used by training and evaluation. `inputs` holds one example
// per row.

/// Class probabilities, one row per input row.
Tensor2 forward_batch(const Params& params, const Tensor2& inputs);

/// Overwrites `grad` with the mean gradient over the batch and returns the
/// mean loss.
double mean_batch_gradient(const Params& params, const Tensor2& inputs, std::span<const std::size_t> labels,
                           Gradient& grad);

} // namespace datadiet
