#include "datadiet/nn.hpp"

#include "datadiet/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace datadiet {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstVectorMap = Eigen::Map<const Eigen::RowVectorXd>;
using VectorMap = Eigen::Map<Eigen::RowVectorXd>;

ConstMatrixMap view(const Tensor2& t) {
    return {t.data.data(), static_cast<Eigen::Index>(t.rows), static_cast<Eigen::Index>(t.cols)};
}

MatrixMap view(Tensor2& t) {
    return {t.data.data(), static_cast<Eigen::Index>(t.rows), static_cast<Eigen::Index>(t.cols)};
}

// activations[0] is the input batch; activations[l + 1] is the output of
// layer l after its nonlinearity. The final entry holds the logits.
struct Trace {
    std::vector<RowMatrix> activations;
};

Trace run_forward(const Params& params, const ConstMatrixMap& inputs) {
    Trace trace;
    trace.activations.reserve(params.layers.size() + 1);
    trace.activations.emplace_back(inputs);
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const Layer& layer = params.layers[l];
        RowMatrix z = trace.activations.back() * view(layer.weight).transpose();
        if (!layer.bias.empty()) {
            z.rowwise() += ConstVectorMap(layer.bias.data(), static_cast<Eigen::Index>(layer.bias.size()));
        }
        const bool hidden = l + 1 < params.layers.size();
        if (hidden && params.activation == Activation::relu) z = z.cwiseMax(0.0);
        trace.activations.push_back(std::move(z));
    }
    return trace;
}

void softmax_rows(RowMatrix& logits) {
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        auto row = logits.row(r);
        const double m = row.maxCoeff();
        row = (row.array() - m).exp();
        row /= row.sum();
    }
}

// delta holds dLoss/dlogits for each row (already scaled). Writes the summed
// gradient into grad, which must be shaped like params.
void run_backward(const Params& params, const Trace& trace, RowMatrix delta, Gradient& grad) {
    for (std::size_t l = params.layers.size(); l-- > 0;) {
        const RowMatrix& input = trace.activations[l];
        view(grad.layers[l].weight).noalias() = delta.transpose() * input;
        if (!grad.layers[l].bias.empty()) {
            VectorMap(grad.layers[l].bias.data(), static_cast<Eigen::Index>(grad.layers[l].bias.size())) =
                delta.colwise().sum();
        }
        if (l == 0) break;
        RowMatrix upstream = delta * view(params.layers[l].weight);
        if (params.activation == Activation::relu) {
            upstream.array() *= (input.array() > 0.0).cast<double>();
        }
        delta = std::move(upstream);
    }
}

void check_input(const Params& params, std::size_t dim) {
    if (params.layers.empty()) throw DimensionError("model has no layers");
    if (dim != params.input_dim()) {
        throw DimensionError("input has " + std::to_string(dim) + " features, model expects " +
                             std::to_string(params.input_dim()));
    }
}

void check_label(const Params& params, std::size_t label) {
    if (label >= params.num_classes()) {
        throw DimensionError("label " + std::to_string(label) + " out of range for " +
                             std::to_string(params.num_classes()) + " classes");
    }
}

} // namespace

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "identity"; }
std::string to_string(Init i) { return i == Init::he_normal ? "he_normal" : "glorot_uniform"; }

Activation parse_activation(std::string_view s) {
    if (s == "relu") return Activation::relu;
    if (s == "identity") return Activation::identity;
    throw ValidationError("unknown activation '" + std::string(s) + "'");
}

Init parse_init(std::string_view s) {
    if (s == "he_normal") return Init::he_normal;
    if (s == "glorot_uniform") return Init::glorot_uniform;
    throw ValidationError("unknown init '" + std::string(s) + "'");
}

void ModelSpec::validate() const {
    if (layer_widths.size() < 2) throw ValidationError("model needs at least an input and an output width");
    for (std::size_t w : layer_widths) {
        if (w == 0) throw ValidationError("layer widths must be >= 1");
    }
}

std::size_t Params::parameter_count() const {
    std::size_t n = 0;
    for (const Layer& layer : layers) n += layer.weight.size() + layer.bias.size();
    return n;
}

void Params::validate() const {
    if (layers.empty()) throw DimensionError("model has no layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const Layer& layer = layers[l];
        if (layer.weight.data.size() != layer.weight.rows * layer.weight.cols) {
            throw DimensionError("weight storage does not match its shape");
        }
        if (!layer.bias.empty() && layer.bias.size() != layer.weight.rows) {
            throw DimensionError("bias length does not match layer width");
        }
        if (layer.bias.empty() != layers.front().bias.empty()) {
            throw DimensionError("layers disagree on whether biases are present");
        }
        if (l > 0 && layers[l - 1].weight.rows != layer.weight.cols) {
            throw DimensionError("layer " + std::to_string(l) + " input width does not chain");
        }
    }
}

Params init_params(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    std::mt19937_64 rng(seed);
    Params params;
    params.activation = spec.activation;
    for (std::size_t l = 0; l + 1 < spec.layer_widths.size(); ++l) {
        const std::size_t fan_in = spec.layer_widths[l];
        const std::size_t fan_out = spec.layer_widths[l + 1];
        Layer layer{Tensor2(fan_out, fan_in), spec.bias ? std::vector<double>(fan_out, 0.0) : std::vector<double>{}};
        if (spec.init == Init::he_normal) {
            std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
            for (double& w : layer.weight.data) w = dist(rng);
        } else {
            const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
            std::uniform_real_distribution<double> dist(-limit, limit);
            for (double& w : layer.weight.data) w = dist(rng);
        }
        params.layers.push_back(std::move(layer));
    }
    return params;
}

Params zeros_like(const Params& p) {
    Params z;
    z.activation = p.activation;
    z.layers.reserve(p.layers.size());
    for (const Layer& layer : p.layers) {
        z.layers.push_back({Tensor2(layer.weight.rows, layer.weight.cols), std::vector<double>(layer.bias.size(), 0.0)});
    }
    return z;
}

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> out(logits.begin(), logits.end());
    if (out.empty()) return out;
    const double m = *std::max_element(out.begin(), out.end());
    double total = 0.0;
    for (double& v : out) {
        v = std::exp(v - m);
        total += v;
    }
    for (double& v : out) v /= total;
    return out;
}

Prediction forward(const Params& params, std::span<const double> x) {
    check_input(params, x.size());
    const Trace trace = run_forward(params, ConstMatrixMap(x.data(), 1, static_cast<Eigen::Index>(x.size())));
    const RowMatrix& logits = trace.activations.back();
    Prediction out;
    out.logits.assign(logits.data(), logits.data() + logits.size());
    out.probs = softmax(out.logits);
    return out;
}

double cross_entropy(std::span<const double> probs, std::size_t label) {
    if (label >= probs.size()) {
        throw DimensionError("label " + std::to_string(label) + " out of range for " + std::to_string(probs.size()) +
                             " classes");
    }
    return -std::log(std::max(probs[label], kProbabilityFloor));
}

Gradient backward_per_example(const Params& params, std::span<const double> x, std::size_t label) {
    check_input(params, x.size());
    check_label(params, label);
    const Trace trace = run_forward(params, ConstMatrixMap(x.data(), 1, static_cast<Eigen::Index>(x.size())));
    RowMatrix delta = trace.activations.back();
    softmax_rows(delta);
    delta(0, static_cast<Eigen::Index>(label)) -= 1.0;
    Gradient grad = zeros_like(params);
    run_backward(params, trace, std::move(delta), grad);
    return grad;
}

double flat_l2_norm(const Params& g) {
    double acc = 0.0;
    for (const Layer& layer : g.layers) {
        acc += squared_l2_norm(layer.weight.data);
        acc += squared_l2_norm(layer.bias);
    }
    return std::sqrt(acc);
}

std::size_t argmax(std::span<const double> v) {
    return static_cast<std::size_t>(std::distance(v.begin(), std::max_element(v.begin(), v.end())));
}

Tensor2 forward_batch(const Params& params, const Tensor2& inputs) {
    check_input(params, inputs.cols);
    Trace trace = run_forward(params, view(inputs));
    RowMatrix& probs = trace.activations.back();
    softmax_rows(probs);
    Tensor2 out(inputs.rows, params.num_classes());
    view(out) = probs;
    return out;
}

double mean_batch_gradient(const Params& params, const Tensor2& inputs, std::span<const std::size_t> labels,
                           Gradient& grad) {
    check_input(params, inputs.cols);
    if (labels.size() != inputs.rows) throw DimensionError("batch has a different number of inputs and labels");
    if (inputs.rows == 0) throw DimensionError("empty batch");
    Trace trace = run_forward(params, view(inputs));
    RowMatrix delta = std::move(trace.activations.back());
    softmax_rows(delta);
    double loss = 0.0;
    for (std::size_t r = 0; r < labels.size(); ++r) {
        check_label(params, labels[r]);
        const auto col = static_cast<Eigen::Index>(labels[r]);
        const auto row = static_cast<Eigen::Index>(r);
        loss -= std::log(std::max(delta(row, col), kProbabilityFloor));
        delta(row, col) -= 1.0;
    }
    const double scale = 1.0 / static_cast<double>(labels.size());
    delta *= scale;
    if (grad.layers.size() != params.layers.size()) grad = zeros_like(params);
    run_backward(params, trace, std::move(delta), grad);
    return loss * scale;
}

} // namespace datadiet
