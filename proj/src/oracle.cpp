#include "datadiet/oracle.hpp"

#include "datadiet/error.hpp"

#include <cmath>
#include <string>

namespace datadiet {

void LinearModel::validate() const {
    if (weight.rows < 2 || weight.cols < 1) throw DimensionError("linear model needs C >= 2 and d >= 1");
    if (weight.data.size() != weight.rows * weight.cols) throw DimensionError("weight storage does not match its shape");
    if (!weight.all_finite()) throw DimensionError("linear model has non-finite weights");
}

Params LinearModel::as_params() const {
    Params p;
    p.activation = Activation::identity;
    p.layers.push_back({weight, {}});
    return p;
}

double residual_factor(const LinearModel& model, std::span<const double> x, std::size_t label) {
    model.validate();
    if (x.size() != model.input_dim()) {
        throw DimensionError("input has " + std::to_string(x.size()) + " features, model expects " +
                             std::to_string(model.input_dim()));
    }
    if (label >= model.num_classes()) throw DimensionError("label " + std::to_string(label) + " out of range");

    std::vector<double> logits(model.num_classes(), 0.0);
    for (std::size_t j = 0; j < model.num_classes(); ++j) {
        const auto row = model.weight.row(j);
        double z = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) z += row[i] * x[i];
        logits[j] = z;
    }
    const std::vector<double> p = softmax(logits);
    double acc = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
        const double r = p[j] - (j == label ? 1.0 : 0.0);
        acc += r * r;
    }
    return std::sqrt(acc);
}

double closed_form_grad_norm(const LinearModel& model, std::span<const double> x, std::size_t label) {
    return residual_factor(model, x, label) * l2_norm(x);
}

double expected_grad_norm_factor(std::span<const LinearModel> draws, std::span<const double> x, std::size_t label) {
    if (draws.empty()) throw DimensionError("expected_grad_norm_factor needs at least one model draw");
    double total = 0.0;
    for (const LinearModel& m : draws) total += residual_factor(m, x, label);
    return total / static_cast<double>(draws.size());
}

} // namespace datadiet
