#include "datadiet/trainer.hpp"

#include "datadiet/error.hpp"
#include "datadiet/util.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace datadiet {

namespace {

constexpr std::size_t kEvalChunk = 2048;

void check_dims(const ModelSpec& spec, const Dataset& ds, const char* what) {
    if (ds.input_dim() != spec.input_dim()) {
        throw DimensionError(std::string(what) + " has " + std::to_string(ds.input_dim()) + " features, model expects " +
                             std::to_string(spec.input_dim()));
    }
    if (ds.num_classes > spec.num_classes()) {
        throw DimensionError(std::string(what) + " has more classes than the model outputs");
    }
}

void sgd_momentum_step(Params& params, Params& velocity, const Gradient& grad, double lr, double momentum) {
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        auto update = [&](std::vector<double>& theta, std::vector<double>& v, const std::vector<double>& g) {
            for (std::size_t k = 0; k < theta.size(); ++k) {
                v[k] = momentum * v[k] - lr * g[k];
                theta[k] += v[k];
            }
        };
        update(params.layers[l].weight.data, velocity.layers[l].weight.data, grad.layers[l].weight.data);
        update(params.layers[l].bias, velocity.layers[l].bias, grad.layers[l].bias);
    }
}

} // namespace

void TrainConfig::validate() const {
    if (epochs < 1) throw ValidationError("epochs must be >= 1");
    if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
    if (!(learning_rate >= 0.0)) throw ValidationError("learning_rate must be >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ValidationError("momentum must be in [0, 1)");
    if (!checkpoint_epochs.empty() && *checkpoint_epochs.rbegin() > epochs) {
        throw ValidationError("checkpoint epoch " + std::to_string(*checkpoint_epochs.rbegin()) + " exceeds epochs");
    }
}

double CorrectnessMatrix::column_accuracy(std::size_t epoch) const {
    if (examples_ == 0) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < examples_; ++i) hits += at(i, epoch) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(examples_);
}

CorrectnessMatrix CorrectnessMatrix::truncated(std::size_t epochs) const {
    if (epochs > epochs_) throw DimensionError("cannot truncate correctness matrix to more epochs than recorded");
    CorrectnessMatrix out(examples_, epochs);
    for (std::size_t i = 0; i < examples_; ++i) {
        for (std::size_t e = 0; e < epochs; ++e) out.set(i, e, at(i, e));
    }
    return out;
}

std::vector<std::uint8_t> correct_mask(const Params& params, const Dataset& ds) {
    std::vector<std::uint8_t> mask(ds.size(), 0);
    std::vector<std::size_t> positions;
    for (std::size_t start = 0; start < ds.size(); start += kEvalChunk) {
        const std::size_t end = std::min(ds.size(), start + kEvalChunk);
        positions.resize(end - start);
        std::iota(positions.begin(), positions.end(), start);
        const Tensor2 chunk_inputs = ds.select(positions).inputs;
        const Tensor2 probs = forward_batch(params, chunk_inputs);
        for (std::size_t r = 0; r < probs.rows; ++r) {
            mask[start + r] = argmax(probs.row(r)) == ds.labels[start + r] ? 1 : 0;
        }
    }
    return mask;
}

double evaluate(const Params& params, const Dataset& ds) {
    if (ds.input_dim() != params.input_dim()) throw DimensionError("dataset and model input widths differ");
    if (ds.size() == 0) return 0.0;
    const auto mask = correct_mask(params, ds);
    const auto hits = std::count(mask.begin(), mask.end(), std::uint8_t{1});
    return static_cast<double>(hits) / static_cast<double>(ds.size());
}

TrainResult train(const ModelSpec& spec, const Dataset& train_ds, const Dataset& test_ds, const TrainConfig& cfg,
                  const CheckpointStore* store) {
    spec.validate();
    cfg.validate();
    check_dims(spec, train_ds, "training set");
    check_dims(spec, test_ds, "test set");
    if (train_ds.size() == 0) throw DimensionError("training set is empty");
    if (!cfg.checkpoint_epochs.empty() && store == nullptr) {
        throw ValidationError("checkpoint epochs requested without a checkpoint store");
    }

    TrainResult result;
    Params params = init_params(spec, cfg.seed);
    Params velocity = zeros_like(params);
    Gradient grad = zeros_like(params);
    result.correctness = CorrectnessMatrix(train_ds.size(), cfg.epochs);

    auto maybe_checkpoint = [&](std::size_t epoch) {
        if (cfg.checkpoint_epochs.contains(epoch)) {
            store->save(epoch, params);
            result.checkpoints_written.push_back(epoch);
        }
    };
    maybe_checkpoint(0);

    std::vector<std::size_t> order(train_ds.size());
    std::vector<std::size_t> batch_labels;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        std::mt19937_64 rng(hash_combine(cfg.seed, epoch));
        std::shuffle(order.begin(), order.end(), rng);

        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const std::span<const std::size_t> positions(order.data() + start, end - start);
            const Dataset batch = train_ds.select(positions);
            mean_batch_gradient(params, batch.inputs, batch.labels, grad);
            sgd_momentum_step(params, velocity, grad, cfg.learning_rate, cfg.momentum);
        }

        const auto mask = correct_mask(params, train_ds);
        for (std::size_t i = 0; i < mask.size(); ++i) result.correctness.set(i, epoch - 1, mask[i] != 0);
        maybe_checkpoint(epoch);
    }

    result.test_accuracy = test_ds.size() > 0 ? evaluate(params, test_ds) : 0.0;
    result.final_params = std::move(params);
    return result;
}

std::vector<std::size_t> forget_counts(const CorrectnessMatrix& correctness) {
    if (correctness.epochs() == 0) throw DimensionError("forget_counts needs at least one epoch");
    std::vector<std::size_t> counts(correctness.examples(), 0);
    for (std::size_t i = 0; i < correctness.examples(); ++i) {
        bool ever_correct = correctness.at(i, 0);
        std::size_t forgets = 0;
        for (std::size_t e = 1; e < correctness.epochs(); ++e) {
            const bool now = correctness.at(i, e);
            if (correctness.at(i, e - 1) && !now) ++forgets;
            ever_correct = ever_correct || now;
        }
        counts[i] = ever_correct ? forgets : correctness.epochs() + 1;
    }
    return counts;
}

} // namespace datadiet
