#pragma once

#include "datadiet/checkpoint.hpp"
#include "datadiet/datasets.hpp"
#include "datadiet/nn.hpp"

#include <cstddef>
#include <cstdint>
#include <set>
#include <vector>

namespace datadiet {

struct TrainConfig {
    std::size_t epochs = 10;
    std::size_t batch_size = 64;
    double learning_rate = 0.05;
    double momentum = 0.9;
    std::uint64_t seed = 0;
    /// Epoch indices to persist; 0 is the initialization, saved before any
    /// update, and e >= 1 is the state after epoch e.
    std::set<std::size_t> checkpoint_epochs;

    void validate() const;
};

/// entry (i, e) = 1 when example i was classified correctly with the
/// parameters at the end of epoch e (0-based column, epoch e + 1).
class CorrectnessMatrix {
public:
    CorrectnessMatrix() = default;
    CorrectnessMatrix(std::size_t examples, std::size_t epochs)
        : examples_(examples), epochs_(epochs), bits_(examples * epochs, 0) {}

    std::size_t examples() const { return examples_; }
    std::size_t epochs() const { return epochs_; }
    bool at(std::size_t example, std::size_t epoch) const { return bits_[example * epochs_ + epoch] != 0; }
    void set(std::size_t example, std::size_t epoch, bool correct) {
        bits_[example * epochs_ + epoch] = correct ? 1 : 0;
    }
    /// Fraction of examples correct at the given epoch column.
    double column_accuracy(std::size_t epoch) const;
    /// The first `epochs` columns.
    CorrectnessMatrix truncated(std::size_t epochs) const;

    bool operator==(const CorrectnessMatrix&) const = default;

private:
    std::size_t examples_ = 0;
    std::size_t epochs_ = 0;
    std::vector<std::uint8_t> bits_;
};

struct TrainResult {
    Params final_params;
    double test_accuracy = 0.0;
    CorrectnessMatrix correctness;
    std::vector<std::uint64_t> checkpoints_written;

    double final_train_accuracy() const { return correctness.column_accuracy(correctness.epochs() - 1); }
    bool operator==(const TrainResult&) const = default;
};

/// Minibatch SGD with classical momentum (v <- m v - lr g, theta <- theta + v)
/// on minibatch-mean gradients. The shuffle order of each epoch depends only
/// on (cfg.seed, epoch). `store` may be null when no checkpoints are requested.
TrainResult train(const ModelSpec& spec, const Dataset& train_ds, const Dataset& test_ds, const TrainConfig& cfg,
                  const CheckpointStore* store);

/// Per-example correctness with argmax ties going to the lowest class.
std::vector<std::uint8_t> correct_mask(const Params& params, const Dataset& ds);

double evaluate(const Params& params, const Dataset& ds);

/// Number of 1 -> 0 transitions between consecutive epochs per example.
/// Examples never correct in any epoch get epochs + 1.
std::vector<std::size_t> forget_counts(const CorrectnessMatrix& correctness);

} // namespace datadiet
