#pragma once

// Per-example importance scores and their aggregation over independent runs.
//
//   grand       ||grad_theta L(f(x; theta_t), y)||_2 at a fixed epoch t
//   el2n        ||f(x; theta_t) - onehot(y)||_2^2 at a fixed epoch t
//   input_norm  ||x||_2
//   forget      forgetting events up to epoch t
//   random      iid Uniform[0, 1)
//
// A ScoreTable keeps one row per run (or random trial) and the per-example
// mean over rows.

#include "datadiet/datasets.hpp"
#include "datadiet/nn.hpp"
#include "datadiet/tensor.hpp"
#include "datadiet/trainer.hpp"

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace datadiet {

enum class ScoreName { grand, el2n, input_norm, forget, random };

struct ScoreKind {
    ScoreName name = ScoreName::grand;
    /// Required for grand, el2n and forget; absent for input_norm and random.
    std::optional<std::size_t> epoch;

    static ScoreKind grand(std::size_t e) { return {ScoreName::grand, e}; }
    static ScoreKind el2n(std::size_t e) { return {ScoreName::el2n, e}; }
    static ScoreKind forget(std::size_t e) { return {ScoreName::forget, e}; }
    static ScoreKind input_norm() { return {ScoreName::input_norm, std::nullopt}; }
    static ScoreKind random() { return {ScoreName::random, std::nullopt}; }

    /// "grand@0", "input_norm", ...
    std::string label() const;
    /// Filename-safe form: "grand_e0", "input_norm", ...
    std::string file_stem() const;
    /// Accepts either label() or file_stem() spelling.
    static ScoreKind parse(std::string_view text);
    void validate() const;

    auto operator<=>(const ScoreKind&) const = default;
};

struct ScoreTable {
    ScoreKind kind;
    std::vector<std::size_t> example_ids;
    Tensor2 trials; // trial x example
    std::vector<double> mean;

    std::size_t n_examples() const { return example_ids.size(); }
    std::size_t n_trials() const { return trials.rows; }
    void recompute_mean();

    bool operator==(const ScoreTable&) const = default;
};

double grand_one(const Params& params, std::span<const double> x, std::size_t label);
double el2n_one(const Params& params, std::span<const double> x, std::size_t label, bool squared = true);

/// One trained (or merely initialized) model whose checkpoints feed a table.
struct RunHandle {
    std::size_t run_index = 0;
    std::filesystem::path checkpoint_dir;
    /// Needed only for forget scores.
    std::optional<CorrectnessMatrix> correctness;
};

struct TableOptions {
    bool el2n_squared = true;
    InputSpace input_space = InputSpace::normalized;
    std::size_t random_trials = 1;
    std::uint64_t random_seed = 0;
    std::size_t jobs = 1;
};

/// Rows are ordered by position in `runs`. grand and el2n restore exactly
/// kind.epoch from each run's store and propagate CheckpointError when it is
/// missing.
ScoreTable compute_table(const ScoreKind& kind, const Dataset& ds, std::span<const RunHandle> runs,
                         const TableOptions& options = {});

/// (s - min) / (max - min); all zeros when the range is zero.
std::vector<double> normalize(std::span<const double> scores);

/// Normalizes each trial row on its own, then averages across trials.
std::vector<double> average_normalized(const ScoreTable& table);

/// Header example_id,trial_0,...,trial_{M-1},mean; one row per example.
std::string table_to_csv(const ScoreTable& table);
void write_table_csv(const ScoreTable& table, const std::filesystem::path& path);
ScoreTable read_table_csv(const std::filesystem::path& path, const ScoreKind& kind);

/// scores_<file_stem>.csv
std::string table_filename(const ScoreKind& kind);

} // namespace datadiet
