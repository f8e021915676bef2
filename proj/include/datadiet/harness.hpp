#pragma once

// Experiment driver: multi-seed scoring runs, pruning sweeps and report
// export.
//
// Output layout under ExperimentConfig::output_dir:
//   runs/run_<m>/ckpt_<step>.bin   checkpoints of scoring run m (seed master_seed + m)
//   runs.csv                       per-run accuracies
//   scores_<kind>.csv              one ScoreTable per kind
//   sweep.csv                      kind,fraction,trial,test_accuracy
//   corr_matrix.csv, sorted_curves.csv, ratio_hist.csv and matching .svg files

#include "datadiet/datasets.hpp"
#include "datadiet/nn.hpp"
#include "datadiet/scores.hpp"
#include "datadiet/stats.hpp"
#include "datadiet/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace datadiet {

enum class DatasetKind { mnist, cifar10, synthetic };
enum class KeepDirection { highest, lowest };

std::string to_string(DatasetKind d);
DatasetKind parse_dataset_kind(std::string_view s);
std::string to_string(KeepDirection k);
KeepDirection parse_keep(std::string_view s);

struct ExperimentConfig {
    DatasetKind dataset = DatasetKind::mnist;
    /// Holds mnist/ and cifar-10-batches-bin/. Defaults to $DATA_DIR.
    std::filesystem::path data_dir;
    /// 0 keeps every example; otherwise the first n in file order.
    std::size_t train_size = 0;
    std::size_t test_size = 0;

    std::size_t synthetic_classes = 10;
    std::size_t synthetic_dim = 20;
    std::size_t synthetic_per_class = 100;
    std::size_t synthetic_test_per_class = 50;

    ModelSpec model{{784, 128, 10}};
    TrainConfig train;

    std::size_t score_runs = 4;
    std::set<std::size_t> score_epochs{0, 1};
    /// Empty selects the default set: grand and el2n at every score epoch,
    /// forget at the final epoch, input_norm and random.
    std::vector<ScoreKind> kinds;
    Split score_split = Split::train;
    bool el2n_squared = true;
    InputSpace input_space = InputSpace::normalized;

    std::vector<double> prune_fractions{0.0, 0.3, 0.5, 0.7};
    std::size_t retrain_trials = 3;
    KeepDirection keep = KeepDirection::highest;

    std::filesystem::path output_dir = "out";
    std::uint64_t master_seed = 0;
    std::size_t jobs = 1;

    void validate() const;
    /// The kinds run_scoring will produce.
    std::vector<ScoreKind> planned_kinds() const;
};

/// round(0.1 * total_epochs), at least 1.
std::size_t mid_epoch(std::size_t total_epochs);

struct ExperimentData {
    Dataset train;
    Dataset test;

    /// The split the score tables are computed over.
    const Dataset& scored(Split s) const { return s == Split::train ? train : test; }
};

ExperimentData load_experiment_data(const ExperimentConfig& cfg);

using TableMap = std::map<ScoreKind, ScoreTable>;

/// Trains score_runs models (seeds master_seed + m), checkpointing at
/// {0} and every score epoch, computes every planned table and writes it as
/// CSV. Starts from an empty <output_dir>/runs directory.
TableMap run_scoring(const ExperimentConfig& cfg, const ExperimentData& data);

/// ceil((1 - fraction) * n), with products that land within 1e-9 of an
/// integer treated as that integer.
std::size_t kept_count(std::size_t n, double fraction);

/// Keeps kept_count examples with the highest (or lowest) scores; ties go to
/// the lower example_id. The result preserves dataset order and ids.
Dataset prune(const Dataset& ds, std::span<const double> scores, double fraction, KeepDirection keep);

struct SweepRow {
    ScoreKind kind;
    double fraction = 0.0;
    std::size_t trial = 0;
    double test_accuracy = 0.0;

    bool operator==(const SweepRow&) const = default;
};

struct SweepResult {
    std::vector<SweepRow> rows;

    /// Mean test accuracy over trials, or NaN if there are no matching rows.
    double mean_accuracy(const ScoreKind& kind, double fraction) const;
    bool operator==(const SweepResult&) const = default;
};

/// Seed of the retraining run for (fraction, trial). It does not depend on the
/// score kind, so every kind at the same (fraction, trial) starts from the same
/// initialization and shuffle order.
std::uint64_t retrain_seed(std::uint64_t master_seed, double fraction, std::size_t trial);

/// Prunes the training set by each table (mean scores; random uses trial row
/// t mod M), retrains and evaluates on the full test split. Writes sweep.csv.
SweepResult run_sweep(const ExperimentConfig& cfg, const ExperimentData& data, const TableMap& tables);

std::string sweep_to_csv(const SweepResult& sweep);
SweepResult read_sweep_csv(const std::filesystem::path& path);

/// Reads every scores_<kind>.csv in dir.
TableMap load_tables(const std::filesystem::path& dir);

void export_report(const TableMap& tables, const SweepResult& sweep, const std::filesystem::path& out_dir);

} // namespace datadiet
