#include "datadiet/scores.hpp"

#include "datadiet/checkpoint.hpp"
#include "datadiet/csv.hpp"
#include "datadiet/error.hpp"
#include "datadiet/util.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>

namespace datadiet {

namespace {

std::string_view base_name(ScoreName n) {
    switch (n) {
    case ScoreName::grand: return "grand";
    case ScoreName::el2n: return "el2n";
    case ScoreName::input_norm: return "input_norm";
    case ScoreName::forget: return "forget";
    case ScoreName::random: return "random";
    }
    return "?";
}

bool needs_epoch(ScoreName n) { return n == ScoreName::grand || n == ScoreName::el2n || n == ScoreName::forget; }

void fill_model_row(const ScoreKind& kind, const Dataset& ds, const RunHandle& run, const TableOptions& options,
                    std::span<double> row) {
    const Params params = restore_checkpoint(run.checkpoint_dir, kind.epoch);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const ExampleView ex = ds.example(i);
        row[i] = kind.name == ScoreName::grand ? grand_one(params, ex.x, ex.label)
                                               : el2n_one(params, ex.x, ex.label, options.el2n_squared);
    }
}

void fill_forget_row(const ScoreKind& kind, const Dataset& ds, const RunHandle& run, std::span<double> row) {
    if (!run.correctness) {
        throw ValidationError("forget score needs the correctness record of run " + std::to_string(run.run_index));
    }
    if (run.correctness->examples() != ds.size()) throw DimensionError("correctness record does not match dataset");
    if (run.correctness->epochs() < *kind.epoch) {
        throw ValidationError("run " + std::to_string(run.run_index) + " recorded only " +
                              std::to_string(run.correctness->epochs()) + " epochs, forget needs " +
                              std::to_string(*kind.epoch));
    }
    const auto counts = forget_counts(run.correctness->truncated(*kind.epoch));
    for (std::size_t i = 0; i < counts.size(); ++i) row[i] = static_cast<double>(counts[i]);
}

} // namespace

std::string ScoreKind::label() const {
    std::string s(base_name(name));
    if (epoch) s += "@" + std::to_string(*epoch);
    return s;
}

std::string ScoreKind::file_stem() const {
    std::string s(base_name(name));
    if (epoch) s += "_e" + std::to_string(*epoch);
    return s;
}

ScoreKind ScoreKind::parse(std::string_view text) {
    for (ScoreName n : {ScoreName::grand, ScoreName::el2n, ScoreName::input_norm, ScoreName::forget, ScoreName::random}) {
        const std::string_view base = base_name(n);
        if (!text.starts_with(base)) continue;
        std::string_view rest = text.substr(base.size());
        ScoreKind kind{n, std::nullopt};
        if (!rest.empty()) {
            if (rest.starts_with("@")) {
                rest.remove_prefix(1);
            } else if (rest.starts_with("_e")) {
                rest.remove_prefix(2);
            } else {
                continue;
            }
            std::size_t e = 0;
            const auto [end, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), e);
            if (ec != std::errc{} || end != rest.data() + rest.size() || rest.empty()) {
                throw ValidationError("bad score epoch in '" + std::string(text) + "'");
            }
            kind.epoch = e;
        }
        kind.validate();
        return kind;
    }
    throw ValidationError("unknown score kind '" + std::string(text) + "'");
}

void ScoreKind::validate() const {
    if (needs_epoch(name) && !epoch) throw ValidationError(std::string(base_name(name)) + " needs a score epoch");
    if (!needs_epoch(name) && epoch) throw ValidationError(std::string(base_name(name)) + " takes no score epoch");
    if (name == ScoreName::forget && *epoch < 1) throw ValidationError("forget needs a score epoch >= 1");
}

void ScoreTable::recompute_mean() {
    mean.assign(trials.cols, 0.0);
    if (trials.rows == 0) return;
    for (std::size_t t = 0; t < trials.rows; ++t) {
        const auto row = trials.row(t);
        for (std::size_t i = 0; i < trials.cols; ++i) mean[i] += row[i];
    }
    for (double& m : mean) m /= static_cast<double>(trials.rows);
}

double grand_one(const Params& params, std::span<const double> x, std::size_t label) {
    return flat_l2_norm(backward_per_example(params, x, label));
}

double el2n_one(const Params& params, std::span<const double> x, std::size_t label, bool squared) {
    const Prediction pred = forward(params, x);
    if (label >= pred.probs.size()) throw DimensionError("label " + std::to_string(label) + " out of range");
    double acc = 0.0;
    for (std::size_t c = 0; c < pred.probs.size(); ++c) {
        const double r = pred.probs[c] - (c == label ? 1.0 : 0.0);
        acc += r * r;
    }
    return squared ? acc : std::sqrt(acc);
}

ScoreTable compute_table(const ScoreKind& kind, const Dataset& ds, std::span<const RunHandle> runs,
                         const TableOptions& options) {
    kind.validate();
    ScoreTable table;
    table.kind = kind;
    table.example_ids = ds.ids;

    switch (kind.name) {
    case ScoreName::grand:
    case ScoreName::el2n:
        if (runs.empty()) throw ValidationError(kind.label() + " needs at least one run");
        table.trials = Tensor2(runs.size(), ds.size());
        parallel_for(runs.size(), options.jobs,
                     [&](std::size_t r) { fill_model_row(kind, ds, runs[r], options, table.trials.row(r)); });
        break;
    case ScoreName::forget:
        if (runs.empty()) throw ValidationError(kind.label() + " needs at least one run");
        table.trials = Tensor2(runs.size(), ds.size());
        for (std::size_t r = 0; r < runs.size(); ++r) fill_forget_row(kind, ds, runs[r], table.trials.row(r));
        break;
    case ScoreName::input_norm: {
        table.trials = Tensor2(1, ds.size());
        const auto norms = input_norms(ds, options.input_space);
        std::copy(norms.begin(), norms.end(), table.trials.row(0).begin());
        break;
    }
    case ScoreName::random:
        if (options.random_trials < 1) throw ValidationError("random scores need at least one trial");
        table.trials = Tensor2(options.random_trials, ds.size());
        for (std::size_t t = 0; t < options.random_trials; ++t) {
            std::mt19937_64 rng(hash_combine(options.random_seed, t));
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            for (double& v : table.trials.row(t)) v = unit(rng);
        }
        break;
    }
    table.recompute_mean();
    return table;
}

std::vector<double> normalize(std::span<const double> scores) {
    std::vector<double> out(scores.size(), 0.0);
    if (scores.empty()) return out;
    const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
    const double range = *hi - *lo;
    if (range == 0.0) return out;
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = (scores[i] - *lo) / range;
    return out;
}

std::vector<double> average_normalized(const ScoreTable& table) {
    std::vector<double> avg(table.n_examples(), 0.0);
    if (table.n_trials() == 0) throw DimensionError("score table has no trials");
    for (std::size_t t = 0; t < table.n_trials(); ++t) {
        const auto norm = normalize(table.trials.row(t));
        for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += norm[i];
    }
    for (double& v : avg) v /= static_cast<double>(table.n_trials());
    return avg;
}

std::string table_filename(const ScoreKind& kind) { return "scores_" + kind.file_stem() + ".csv"; }

std::string table_to_csv(const ScoreTable& table) {
    std::string out = "example_id";
    for (std::size_t t = 0; t < table.n_trials(); ++t) out += ",trial_" + std::to_string(t);
    out += ",mean\n";
    for (std::size_t i = 0; i < table.n_examples(); ++i) {
        out += std::to_string(table.example_ids[i]);
        for (std::size_t t = 0; t < table.n_trials(); ++t) out += "," + csv::format(table.trials(t, i));
        out += "," + csv::format(table.mean[i]) + "\n";
    }
    return out;
}

void write_table_csv(const ScoreTable& table, const std::filesystem::path& path) {
    csv::write_text(path, table_to_csv(table));
}

ScoreTable read_table_csv(const std::filesystem::path& path, const ScoreKind& kind) {
    const auto rows = csv::read_rows(path);
    if (rows.empty() || rows[0].size() < 3 || rows[0].front() != "example_id" || rows[0].back() != "mean") {
        throw FormatError("bad score table header in " + path.string());
    }
    const std::size_t trials = rows[0].size() - 2;
    ScoreTable table;
    table.kind = kind;
    table.trials = Tensor2(trials, rows.size() - 1);
    table.mean.resize(rows.size() - 1);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() != trials + 2) throw FormatError("ragged row in " + path.string());
        table.example_ids.push_back(static_cast<std::size_t>(csv::parse_double(row[0])));
        for (std::size_t t = 0; t < trials; ++t) table.trials(t, i - 1) = csv::parse_double(row[t + 1]);
        table.mean[i - 1] = csv::parse_double(row.back());
    }
    return table;
}

} // namespace datadiet
