#include "datadiet/harness.hpp"

#include "datadiet/checkpoint.hpp"
#include "datadiet/csv.hpp"
#include "datadiet/error.hpp"
#include "datadiet/svg.hpp"
#include "datadiet/util.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace datadiet {

namespace fs = std::filesystem;

namespace {

fs::path first_existing(const std::vector<fs::path>& candidates) {
    for (const auto& p : candidates) {
        if (fs::exists(p)) return p;
    }
    return {};
}

fs::path find_data_file(const fs::path& data_dir, const std::string& subdir, const std::string& name) {
    return first_existing({data_dir / subdir / name, data_dir / subdir / (name + ".gz"), data_dir / name,
                           data_dir / (name + ".gz")});
}

Dataset load_mnist_split(const fs::path& data_dir, Split split) {
    const std::string prefix = split == Split::train ? "train" : "t10k";
    const fs::path images = find_data_file(data_dir, "mnist", prefix + "-images-idx3-ubyte");
    const fs::path labels = find_data_file(data_dir, "mnist", prefix + "-labels-idx1-ubyte");
    if (images.empty() || labels.empty()) {
        throw Error("MNIST " + to_string(split) + " files not found under '" + data_dir.string() +
                    "' (expected mnist/" + prefix + "-images-idx3-ubyte[.gz]; set DATA_DIR)");
    }
    return load_mnist(images, labels, split);
}

Dataset load_cifar_split(const fs::path& data_dir, Split split) {
    std::vector<fs::path> paths;
    std::vector<std::string> names;
    if (split == Split::train) {
        for (int b = 1; b <= 5; ++b) names.push_back("data_batch_" + std::to_string(b) + ".bin");
    } else {
        names.push_back("test_batch.bin");
    }
    for (const auto& name : names) {
        const fs::path p = find_data_file(data_dir, "cifar-10-batches-bin", name);
        if (p.empty()) throw Error("CIFAR-10 file " + name + " not found under '" + data_dir.string() + "'");
        paths.push_back(p);
    }
    return load_cifar10(paths, split);
}

void check_model_matches(const ModelSpec& model, const Dataset& ds) {
    if (model.input_dim() != ds.input_dim()) {
        throw ValidationError("model input width " + std::to_string(model.input_dim()) + " does not match dataset width " +
                              std::to_string(ds.input_dim()));
    }
    if (model.num_classes() < ds.num_classes) {
        throw ValidationError("model has " + std::to_string(model.num_classes()) + " outputs for " +
                              std::to_string(ds.num_classes) + " classes");
    }
}

bool uses_checkpoints(const ScoreKind& k) { return k.name == ScoreName::grand || k.name == ScoreName::el2n; }

std::string accuracy_field(std::optional<double> v) { return v ? csv::format(*v) : std::string("n/a"); }

} // namespace

std::string to_string(DatasetKind d) {
    switch (d) {
    case DatasetKind::mnist: return "mnist";
    case DatasetKind::cifar10: return "cifar10";
    case DatasetKind::synthetic: return "synthetic";
    }
    return "?";
}

DatasetKind parse_dataset_kind(std::string_view s) {
    if (s == "mnist") return DatasetKind::mnist;
    if (s == "cifar10") return DatasetKind::cifar10;
    if (s == "synthetic") return DatasetKind::synthetic;
    throw ValidationError("unknown dataset '" + std::string(s) + "'");
}

std::string to_string(KeepDirection k) { return k == KeepDirection::highest ? "highest" : "lowest"; }

KeepDirection parse_keep(std::string_view s) {
    if (s == "highest") return KeepDirection::highest;
    if (s == "lowest") return KeepDirection::lowest;
    throw ValidationError("unknown keep direction '" + std::string(s) + "'");
}

std::size_t mid_epoch(std::size_t total_epochs) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.1 * static_cast<double>(total_epochs))));
}

void ExperimentConfig::validate() const {
    model.validate();
    TrainConfig t = train;
    t.checkpoint_epochs.clear();
    t.validate();
    if (score_runs < 1) throw ValidationError("score_runs must be >= 1");
    if (retrain_trials < 1) throw ValidationError("retrain_trials must be >= 1");
    for (std::size_t i = 0; i < prune_fractions.size(); ++i) {
        const double f = prune_fractions[i];
        if (!(f >= 0.0 && f < 1.0)) throw ValidationError("prune fractions must lie in [0, 1)");
        if (i > 0 && !(f > prune_fractions[i - 1])) throw ValidationError("prune fractions must be strictly increasing");
    }
    for (std::size_t e : score_epochs) {
        if (e > train.epochs) {
            throw ValidationError("score epoch " + std::to_string(e) + " exceeds training epochs " +
                                  std::to_string(train.epochs));
        }
    }
    for (const ScoreKind& k : planned_kinds()) {
        k.validate();
        if (k.epoch && *k.epoch > train.epochs) {
            throw ValidationError(k.label() + " is past the last training epoch " + std::to_string(train.epochs));
        }
        if (k.name == ScoreName::forget && score_split != Split::train) {
            throw ValidationError("forget scores exist only for the training split");
        }
    }
}

std::vector<ScoreKind> ExperimentConfig::planned_kinds() const {
    std::vector<ScoreKind> out;
    if (!kinds.empty()) {
        out = kinds;
    } else {
        for (std::size_t e : score_epochs) {
            out.push_back(ScoreKind::grand(e));
            out.push_back(ScoreKind::el2n(e));
        }
        if (score_split == Split::train) out.push_back(ScoreKind::forget(train.epochs));
        out.push_back(ScoreKind::input_norm());
        out.push_back(ScoreKind::random());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

ExperimentData load_experiment_data(const ExperimentConfig& cfg) {
    ExperimentData data;
    switch (cfg.dataset) {
    case DatasetKind::mnist:
        data.train = load_mnist_split(cfg.data_dir, Split::train);
        data.test = load_mnist_split(cfg.data_dir, Split::test);
        break;
    case DatasetKind::cifar10:
        data.train = load_cifar_split(cfg.data_dir, Split::train);
        data.test = load_cifar_split(cfg.data_dir, Split::test);
        break;
    case DatasetKind::synthetic:
        data.train = synthetic_gaussian(cfg.synthetic_classes, cfg.synthetic_dim, cfg.synthetic_per_class,
                                        hash_combine(cfg.master_seed, 1), Split::train);
        data.test = synthetic_gaussian(cfg.synthetic_classes, cfg.synthetic_dim, cfg.synthetic_test_per_class,
                                       hash_combine(cfg.master_seed, 2), Split::test);
        break;
    }
    if (cfg.train_size > 0) data.train = data.train.head(cfg.train_size);
    if (cfg.test_size > 0) data.test = data.test.head(cfg.test_size);
    return data;
}

TableMap run_scoring(const ExperimentConfig& cfg, const ExperimentData& data) {
    cfg.validate();
    check_model_matches(cfg.model, data.train);
    check_model_matches(cfg.model, data.test);
    const std::vector<ScoreKind> kinds = cfg.planned_kinds();

    std::set<std::size_t> checkpoint_epochs{0};
    std::size_t train_epochs = 0;
    for (const ScoreKind& k : kinds) {
        if (uses_checkpoints(k)) checkpoint_epochs.insert(*k.epoch);
        if (k.epoch) train_epochs = std::max(train_epochs, *k.epoch);
    }

    const fs::path runs_root = cfg.output_dir / "runs";
    fs::remove_all(runs_root);
    fs::create_directories(runs_root);

    std::vector<RunHandle> runs(cfg.score_runs);
    std::vector<std::optional<double>> train_acc(cfg.score_runs);
    std::vector<std::optional<double>> test_acc(cfg.score_runs);
    parallel_for(cfg.score_runs, cfg.jobs, [&](std::size_t m) {
        const std::uint64_t seed = cfg.master_seed + m;
        runs[m].run_index = m;
        runs[m].checkpoint_dir = runs_root / ("run_" + std::to_string(m));
        const CheckpointStore store(runs[m].checkpoint_dir);
        if (train_epochs == 0) {
            store.save(0, init_params(cfg.model, seed));
            return;
        }
        TrainConfig tc = cfg.train;
        tc.epochs = train_epochs;
        tc.seed = seed;
        tc.checkpoint_epochs = checkpoint_epochs;
        TrainResult result = train(cfg.model, data.train, data.test, tc, &store);
        train_acc[m] = result.final_train_accuracy();
        test_acc[m] = result.test_accuracy;
        runs[m].correctness = std::move(result.correctness);
    });

    std::string runs_csv = "run,seed,epochs,final_train_accuracy,test_accuracy\n";
    for (std::size_t m = 0; m < cfg.score_runs; ++m) {
        runs_csv += std::to_string(m) + "," + std::to_string(cfg.master_seed + m) + "," + std::to_string(train_epochs) +
                    "," + accuracy_field(train_acc[m]) + "," + accuracy_field(test_acc[m]) + "\n";
    }
    csv::write_text(cfg.output_dir / "runs.csv", runs_csv);

    TableOptions options;
    options.el2n_squared = cfg.el2n_squared;
    options.input_space = cfg.input_space;
    options.random_trials = cfg.score_runs;
    options.random_seed = hash_combine(cfg.master_seed, hash_string("random"));
    options.jobs = cfg.jobs;

    const Dataset& scored = data.scored(cfg.score_split);
    TableMap tables;
    for (const ScoreKind& k : kinds) {
        ScoreTable table = compute_table(k, scored, runs, options);
        write_table_csv(table, cfg.output_dir / table_filename(k));
        tables.emplace(k, std::move(table));
    }
    return tables;
}

std::size_t kept_count(std::size_t n, double fraction) {
    const double exact = (1.0 - fraction) * static_cast<double>(n);
    const double nearest = std::round(exact);
    const double kept = std::abs(exact - nearest) < 1e-9 ? nearest : std::ceil(exact);
    return std::min(n, static_cast<std::size_t>(std::max(0.0, kept)));
}

Dataset prune(const Dataset& ds, std::span<const double> scores, double fraction, KeepDirection keep) {
    if (scores.size() != ds.size()) {
        throw DimensionError("prune got " + std::to_string(scores.size()) + " scores for " + std::to_string(ds.size()) +
                             " examples");
    }
    if (!(fraction >= 0.0 && fraction < 1.0)) throw ValidationError("prune fraction must lie in [0, 1)");

    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return keep == KeepDirection::highest ? scores[a] > scores[b] : scores[a] < scores[b];
        return ds.ids[a] < ds.ids[b];
    });
    order.resize(kept_count(ds.size(), fraction));
    std::sort(order.begin(), order.end());
    return ds.select(order);
}

double SweepResult::mean_accuracy(const ScoreKind& kind, double fraction) const {
    double total = 0.0;
    std::size_t n = 0;
    for (const SweepRow& r : rows) {
        if (r.kind == kind && r.fraction == fraction) {
            total += r.test_accuracy;
            ++n;
        }
    }
    return n > 0 ? total / static_cast<double>(n) : std::nan("");
}

std::uint64_t retrain_seed(std::uint64_t master_seed, double fraction, std::size_t trial) {
    std::uint64_t s = hash_combine(master_seed, hash_string("retrain"));
    s = hash_combine(s, std::bit_cast<std::uint64_t>(fraction));
    return hash_combine(s, trial);
}

SweepResult run_sweep(const ExperimentConfig& cfg, const ExperimentData& data, const TableMap& tables) {
    cfg.validate();
    check_model_matches(cfg.model, data.train);
    for (const auto& [kind, table] : tables) {
        if (table.n_examples() != data.train.size()) {
            throw DimensionError(kind.label() + " has " + std::to_string(table.n_examples()) +
                                 " scores but the training set has " + std::to_string(data.train.size()) +
                                 " examples; sweeps need training-split scores");
        }
    }

    struct Job {
        std::size_t unique_index;
    };
    // Jobs that select the same examples with the same seed train the same
    // model, so each distinct (seed, selection) is trained once.
    std::map<std::pair<std::uint64_t, std::vector<std::size_t>>, std::size_t> unique_lookup;
    std::vector<std::pair<std::uint64_t, std::vector<std::size_t>>> unique_jobs;
    SweepResult sweep;
    std::vector<Job> jobs;
    for (const auto& [kind, table] : tables) {
        for (double fraction : cfg.prune_fractions) {
            for (std::size_t trial = 0; trial < cfg.retrain_trials; ++trial) {
                const std::span<const double> scores =
                    kind.name == ScoreName::random ? table.trials.row(trial % table.n_trials()) : table.mean;
                const Dataset pruned = prune(data.train, scores, fraction, cfg.keep);
                auto key = std::make_pair(retrain_seed(cfg.master_seed, fraction, trial), pruned.ids);
                auto [it, inserted] = unique_lookup.emplace(key, unique_jobs.size());
                if (inserted) unique_jobs.push_back(std::move(key));
                jobs.push_back({it->second});
                sweep.rows.push_back({kind, fraction, trial, 0.0});
            }
        }
    }

    std::vector<std::size_t> position_of_id(0);
    for (std::size_t i = 0; i < data.train.size(); ++i) {
        const std::size_t id = data.train.ids[i];
        if (id >= position_of_id.size()) position_of_id.resize(id + 1, 0);
        position_of_id[id] = i;
    }

    std::vector<double> accuracy(unique_jobs.size(), 0.0);
    parallel_for(unique_jobs.size(), cfg.jobs, [&](std::size_t u) {
        const auto& [seed, ids] = unique_jobs[u];
        std::vector<std::size_t> positions;
        positions.reserve(ids.size());
        for (std::size_t id : ids) positions.push_back(position_of_id[id]);
        TrainConfig tc = cfg.train;
        tc.seed = seed;
        tc.checkpoint_epochs.clear();
        accuracy[u] = train(cfg.model, data.train.select(positions), data.test, tc, nullptr).test_accuracy;
    });
    for (std::size_t j = 0; j < jobs.size(); ++j) sweep.rows[j].test_accuracy = accuracy[jobs[j].unique_index];

    csv::write_text(cfg.output_dir / "sweep.csv", sweep_to_csv(sweep));
    return sweep;
}

std::string sweep_to_csv(const SweepResult& sweep) {
    std::string out = "kind,fraction,trial,test_accuracy\n";
    for (const SweepRow& r : sweep.rows) {
        out += r.kind.label() + "," + csv::format(r.fraction) + "," + std::to_string(r.trial) + "," +
               csv::format(r.test_accuracy) + "\n";
    }
    return out;
}

SweepResult read_sweep_csv(const fs::path& path) {
    const auto rows = csv::read_rows(path);
    if (rows.empty() || csv::join(rows[0]) != "kind,fraction,trial,test_accuracy") {
        throw FormatError("bad sweep header in " + path.string());
    }
    SweepResult sweep;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != 4) throw FormatError("ragged row in " + path.string());
        sweep.rows.push_back({ScoreKind::parse(rows[i][0]), csv::parse_double(rows[i][1]),
                              static_cast<std::size_t>(csv::parse_double(rows[i][2])), csv::parse_double(rows[i][3])});
    }
    return sweep;
}

TableMap load_tables(const fs::path& dir) {
    TableMap tables;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (!entry.is_regular_file() || !name.starts_with("scores_") || !name.ends_with(".csv")) continue;
        const ScoreKind kind = ScoreKind::parse(name.substr(7, name.size() - 7 - 4));
        tables.emplace(kind, read_table_csv(entry.path(), kind));
    }
    return tables;
}

void export_report(const TableMap& tables, const SweepResult& sweep, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    std::vector<ScoreTable> ordered;
    for (const auto& [kind, table] : tables) {
        write_table_csv(table, out_dir / table_filename(kind));
        ordered.push_back(table);
    }

    // Pruning sweep: mean accuracy per kind over trials.
    csv::write_text(out_dir / "sweep.csv", sweep_to_csv(sweep));
    std::vector<svg::Series> sweep_series;
    std::vector<ScoreKind> sweep_kinds;
    std::vector<double> fractions;
    for (const SweepRow& r : sweep.rows) {
        if (std::find(sweep_kinds.begin(), sweep_kinds.end(), r.kind) == sweep_kinds.end()) sweep_kinds.push_back(r.kind);
        if (std::find(fractions.begin(), fractions.end(), r.fraction) == fractions.end()) fractions.push_back(r.fraction);
    }
    std::sort(fractions.begin(), fractions.end());
    for (const ScoreKind& k : sweep_kinds) {
        svg::Series s{k.label(), {}, {}};
        for (double f : fractions) {
            const double acc = sweep.mean_accuracy(k, f);
            if (std::isnan(acc)) continue;
            s.x.push_back(f);
            s.y.push_back(acc);
        }
        sweep_series.push_back(std::move(s));
    }
    csv::write_text(out_dir / "sweep.svg",
                    svg::line_chart("Pruning sweep", "fraction of training data pruned", "test accuracy", sweep_series));

    // Rank correlations between mean scores.
    const CorrelationMatrix corr = ordered.empty() ? CorrelationMatrix{} : correlation_matrix(ordered);
    csv::write_text(out_dir / "corr_matrix.csv", correlation_to_csv(corr));
    csv::write_text(out_dir / "corr_matrix.svg", svg::heatmap("Spearman rank correlation", corr.labels, corr.values));

    // Average-normalized scores sorted by a reference kind.
    const auto grand0 = tables.find(ScoreKind::grand(0));
    const auto inorm = tables.find(ScoreKind::input_norm());
    std::string curves_csv = "position,example_id";
    std::vector<svg::Series> curve_series;
    std::string curve_title = "Sorted average normalized scores";
    if (!ordered.empty()) {
        const ScoreTable& reference = grand0 != tables.end() ? grand0->second : ordered.front();
        const SortedCurve ref_curve = sorted_curve(average_normalized(reference));
        std::vector<std::vector<double>> columns;
        for (const ScoreTable& t : ordered) {
            curves_csv += "," + t.kind.label();
            columns.push_back(apply_permutation(average_normalized(t), ref_curve.permutation));
        }
        curves_csv += "\n";
        std::vector<double> positions(ref_curve.permutation.size());
        std::iota(positions.begin(), positions.end(), 0.0);
        for (std::size_t k = 0; k < ref_curve.permutation.size(); ++k) {
            curves_csv += std::to_string(k) + "," + std::to_string(reference.example_ids[ref_curve.permutation[k]]);
            for (const auto& col : columns) curves_csv += "," + csv::format(col[k]);
            curves_csv += "\n";
        }
        for (std::size_t c = 0; c < ordered.size(); ++c) {
            const bool shown = grand0 == tables.end() || inorm == tables.end() || ordered[c].kind == grand0->first ||
                               ordered[c].kind == inorm->first;
            if (shown) curve_series.push_back({ordered[c].kind.label(), positions, columns[c]});
        }
        curve_title += " (sorted by " + reference.kind.label() + ")";
        if (grand0 != tables.end() && inorm != tables.end()) {
            const auto rho = spearman(grand0->second.mean, inorm->second.mean);
            curve_title += ", spearman " + (rho ? csv::format(std::round(*rho * 1000.0) / 1000.0) : std::string("n/a"));
        }
    } else {
        curves_csv += "\n";
    }
    csv::write_text(out_dir / "sorted_curves.csv", curves_csv);
    csv::write_text(out_dir / "sorted_curves.svg",
                    svg::line_chart(curve_title, "example (sorted)", "average normalized score", curve_series));

    // ln(input norm / GraNd at initialization).
    Histogram hist;
    if (grand0 != tables.end() && inorm != tables.end()) {
        const RatioSummary summary = ratio_summary(inorm->second.mean, grand0->second.mean);
        hist = summary.histogram;
        csv::write_text(out_dir / "ratio_summary.csv",
                        "mean_log,std_log,skewness_log,used,excluded_zero\n" + csv::format(summary.mean_log) + "," +
                            csv::format(summary.std_log) + "," + csv::format(summary.skewness_log) + "," +
                            std::to_string(summary.used) + "," + std::to_string(summary.excluded_zero) + "\n");
    }
    csv::write_text(out_dir / "ratio_hist.csv", histogram_to_csv(hist));
    csv::write_text(out_dir / "ratio_hist.svg",
                    svg::histogram("ln(input norm / GraNd@0)", "log ratio", hist.bin_edges, hist.counts));
}

} // namespace datadiet
