// datadiet: score, prune and compare training examples.
//
//   datadiet score        train scoring runs and write scores_<kind>.csv
//   datadiet sweep        retrain on pruned subsets and write sweep.csv
//   datadiet correlate    Spearman matrix of the score tables
//   datadiet report       CSV + SVG figure data
//   datadiet oracle-check closed-form vs autodiff gradient norms
//
// Exit codes: 0 success, 2 validation error, 1 runtime error.

#include "datadiet/csv.hpp"
#include "datadiet/error.hpp"
#include "datadiet/harness.hpp"
#include "datadiet/oracle.hpp"
#include "datadiet/scores.hpp"
#include "datadiet/stats.hpp"
#include "datadiet/util.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>

namespace fs = std::filesystem;
using namespace datadiet;

namespace {

struct CliOptions {
    std::string dataset = "mnist";
    std::string data_dir;
    std::size_t train_size = 0;
    std::size_t test_size = 0;
    std::size_t synthetic_classes = 10;
    std::size_t synthetic_dim = 20;
    std::size_t synthetic_per_class = 100;
    std::size_t synthetic_test_per_class = 50;

    std::vector<std::size_t> hidden{128};
    bool linear = false;
    std::string activation = "relu";
    std::string init = "he_normal";
    bool no_bias = false;

    std::size_t epochs = 10;
    std::size_t batch_size = 64;
    double lr = 0.05;
    double momentum = 0.9;

    std::size_t runs = 4;
    std::vector<std::size_t> score_epochs;
    std::vector<std::string> kinds;
    std::string score_split = "train";
    bool el2n_unsquared = false;
    std::string input_space = "normalized";

    std::vector<double> fractions{0.0, 0.3, 0.5, 0.7};
    std::size_t retrain_trials = 3;
    std::string keep = "highest";

    std::string out = "out";
    std::string scores_dir;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;

    // oracle-check
    std::size_t instances = 1000;
    std::size_t classes = 10;
    std::size_t dim = 50;
};

void add_experiment_options(CLI::App& app, CliOptions& o) {
    app.add_option("--dataset", o.dataset, "mnist, cifar10 or synthetic")->capture_default_str();
    app.add_option("--data-dir", o.data_dir, "Directory holding mnist/ or cifar-10-batches-bin/")->envname("DATA_DIR");
    app.add_option("--train-size", o.train_size, "Keep the first n training examples (0 = all)")->capture_default_str();
    app.add_option("--test-size", o.test_size, "Keep the first n test examples (0 = all)")->capture_default_str();
    app.add_option("--synthetic-classes", o.synthetic_classes)->capture_default_str();
    app.add_option("--synthetic-dim", o.synthetic_dim)->capture_default_str();
    app.add_option("--synthetic-per-class", o.synthetic_per_class)->capture_default_str();
    app.add_option("--synthetic-test-per-class", o.synthetic_test_per_class)->capture_default_str();

    app.add_option("--hidden", o.hidden, "Hidden layer widths, comma separated")->delimiter(',')->capture_default_str();
    app.add_flag("--linear", o.linear, "No hidden layers (softmax regression)");
    app.add_option("--activation", o.activation, "relu or identity")->capture_default_str();
    app.add_option("--init", o.init, "he_normal or glorot_uniform")->capture_default_str();
    app.add_flag("--no-bias", o.no_bias, "Layers without bias vectors");

    app.add_option("--epochs", o.epochs)->capture_default_str();
    app.add_option("--batch-size", o.batch_size)->capture_default_str();
    app.add_option("--lr", o.lr)->capture_default_str();
    app.add_option("--momentum", o.momentum)->capture_default_str();

    app.add_option("--runs", o.runs, "Independent scoring runs M")->capture_default_str();
    app.add_option("--score-epochs", o.score_epochs, "Default: 0 and round(0.1 * epochs)")->delimiter(',');
    app.add_option("--kinds", o.kinds, "Score kinds such as grand@0,el2n@1,forget@10,input_norm,random")
        ->delimiter(',');
    app.add_option("--score-split", o.score_split, "train or test")->capture_default_str();
    app.add_flag("--el2n-unsquared", o.el2n_unsquared, "Use the unsquared error norm");
    app.add_option("--input-space", o.input_space, "normalized or raw")->capture_default_str();

    app.add_option("--fractions", o.fractions, "Pruned fractions, strictly increasing")
        ->delimiter(',')
        ->capture_default_str();
    app.add_option("--retrain-trials", o.retrain_trials)->capture_default_str();
    app.add_option("--keep", o.keep, "highest or lowest")->capture_default_str();

    app.add_option("--out", o.out, "Output directory")->capture_default_str();
    app.add_option("--scores", o.scores_dir, "Directory with scores_*.csv (default: --out)");
    app.add_option("--seed", o.seed, "Master seed")->capture_default_str();
    app.add_option("--jobs", o.jobs, "Worker threads")->capture_default_str();
}

ExperimentConfig to_config(const CliOptions& o) {
    ExperimentConfig cfg;
    cfg.dataset = parse_dataset_kind(o.dataset);
    cfg.data_dir = o.data_dir;
    cfg.train_size = o.train_size;
    cfg.test_size = o.test_size;
    cfg.synthetic_classes = o.synthetic_classes;
    cfg.synthetic_dim = o.synthetic_dim;
    cfg.synthetic_per_class = o.synthetic_per_class;
    cfg.synthetic_test_per_class = o.synthetic_test_per_class;

    std::size_t input_dim = 784;
    std::size_t classes = 10;
    if (cfg.dataset == DatasetKind::cifar10) input_dim = 3072;
    if (cfg.dataset == DatasetKind::synthetic) {
        input_dim = o.synthetic_dim;
        classes = o.synthetic_classes;
    }
    cfg.model.layer_widths = {input_dim};
    if (!o.linear) {
        for (std::size_t h : o.hidden) cfg.model.layer_widths.push_back(h);
    }
    cfg.model.layer_widths.push_back(classes);
    cfg.model.activation = parse_activation(o.activation);
    cfg.model.init = parse_init(o.init);
    cfg.model.bias = !o.no_bias;

    cfg.train.epochs = o.epochs;
    cfg.train.batch_size = o.batch_size;
    cfg.train.learning_rate = o.lr;
    cfg.train.momentum = o.momentum;

    cfg.score_runs = o.runs;
    if (o.score_epochs.empty()) {
        cfg.score_epochs = {0, mid_epoch(o.epochs)};
    } else {
        cfg.score_epochs = {o.score_epochs.begin(), o.score_epochs.end()};
    }
    for (const auto& k : o.kinds) cfg.kinds.push_back(ScoreKind::parse(k));
    if (o.score_split == "train") {
        cfg.score_split = Split::train;
    } else if (o.score_split == "test") {
        cfg.score_split = Split::test;
    } else {
        throw ValidationError("score split must be train or test");
    }
    cfg.el2n_squared = !o.el2n_unsquared;
    if (o.input_space == "normalized") {
        cfg.input_space = InputSpace::normalized;
    } else if (o.input_space == "raw") {
        cfg.input_space = InputSpace::raw;
    } else {
        throw ValidationError("input space must be normalized or raw");
    }

    cfg.prune_fractions = o.fractions;
    cfg.retrain_trials = o.retrain_trials;
    cfg.keep = parse_keep(o.keep);
    cfg.output_dir = o.out;
    cfg.master_seed = o.seed;
    cfg.jobs = std::max<std::size_t>(1, o.jobs);
    cfg.validate();
    return cfg;
}

fs::path scores_dir(const CliOptions& o) { return o.scores_dir.empty() ? fs::path(o.out) : fs::path(o.scores_dir); }

TableMap load_tables_or_fail(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw ValidationError("score directory '" + dir.string() + "' does not exist");
    TableMap tables = load_tables(dir);
    if (tables.empty()) throw ValidationError("no scores_*.csv files in '" + dir.string() + "'");
    return tables;
}

int cmd_score(const CliOptions& o) {
    const ExperimentConfig cfg = to_config(o);
    const ExperimentData data = load_experiment_data(cfg);
    const TableMap tables = run_scoring(cfg, data);
    for (const auto& [kind, table] : tables) {
        std::printf("%-12s %zu trials x %zu examples -> %s\n", kind.label().c_str(), table.n_trials(),
                    table.n_examples(), (cfg.output_dir / table_filename(kind)).c_str());
    }
    return 0;
}

int cmd_sweep(const CliOptions& o) {
    const ExperimentConfig cfg = to_config(o);
    const TableMap all = load_tables_or_fail(scores_dir(o));
    TableMap tables;
    if (cfg.kinds.empty()) {
        tables = all;
    } else {
        for (const ScoreKind& k : cfg.kinds) {
            const auto it = all.find(k);
            if (it == all.end()) throw ValidationError("no score table for " + k.label());
            tables.insert(*it);
        }
    }
    const ExperimentData data = load_experiment_data(cfg);
    const SweepResult sweep = run_sweep(cfg, data, tables);
    for (const auto& [kind, table] : tables) {
        std::printf("%-12s", kind.label().c_str());
        for (double f : cfg.prune_fractions) std::printf("  %.2f:%.4f", f, sweep.mean_accuracy(kind, f));
        std::printf("\n");
    }
    return 0;
}

int cmd_correlate(const CliOptions& o) {
    const TableMap tables = load_tables_or_fail(scores_dir(o));
    std::vector<ScoreTable> ordered;
    for (const auto& [kind, table] : tables) ordered.push_back(table);
    const CorrelationMatrix m = correlation_matrix(ordered);
    const std::string text = correlation_to_csv(m);
    fs::create_directories(o.out);
    csv::write_text(fs::path(o.out) / "corr_matrix.csv", text);
    std::fputs(text.c_str(), stdout);
    return 0;
}

int cmd_report(const CliOptions& o) {
    const TableMap tables = load_tables_or_fail(scores_dir(o));
    const fs::path sweep_path = scores_dir(o) / "sweep.csv";
    const SweepResult sweep = fs::exists(sweep_path) ? read_sweep_csv(sweep_path) : SweepResult{};
    export_report(tables, sweep, o.out);
    std::printf("report written to %s\n", o.out.c_str());
    return 0;
}

int cmd_oracle_check(const CliOptions& o) {
    if (o.classes < 2 || o.dim < 1 || o.instances < 1) throw ValidationError("oracle-check needs classes >= 2, dim >= 1");
    std::mt19937_64 rng(o.seed);
    std::normal_distribution<double> normal;
    std::uniform_int_distribution<std::size_t> label(0, o.classes - 1);
    double worst = 0.0;
    for (std::size_t n = 0; n < o.instances; ++n) {
        LinearModel model{Tensor2(o.classes, o.dim)};
        for (double& w : model.weight.data) w = normal(rng) * std::sqrt(2.0 / static_cast<double>(o.dim));
        std::vector<double> x(o.dim);
        for (double& v : x) v = normal(rng);
        const std::size_t y = label(rng);
        const double closed = closed_form_grad_norm(model, x, y);
        const double autodiff = grand_one(model.as_params(), x, y);
        worst = std::max(worst, std::abs(closed - autodiff) / std::max(closed, 1e-300));
    }
    const bool ok = worst < 1e-9;
    std::printf("oracle-check: %zu instances (C=%zu, d=%zu), max relative error %.3e -> %s\n", o.instances, o.classes,
                o.dim, worst, ok ? "ok" : "FAILED");
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Per-example data pruning scores and experiment harness"};
    app.set_config("--config", "", "Plain key=value file with option values (keys are long option names)");
    app.require_subcommand(1);
    app.fallthrough();

    CliOptions o;
    add_experiment_options(app, o);
    auto* score = app.add_subcommand("score", "Train scoring runs and write one score table per kind");
    auto* sweep = app.add_subcommand("sweep", "Retrain on pruned subsets and record test accuracy");
    auto* correlate = app.add_subcommand("correlate", "Spearman rank correlations between score tables");
    auto* report = app.add_subcommand("report", "Write CSV and SVG figure data");
    auto* oracle = app.add_subcommand("oracle-check", "Compare closed-form and autodiff gradient norms");
    oracle->add_option("--instances", o.instances)->capture_default_str();
    oracle->add_option("--classes", o.classes)->capture_default_str();
    oracle->add_option("--dim", o.dim)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*score) return cmd_score(o);
        if (*sweep) return cmd_sweep(o);
        if (*correlate) return cmd_correlate(o);
        if (*report) return cmd_report(o);
        if (*oracle) return cmd_oracle_check(o);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
