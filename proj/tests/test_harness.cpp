#include "datadiet/csv.hpp"
#include "datadiet/error.hpp"
#include "datadiet/harness.hpp"

#include "fixtures/tmpdir.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

using namespace datadiet;
namespace fs = std::filesystem;

namespace {

Dataset indexed(std::size_t n) {
    Dataset ds;
    ds.inputs = Tensor2(n, 1);
    for (std::size_t i = 0; i < n; ++i) ds.inputs(i, 0) = double(i);
    ds.ids.resize(n);
    std::iota(ds.ids.begin(), ds.ids.end(), 100);
    ds.labels.assign(n, 0);
    ds.num_classes = 2;
    return ds;
}

ExperimentConfig synthetic_config(const fs::path& out) {
    ExperimentConfig cfg;
    cfg.dataset = DatasetKind::synthetic;
    cfg.synthetic_classes = 4;
    cfg.synthetic_dim = 8;
    cfg.synthetic_per_class = 40;
    cfg.synthetic_test_per_class = 25;
    cfg.model = ModelSpec{{8, 16, 4}};
    cfg.train.epochs = 4;
    cfg.train.batch_size = 16;
    cfg.score_runs = 2;
    cfg.score_epochs = {0, 1};
    cfg.prune_fractions = {0.0, 0.5};
    cfg.retrain_trials = 2;
    cfg.output_dir = out;
    cfg.master_seed = 5;
    return cfg;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("kept_count") {
    CHECK(kept_count(10, 0.0) == 10);
    CHECK(kept_count(10, 0.9) == 1);
    CHECK(kept_count(10, 0.7) == 3);
    CHECK(kept_count(10, 0.3) == 7);
    CHECK(kept_count(7, 0.5) == 4);
    CHECK(kept_count(5000, 0.3) == 3500);
    for (std::size_t n = 1; n < 200; ++n) {
        for (double f : {0.1, 0.25, 0.3, 0.5, 0.7, 0.9, 0.99}) {
            const std::size_t k = kept_count(n, f);
            CHECK(k >= 1);
            CHECK(double(k) >= (1 - f) * double(n) - 1e-9);
            CHECK(double(k) < (1 - f) * double(n) + 1);
        }
    }
}

TEST_CASE("prune examples") {
    const Dataset ds = indexed(4);
    const std::vector<double> s{0.1, 0.9, 0.5, 0.5};
    CHECK(prune(ds, s, 0.0, KeepDirection::highest) == ds);
    const Dataset top = prune(ds, s, 0.5, KeepDirection::highest);
    CHECK(top.ids == std::vector<std::size_t>{101, 102});
    const Dataset low = prune(ds, s, 0.5, KeepDirection::lowest);
    CHECK(low.ids == std::vector<std::size_t>{100, 102});

    const Dataset ten = indexed(10);
    std::vector<double> t{1, 4, 2, 4, 0, 3, 4, 1, 1, 2};
    CHECK(prune(ten, t, 0.9, KeepDirection::highest).ids == std::vector<std::size_t>{101});
    CHECK(prune(ten, t, 0.9, KeepDirection::lowest).ids == std::vector<std::size_t>{104});

    CHECK_THROWS_AS(prune(ds, std::vector<double>{1, 2}, 0.5, KeepDirection::highest), DimensionError);
    CHECK_THROWS_AS(prune(ds, s, 1.0, KeepDirection::highest), ValidationError);
}

TEST_CASE("prune keeps dataset order and ties by position") {
    const Dataset ds = indexed(9);
    const std::vector<double> s{2, 1, 2, 3, 2, 1, 3, 2, 2};
    const Dataset out = prune(ds, s, 0.5, KeepDirection::highest);
    CHECK(out.size() == kept_count(9, 0.5));
    CHECK(out.ids == std::vector<std::size_t>{100, 102, 103, 104, 106});
}

TEST_CASE("prune output size matches kept_count") {
    for (std::size_t n : {1, 2, 3, 17, 100}) {
        const Dataset ds = indexed(n);
        std::vector<double> s(n);
        for (std::size_t i = 0; i < n; ++i) s[i] = double((i * 7) % 5);
        for (double f : {0.0, 0.3, 0.5, 0.7, 0.95}) {
            const Dataset out = prune(ds, s, f, KeepDirection::highest);
            CHECK(out.size() == kept_count(n, f));
            CHECK(std::is_sorted(out.ids.begin(), out.ids.end()));
        }
    }
}

TEST_CASE("mid_epoch and retrain seeds") {
    CHECK(mid_epoch(10) == 1);
    CHECK(mid_epoch(200) == 20);
    CHECK(mid_epoch(3) == 1);
    CHECK(mid_epoch(25) == 3);
    CHECK(retrain_seed(0, 0.5, 1) == retrain_seed(0, 0.5, 1));
    CHECK(retrain_seed(0, 0.5, 1) != retrain_seed(0, 0.5, 2));
    CHECK(retrain_seed(0, 0.5, 1) != retrain_seed(0, 0.3, 1));
    CHECK(retrain_seed(0, 0.5, 1) != retrain_seed(1, 0.5, 1));
}

TEST_CASE("config validation") {
    ExperimentConfig cfg;
    cfg.prune_fractions = {0.0, 0.5, 0.3};
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg.prune_fractions = {0.0, 1.0};
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = ExperimentConfig{};
    cfg.score_runs = 0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = ExperimentConfig{};
    cfg.score_epochs = {0, 11};
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = ExperimentConfig{};
    CHECK_NOTHROW(cfg.validate());
    const auto kinds = cfg.planned_kinds();
    CHECK(std::find(kinds.begin(), kinds.end(), ScoreKind::forget(10)) != kinds.end());
    CHECK(std::find(kinds.begin(), kinds.end(), ScoreKind::grand(0)) != kinds.end());
    CHECK(std::find(kinds.begin(), kinds.end(), ScoreKind::el2n(1)) != kinds.end());
}

TEST_CASE("one run at epoch 0 gives single-row tables") {
    ExperimentConfig cfg = synthetic_config(fixtures::fresh_dir("m1"));
    cfg.score_runs = 1;
    cfg.score_epochs = {0};
    cfg.kinds = {ScoreKind::grand(0)};
    const TableMap tables = run_scoring(cfg, load_experiment_data(cfg));
    CHECK(tables.size() == 1);
    CHECK(tables.at(ScoreKind::grand(0)).n_trials() == 1);
    CHECK(fs::exists(cfg.output_dir / "scores_grand_e0.csv"));
}

TEST_CASE("scoring and sweeping are deterministic and well-formed") {
    ExperimentConfig a = synthetic_config(fixtures::fresh_dir("det_a"));
    ExperimentConfig b = synthetic_config(fixtures::fresh_dir("det_b"));
    const ExperimentData data = load_experiment_data(a);
    const TableMap ta = run_scoring(a, data);
    const TableMap tb = run_scoring(b, load_experiment_data(b));
    CHECK(ta == tb);
    for (const auto& [kind, table] : ta) {
        CHECK(slurp(a.output_dir / table_filename(kind)) == slurp(b.output_dir / table_filename(kind)));
        if (kind.name == ScoreName::input_norm) {
            CHECK(table.n_trials() == 1);
        } else {
            CHECK(table.n_trials() == 2);
        }
    }
    CHECK(slurp(a.output_dir / "runs.csv") == slurp(b.output_dir / "runs.csv"));
    CHECK(ta.contains(ScoreKind::forget(4)));
    CHECK(ta.contains(ScoreKind::el2n(1)));

    const SweepResult sa = run_sweep(a, data, ta);
    const SweepResult sb = run_sweep(b, data, tb);
    CHECK(sa == sb);
    CHECK(sa.rows.size() == ta.size() * 2 * 2);
    for (const auto& row : sa.rows) CHECK((row.test_accuracy >= 0.0 && row.test_accuracy <= 1.0));
    for (std::size_t trial = 0; trial < 2; ++trial) {
        std::set<double> at_zero;
        for (const auto& row : sa.rows) {
            if (row.fraction == 0.0 && row.trial == trial) at_zero.insert(row.test_accuracy);
        }
        CHECK(at_zero.size() == 1);
    }
    CHECK(read_sweep_csv(a.output_dir / "sweep.csv") == sa);
    CHECK(load_tables(a.output_dir) == ta);
}

TEST_CASE("explicit kinds bring their own checkpoint epochs") {
    ExperimentConfig cfg = synthetic_config(fixtures::fresh_dir("explicit"));
    cfg.score_runs = 1;
    cfg.score_epochs = {0};
    cfg.kinds = {ScoreKind::grand(2)};
    const TableMap tables = run_scoring(cfg, load_experiment_data(cfg));
    CHECK(tables.at(ScoreKind::grand(2)).n_trials() == 1);
    CHECK(fs::exists(cfg.output_dir / "runs" / "run_0" / "ckpt_2.bin"));
    cfg.kinds = {ScoreKind::grand(5)};
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("random pruning accuracy does not rise with the fraction removed") {
    ExperimentConfig cfg = synthetic_config(fixtures::fresh_dir("monotone"));
    cfg.synthetic_per_class = 150;
    cfg.score_runs = 3;
    cfg.score_epochs = {0};
    cfg.kinds = {ScoreKind::random()};
    cfg.prune_fractions = {0.0, 0.5, 0.9};
    cfg.retrain_trials = 3;
    const ExperimentData data = load_experiment_data(cfg);
    const SweepResult s = run_sweep(cfg, data, run_scoring(cfg, data));
    const double a0 = s.mean_accuracy(ScoreKind::random(), 0.0);
    const double a5 = s.mean_accuracy(ScoreKind::random(), 0.5);
    const double a9 = s.mean_accuracy(ScoreKind::random(), 0.9);
    CHECK(a5 <= a0 + 0.02);
    CHECK(a9 <= a5 + 0.02);
}

TEST_CASE("report export") {
    ExperimentConfig cfg = synthetic_config(fixtures::fresh_dir("report_src"));
    cfg.kinds = {ScoreKind::grand(0), ScoreKind::input_norm()};
    const TableMap tables = run_scoring(cfg, load_experiment_data(cfg));

    const fs::path out = fixtures::fresh_dir("report");
    export_report(tables, SweepResult{}, out);
    for (const char* f : {"scores_grand_e0.csv", "scores_input_norm.csv", "sweep.csv", "corr_matrix.csv",
                          "sorted_curves.csv", "ratio_hist.csv", "ratio_summary.csv", "sweep.svg", "corr_matrix.svg",
                          "sorted_curves.svg", "ratio_hist.svg"}) {
        CHECK_MESSAGE(fs::exists(out / f), f);
    }
    CHECK(csv::read_rows(out / "sweep.csv").size() == 1);
    const auto corr = csv::read_rows(out / "corr_matrix.csv");
    REQUIRE(corr.size() == 3);
    CHECK(corr[0].size() == 3);
    CHECK(corr[1][1] == "1");
    CHECK(corr[2][2] == "1");

    const fs::path again = fixtures::fresh_dir("report_again");
    export_report(tables, SweepResult{}, again);
    for (const auto& e : fs::directory_iterator(out)) {
        CHECK(slurp(e.path()) == slurp(again / e.path().filename()));
    }
}
