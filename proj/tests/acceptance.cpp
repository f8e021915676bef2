// Acceptance suite: one PASS/FAIL line per criterion.
//
// Criteria 3-5 need MNIST under $DATA_DIR/mnist. Without it they print SKIP
// and the binary exits 77 (unless another criterion failed).
//
//   acceptance [criterion...]     run a subset, e.g. "acceptance 1 7"

#include "datadiet/checkpoint.hpp"
#include "datadiet/error.hpp"
#include "datadiet/harness.hpp"
#include "datadiet/nn.hpp"
#include "datadiet/oracle.hpp"
#include "datadiet/scores.hpp"
#include "datadiet/stats.hpp"
#include "datadiet/util.hpp"

#include "fixtures/buggy_restore.hpp"
#include "fixtures/step0_check.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace datadiet;

namespace {

enum class Outcome { pass, fail, skip };

struct Verdict {
    Outcome outcome;
    std::string detail;
};

fs::path work_root() { return fs::path(DATADIET_ACCEPTANCE_WORKDIR); }

fs::path data_dir() {
    if (const char* env = std::getenv("DATA_DIR"); env != nullptr && *env != '\0') return env;
    return DATADIET_DEFAULT_DATA_DIR;
}

bool have_mnist() {
    const fs::path d = data_dir() / "mnist";
    return (fs::exists(d / "train-images-idx3-ubyte") || fs::exists(d / "train-images-idx3-ubyte.gz")) &&
           (fs::exists(d / "t10k-images-idx3-ubyte") || fs::exists(d / "t10k-images-idx3-ubyte.gz"));
}

std::string fmt(const char* format, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, format, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. Closed-form gradient norm of the bias-free linear model.
Verdict oracle_equivalence() {
    const auto t0 = std::chrono::steady_clock::now();
    constexpr std::size_t kInstances = 1000, kClasses = 10, kDim = 50;
    std::mt19937_64 rng(20240101);
    std::normal_distribution<double> normal;
    std::uniform_int_distribution<std::size_t> label(0, kClasses - 1);
    double worst = 0.0;
    for (std::size_t n = 0; n < kInstances; ++n) {
        LinearModel model{Tensor2(kClasses, kDim)};
        const double scale = 0.5 + 2.0 * std::uniform_real_distribution<double>()(rng);
        for (double& w : model.weight.data) w = normal(rng) * scale / std::sqrt(double(kDim));
        std::vector<double> x(kDim);
        for (double& v : x) v = normal(rng);
        const std::size_t y = label(rng);
        const double closed = closed_form_grad_norm(model, x, y);
        const double autodiff = grand_one(model.as_params(), x, y);
        worst = std::max(worst, std::abs(closed - autodiff) / closed);
    }
    const double t = seconds_since(t0);
    const bool ok = worst < 1e-9 && t < 5.0;
    return {ok ? Outcome::pass : Outcome::fail,
            fmt("1000 instances, max relative error %.2e (< 1e-9), %.2f s (< 5 s)", worst, t)};
}

// 2. Per-example backprop against central finite differences.
Verdict gradient_correctness() {
    const auto t0 = std::chrono::steady_clock::now();
    constexpr double kEps = 1e-5;
    // Coordinates where both magnitudes are below this are skipped: their
    // relative error is round-off divided by round-off.
    constexpr double kNegligible = 1e-8;
    const ModelSpec spec{{20, 32, 10}};
    std::mt19937_64 rng(777);
    std::normal_distribution<double> normal;
    double worst = 0.0;
    std::size_t coords = 0;
    for (std::size_t inst = 0; inst < 20; ++inst) {
        Params params = init_params(spec, 1000 + inst);
        for (auto& layer : params.layers) {
            for (double& b : layer.bias) b = 0.1 * normal(rng);
        }
        std::vector<double> x(20);
        for (double& v : x) v = normal(rng);
        const std::size_t y = inst % 10;
        const Gradient g = backward_per_example(params, x, y);

        auto loss = [&] { return cross_entropy(forward(params, x).probs, y); };
        auto check = [&](double& theta, double analytic) {
            const double saved = theta;
            theta = saved + kEps;
            const double up = loss();
            theta = saved - kEps;
            const double down = loss();
            theta = saved;
            const double numeric = (up - down) / (2 * kEps);
            const double denom = std::max(std::abs(analytic), std::abs(numeric));
            if (denom < kNegligible) return;
            worst = std::max(worst, std::abs(analytic - numeric) / denom);
            ++coords;
        };
        for (std::size_t l = 0; l < params.layers.size(); ++l) {
            auto& layer = params.layers[l];
            for (std::size_t k = 0; k < layer.weight.data.size(); ++k) check(layer.weight.data[k], g.layers[l].weight.data[k]);
            for (std::size_t k = 0; k < layer.bias.size(); ++k) check(layer.bias[k], g.layers[l].bias[k]);
        }
    }
    const double t = seconds_since(t0);
    const bool ok = worst < 1e-4 && t < 30.0;
    return {ok ? Outcome::pass : Outcome::fail,
            fmt("20 instances, %zu coordinates, max relative error %.2e (< 1e-4), %.2f s (< 30 s)", coords, worst, t)};
}

ExperimentConfig mnist_config(std::size_t train_size, const fs::path& out) {
    ExperimentConfig cfg;
    cfg.dataset = DatasetKind::mnist;
    cfg.data_dir = data_dir();
    cfg.train_size = train_size;
    cfg.model = ModelSpec{{784, 128, 10}};
    cfg.train.epochs = 10;
    cfg.score_runs = 20;
    cfg.output_dir = out;
    cfg.master_seed = 0;
    cfg.jobs = default_jobs();
    return cfg;
}

double rho(const TableMap& tables, const ScoreKind& a, const ScoreKind& b) {
    return spearman(tables.at(a).mean, tables.at(b).mean).value_or(NAN);
}

// 3. GraNd at initialization tracks the input norm.
Verdict correlation_reproduction() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto g0 = ScoreKind::grand(0);
    const auto norm = ScoreKind::input_norm();

    ExperimentConfig syn;
    syn.dataset = DatasetKind::synthetic;
    syn.model = ModelSpec{{syn.synthetic_dim, syn.synthetic_classes}, Activation::identity, Init::he_normal, false};
    syn.score_runs = 20;
    syn.score_epochs = {0};
    syn.kinds = {g0, norm};
    syn.output_dir = work_root() / "c3_synthetic";
    syn.jobs = default_jobs();
    const TableMap syn_tables = run_scoring(syn, load_experiment_data(syn));
    const double rho_syn = rho(syn_tables, g0, norm);

    if (!have_mnist()) {
        return {Outcome::skip, fmt("MNIST not found under %s (synthetic rho = %.4f)", data_dir().c_str(), rho_syn)};
    }
    ExperimentConfig cfg = mnist_config(5000, work_root() / "c3_mnist");
    cfg.test_size = 1000;
    cfg.score_epochs = {0};
    cfg.kinds = {g0, norm};
    const TableMap tables = run_scoring(cfg, load_experiment_data(cfg));
    const double rho_mnist = rho(tables, g0, norm);
    const double t = seconds_since(t0);
    const bool ok = rho_mnist >= 0.5 && rho_syn >= 0.8 && t < 600.0;
    return {ok ? Outcome::pass : Outcome::fail,
            fmt("MNIST-5k M=20 rho(grand@0, input_norm) = %.4f (>= 0.5); synthetic linear rho = %.4f (>= 0.8); "
                "%.0f s (< 600 s)",
                rho_mnist, rho_syn, t)};
}

// Shared by criteria 4 and 5: one desk-scale scoring pass and sweep.
struct DeskRun {
    TableMap tables;
    SweepResult sweep;
    double score_seconds = 0.0;
    double sweep_seconds = 0.0;
};

const DeskRun& desk_run() {
    static const DeskRun run = [] {
        DeskRun r;
        ExperimentConfig cfg = mnist_config(20000, work_root() / "desk");
        cfg.score_epochs = {0, mid_epoch(cfg.train.epochs)};
        const std::size_t mid = mid_epoch(cfg.train.epochs);
        cfg.kinds = {ScoreKind::grand(0), ScoreKind::grand(mid), ScoreKind::el2n(mid), ScoreKind::input_norm(),
                     ScoreKind::random()};
        const ExperimentData data = load_experiment_data(cfg);
        auto t0 = std::chrono::steady_clock::now();
        r.tables = run_scoring(cfg, data);
        r.score_seconds = seconds_since(t0);
        t0 = std::chrono::steady_clock::now();
        r.sweep = run_sweep(cfg, data, r.tables);
        r.sweep_seconds = seconds_since(t0);
        export_report(r.tables, r.sweep, cfg.output_dir / "report");
        return r;
    }();
    return run;
}

// 4. Two-group structure of the correlation matrix.
Verdict correlation_structure() {
    if (!have_mnist()) return {Outcome::skip, "MNIST not found under " + data_dir().string()};
    const auto& run = desk_run();
    const std::size_t mid = mid_epoch(10);
    const auto g0 = ScoreKind::grand(0), gm = ScoreKind::grand(mid), em = ScoreKind::el2n(mid);
    const auto norm = ScoreKind::input_norm();
    const double a = rho(run.tables, g0, norm), b = rho(run.tables, g0, em);
    const double c = rho(run.tables, gm, em), d = rho(run.tables, gm, norm);
    const bool ok = a > b && c > d;
    return {ok ? Outcome::pass : Outcome::fail,
            fmt("corr(grand@0,input_norm)=%.3f > corr(grand@0,el2n@%zu)=%.3f; "
                "corr(grand@%zu,el2n@%zu)=%.3f > corr(grand@%zu,input_norm)=%.3f",
                a, mid, b, mid, mid, c, mid, d)};
}

// 5. Pruning sweep.
Verdict pruning_sweep() {
    if (!have_mnist()) return {Outcome::skip, "MNIST not found under " + data_dir().string()};
    const auto& run = desk_run();
    const SweepResult& s = run.sweep;
    const std::size_t mid = mid_epoch(10);

    // (a) every kind trains on the full set with the same seeds at fraction 0.
    std::map<std::size_t, std::set<double>> full_by_trial;
    for (const SweepRow& r : s.rows) {
        if (r.fraction == 0.0) full_by_trial[r.trial].insert(r.test_accuracy);
    }
    bool a_ok = !full_by_trial.empty();
    for (const auto& [trial, accs] : full_by_trial) a_ok = a_ok && accs.size() == 1;

    const double full = s.mean_accuracy(ScoreKind::random(), 0.0);
    const double em = s.mean_accuracy(ScoreKind::el2n(mid), 0.5);
    const double gm = s.mean_accuracy(ScoreKind::grand(mid), 0.5);
    const bool b_ok = std::abs(em - full) <= 0.015 && std::abs(gm - full) <= 0.015;

    double worst_gap = 0.0;
    for (double f : {0.0, 0.3, 0.5, 0.7}) {
        worst_gap = std::max(worst_gap, std::abs(s.mean_accuracy(ScoreKind::grand(0), f) -
                                                 s.mean_accuracy(ScoreKind::input_norm(), f)));
    }
    const double rho_g0 = rho(run.tables, ScoreKind::grand(0), ScoreKind::input_norm());
    const bool c_ok = worst_gap <= 0.01 && rho_g0 >= 0.5;
    const double t = run.score_seconds + run.sweep_seconds;
    const bool ok = a_ok && b_ok && c_ok && t < 1200.0;
    return {ok ? Outcome::pass : Outcome::fail,
            fmt("(a) fraction-0 identical: %s; (b) full=%.4f el2n@%zu=%.4f grand@%zu=%.4f at 0.5 (within 0.015): %s; "
                "(c) max |grand@0 - input_norm| = %.4f (<= 0.01), rho = %.3f: %s; random@0.7=%.4f grand@0@0.7=%.4f; "
                "%.0f s (< 1200 s)",
                a_ok ? "yes" : "no", full, mid, em, mid, gm, b_ok ? "yes" : "no", worst_gap, rho_g0,
                c_ok ? "yes" : "no", s.mean_accuracy(ScoreKind::random(), 0.7),
                s.mean_accuracy(ScoreKind::grand(0), 0.7), t)};
}

// 6. restore(step = 0) returns step 0; the truthiness-buggy fixture does not.
Verdict checkpoint_step0() {
    const auto t0 = std::chrono::steady_clock::now();
    const bool correct = fixtures::restore_returns_step0(
        work_root() / "c6_good", [](const fs::path& d, std::optional<std::uint64_t> s) { return restore_checkpoint(d, s); });
    const bool buggy_caught = !fixtures::restore_returns_step0(work_root() / "c6_buggy", fixtures::buggy_restore);
    const double t = seconds_since(t0);
    const bool ok = correct && buggy_caught && t < 1.0;
    return {ok ? Outcome::pass : Outcome::fail,
            fmt("restore(step=0) byte-exact: %s; buggy fixture rejected: %s; %.3f s (< 1 s)", correct ? "yes" : "no",
                buggy_caught ? "yes" : "no", t)};
}

// Reference Spearman from the definition: twice the average rank of v_i is
// 2 * #{v_j < v_i} + #{v_j == v_i} + 1, all integers.
double brute_force_spearman(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    auto twice_ranks = [n](const std::vector<double>& v) {
        std::vector<long> r(n);
        for (std::size_t i = 0; i < n; ++i) {
            long less = 0, equal = 0;
            for (std::size_t j = 0; j < n; ++j) {
                less += v[j] < v[i];
                equal += v[j] == v[i];
            }
            r[i] = 2 * less + equal + 1;
        }
        return r;
    };
    const auto ra = twice_ranks(a), rb = twice_ranks(b);
    const long centre = static_cast<long>(n) + 1;
    long cov = 0, va = 0, vb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        cov += (ra[i] - centre) * (rb[i] - centre);
        va += (ra[i] - centre) * (ra[i] - centre);
        vb += (rb[i] - centre) * (rb[i] - centre);
    }
    return std::clamp(static_cast<double>(cov) / std::sqrt(static_cast<double>(va) * static_cast<double>(vb)), -1.0, 1.0);
}

// 7. Spearman against the brute-force definition over all 720 permutations.
Verdict spearman_exactness() {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<double> fixed{3.0, 1.0, 4.0, 1.0, 5.0, 9.0};
    const std::vector<std::vector<double>> pools{{0, 1, 2, 3, 4, 5}, {2, 7, 1, 8, 2, 8}, {5, 5, 5, 1, 1, 0}};
    std::size_t compared = 0, mismatches = 0;
    for (std::vector<double> perm : pools) {
        std::vector<std::size_t> idx(6);
        std::iota(idx.begin(), idx.end(), 0);
        do {
            std::vector<double> b(6);
            for (std::size_t i = 0; i < 6; ++i) b[i] = perm[idx[i]];
            const auto got = spearman(fixed, b);
            ++compared;
            if (!got || *got != brute_force_spearman(fixed, b)) ++mismatches;
        } while (std::next_permutation(idx.begin(), idx.end()));
    }
    const double t = seconds_since(t0);
    const bool ok = mismatches == 0 && compared == 3 * 720 && t < 1.0;
    return {ok ? Outcome::pass : Outcome::fail,
            fmt("%zu comparisons (3 pools x 720 permutations, ties included), %zu mismatches; %.3f s (< 1 s)", compared,
                mismatches, t)};
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// 8. Two `score` invocations with one config write identical CSVs.
Verdict determinism() {
    const fs::path cfg_file = work_root() / "c8.conf";
    {
        std::ofstream conf(cfg_file);
        conf << "dataset = synthetic\nepochs = 4\nruns = 3\nhidden = 16\nseed = 42\n";
    }
    std::vector<fs::path> outs{work_root() / "c8_a", work_root() / "c8_b"};
    for (const auto& out : outs) {
        fs::remove_all(out);
        const std::string cmd = std::string("\"") + DATADIET_CLI_PATH + "\" score --config \"" + cfg_file.string() +
                                "\" --out \"" + out.string() + "\" > /dev/null";
        if (std::system(cmd.c_str()) != 0) return {Outcome::fail, "score invocation failed: " + cmd};
    }
    std::size_t files = 0, differing = 0;
    std::set<std::string> names;
    for (const auto& out : outs) {
        for (const auto& e : fs::directory_iterator(out)) {
            if (e.path().extension() == ".csv") names.insert(e.path().filename().string());
        }
    }
    for (const auto& name : names) {
        ++files;
        const fs::path pa = outs[0] / name, pb = outs[1] / name;
        if (!fs::exists(pa) || !fs::exists(pb) || read_file(pa) != read_file(pb)) ++differing;
    }
    const bool ok = files > 0 && differing == 0;
    return {ok ? Outcome::pass : Outcome::fail, fmt("%zu CSV files compared, %zu differ", files, differing)};
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<int, std::function<Verdict()>>> criteria{
        {1, oracle_equivalence}, {2, gradient_correctness}, {3, correlation_reproduction},
        {4, correlation_structure}, {5, pruning_sweep}, {6, checkpoint_step0},
        {7, spearman_exactness}, {8, determinism},
    };
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

    fs::create_directories(work_root());
    int failed = 0, skipped = 0;
    for (const auto& [id, fn] : criteria) {
        if (!wanted.empty() && !wanted.contains(id)) continue;
        Verdict v{Outcome::fail, ""};
        try {
            v = fn();
        } catch (const std::exception& e) {
            v = {Outcome::fail, std::string("exception: ") + e.what()};
        }
        const char* tag = v.outcome == Outcome::pass ? "PASS" : v.outcome == Outcome::fail ? "FAIL" : "SKIP";
        std::printf("%s %d: %s\n", tag, id, v.detail.c_str());
        std::fflush(stdout);
        failed += v.outcome == Outcome::fail;
        skipped += v.outcome == Outcome::skip;
    }
    if (failed > 0) return 1;
    return skipped > 0 ? 77 : 0;
}
