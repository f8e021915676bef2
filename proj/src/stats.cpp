#include "datadiet/stats.hpp"

#include "datadiet/csv.hpp"
#include "datadiet/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace datadiet {

std::vector<double> fractional_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t start = 0; start < order.size();) {
        std::size_t end = start + 1;
        while (end < order.size() && v[order[end]] == v[order[start]]) ++end;
        // positions start..end-1 hold ranks start+1..end
        const double shared = static_cast<double>(start + 1 + end) / 2.0;
        for (std::size_t k = start; k < end; ++k) ranks[order[k]] = shared;
        start = end;
    }
    return ranks;
}

std::optional<double> spearman(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("spearman inputs differ in length");
    if (a.size() < 2) throw DimensionError("spearman needs at least two entries");
    const auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(a.begin(), a.end(), finite) || !std::all_of(b.begin(), b.end(), finite)) {
        throw ValidationError("spearman inputs must be finite");
    }
    const auto ra = fractional_ranks(a);
    const auto rb = fractional_ranks(b);
    const double mean = static_cast<double>(a.size() + 1) / 2.0;
    double cov = 0.0;
    double var_a = 0.0;
    double var_b = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        const double da = ra[i] - mean;
        const double db = rb[i] - mean;
        cov += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if (var_a == 0.0 || var_b == 0.0) return std::nullopt;
    return std::clamp(cov / std::sqrt(var_a * var_b), -1.0, 1.0);
}

std::optional<double> CorrelationMatrix::at(const std::string& row, const std::string& col) const {
    const auto i = std::find(labels.begin(), labels.end(), row);
    const auto j = std::find(labels.begin(), labels.end(), col);
    if (i == labels.end() || j == labels.end()) throw DimensionError("no correlation entry for " + row + "/" + col);
    return values[static_cast<std::size_t>(i - labels.begin())][static_cast<std::size_t>(j - labels.begin())];
}

CorrelationMatrix correlation_matrix(std::span<const ScoreTable> tables) {
    CorrelationMatrix m;
    const std::size_t k = tables.size();
    for (const ScoreTable& t : tables) {
        if (t.n_examples() != tables.front().n_examples()) {
            throw DimensionError("score tables cover different numbers of examples");
        }
        m.labels.push_back(t.kind.label());
    }
    m.values.assign(k, std::vector<std::optional<double>>(k));
    for (std::size_t i = 0; i < k; ++i) {
        m.values[i][i] = 1.0;
        for (std::size_t j = i + 1; j < k; ++j) {
            m.values[i][j] = spearman(tables[i].mean, tables[j].mean);
            m.values[j][i] = m.values[i][j];
        }
    }
    return m;
}

std::string correlation_to_csv(const CorrelationMatrix& m) {
    std::string out = "score";
    for (const auto& l : m.labels) out += "," + l;
    out += "\n";
    for (std::size_t i = 0; i < m.labels.size(); ++i) {
        out += m.labels[i];
        for (const auto& v : m.values[i]) out += "," + (v ? csv::format(*v) : std::string("n/a"));
        out += "\n";
    }
    return out;
}

SortedCurve sorted_curve(std::span<const double> scores) {
    SortedCurve curve;
    curve.permutation.resize(scores.size());
    std::iota(curve.permutation.begin(), curve.permutation.end(), 0);
    std::stable_sort(curve.permutation.begin(), curve.permutation.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    curve.values = apply_permutation(scores, curve.permutation);
    return curve;
}

std::vector<double> apply_permutation(std::span<const double> v, std::span<const std::size_t> permutation) {
    if (v.size() != permutation.size()) throw DimensionError("permutation length differs from vector length");
    std::vector<double> out(v.size());
    for (std::size_t k = 0; k < permutation.size(); ++k) out[k] = v[permutation[k]];
    return out;
}

RatioSummary ratio_summary(std::span<const double> numer, std::span<const double> denom) {
    if (numer.size() != denom.size()) throw DimensionError("ratio inputs differ in length");
    RatioSummary s;
    std::vector<double> logs;
    logs.reserve(numer.size());
    for (std::size_t i = 0; i < numer.size(); ++i) {
        if (!std::isfinite(numer[i]) || !std::isfinite(denom[i]) || numer[i] < 0.0 || denom[i] < 0.0) {
            throw ValidationError("ratio inputs must be finite and non-negative (index " + std::to_string(i) + ")");
        }
        if (numer[i] == 0.0 || denom[i] == 0.0) {
            ++s.excluded_zero;
            continue;
        }
        logs.push_back(std::log(numer[i] / denom[i]));
    }
    if (logs.empty()) throw DimensionError("no positive ratio pairs to summarize");
    s.used = logs.size();

    const double n = static_cast<double>(logs.size());
    s.mean_log = std::accumulate(logs.begin(), logs.end(), 0.0) / n;
    double m2 = 0.0;
    double m3 = 0.0;
    for (double l : logs) {
        const double d = l - s.mean_log;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    s.std_log = std::sqrt(m2);
    s.skewness_log = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;

    const double half_width = s.std_log > 0.0 ? 4.0 * s.std_log : 0.5;
    const double lo = s.mean_log - half_width;
    const double width = 2.0 * half_width / static_cast<double>(kRatioBins);
    s.histogram.bin_edges.resize(kRatioBins + 1);
    for (std::size_t b = 0; b <= kRatioBins; ++b) s.histogram.bin_edges[b] = lo + width * static_cast<double>(b);
    s.histogram.counts.assign(kRatioBins, 0);
    for (double l : logs) {
        const double pos = std::floor((l - lo) / width);
        const auto bin = static_cast<std::size_t>(std::clamp(pos, 0.0, static_cast<double>(kRatioBins - 1)));
        ++s.histogram.counts[bin];
    }
    return s;
}

std::string histogram_to_csv(const Histogram& h) {
    std::string out = "bin_left_edge,count\n";
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
        out += csv::format(h.bin_edges[b]) + "," + std::to_string(h.counts[b]) + "\n";
    }
    return out;
}

} // namespace datadiet
