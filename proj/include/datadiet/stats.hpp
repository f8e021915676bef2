#pragma once

#include "datadiet/scores.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace datadiet {

/// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> fractional_ranks(std::span<const double> v);

/// Pearson correlation of fractional ranks. Returns std::nullopt when either
/// input is constant (the correlation is undefined). Throws DimensionError on
/// a length mismatch or fewer than two entries.
std::optional<double> spearman(std::span<const double> a, std::span<const double> b);

struct CorrelationMatrix {
    std::vector<std::string> labels;
    /// values[i][j]; nullopt marks an undefined correlation.
    std::vector<std::vector<std::optional<double>>> values;

    std::optional<double> at(const std::string& row, const std::string& col) const;
};

/// Entry (i, j) is spearman(tables[i].mean, tables[j].mean).
CorrelationMatrix correlation_matrix(std::span<const ScoreTable> tables);

/// Labels as header row and column; undefined entries print as "n/a".
std::string correlation_to_csv(const CorrelationMatrix& m);

struct SortedCurve {
    std::vector<double> values;            // ascending
    std::vector<std::size_t> permutation;  // values[k] == input[permutation[k]]
};

/// Stable ascending sort.
SortedCurve sorted_curve(std::span<const double> scores);

/// out[k] = v[permutation[k]], for overlaying a second score on a sorted one.
std::vector<double> apply_permutation(std::span<const double> v, std::span<const std::size_t> permutation);

struct Histogram {
    std::vector<double> bin_edges; // bins + 1 entries
    std::vector<std::size_t> counts;
};

inline constexpr std::size_t kRatioBins = 50;

struct RatioSummary {
    double mean_log = 0.0;
    double std_log = 0.0; // population standard deviation
    /// Population skewness of ln r; 0 when std_log is 0.
    double skewness_log = 0.0;
    std::size_t used = 0;
    /// Pairs skipped because numer or denom was exactly zero.
    std::size_t excluded_zero = 0;
    Histogram histogram;
};

/// Summarizes ln(numer_i / denom_i). The histogram has kRatioBins bins over
/// [mean - 4 std, mean + 4 std] (a unit-wide window when std is 0); values
/// outside land in the edge bins. Negative or non-finite entries throw.
RatioSummary ratio_summary(std::span<const double> numer, std::span<const double> denom);

/// bin_left_edge,count
std::string histogram_to_csv(const Histogram& h);

} // namespace datadiet
