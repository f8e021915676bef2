#pragma once

// Static SVG charts written as plain text, for report output without any
// plotting dependency.

#include <optional>
#include <string>
#include <vector>

namespace datadiet::svg {

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<Series>& series);

/// Square heatmap over [-1, 1]; nullopt cells are drawn grey and labelled n/a.
std::string heatmap(const std::string& title, const std::vector<std::string>& labels,
                    const std::vector<std::vector<std::optional<double>>>& values);

/// Histogram bars; edges has counts.size() + 1 entries.
std::string histogram(const std::string& title, const std::string& x_label, const std::vector<double>& edges,
                      const std::vector<std::size_t>& counts);

std::string escape(const std::string& text);

} // namespace datadiet::svg
