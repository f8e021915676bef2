#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace datadiet::csv {

/// Shortest representation that round-trips to the same double.
std::string format(double v);
double parse_double(std::string_view field);

std::vector<std::string> split_line(std::string_view line);
std::string join(const std::vector<std::string>& fields);

/// Non-empty lines of a text file, each split on commas.
std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path);

/// Writes via a temporary file and rename so readers never see half a file.
void write_text(const std::filesystem::path& path, std::string_view content);

} // namespace datadiet::csv
