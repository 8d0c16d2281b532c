#pragma once

#include <string>
#include <vector>

namespace ybcav {

/// Shortest round-trippable decimal (%.12g, C locale) so repeated runs
/// produce byte-identical artifacts.
std::string format_number(double value);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows; // each sized like header
};

/// Comma-separated with a header row and "\n" line ends.
std::string csv_text(const CsvTable& table);

void write_text_file(const std::string& path, const std::string& text);

} // namespace ybcav
