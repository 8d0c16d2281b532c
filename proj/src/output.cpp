#include "ybcav/output.hpp"

#include <cstdio>
#include <fstream>

#include "ybcav/errors.hpp"

namespace ybcav {

std::string format_number(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", value);
    return buf;
}

std::string csv_text(const CsvTable& table) {
    std::string out;
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (i > 0) out += ',';
        out += table.header[i];
    }
    out += '\n';
    for (const auto& row : table.rows) {
        if (row.size() != table.header.size()) {
            throw config_error("csv: row width does not match header");
        }
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i > 0) out += ',';
            out += format_number(row[i]);
        }
        out += '\n';
    }
    return out;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("output: cannot open " + path);
    out << text;
    if (!out) throw config_error("output: write failed for " + path);
}

} // namespace ybcav
