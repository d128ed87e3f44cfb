#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfas {

// Named numeric columns plus free-form metadata lines. Metadata is written
// as '#'-prefixed header lines so the CSV stays a single self-describing
// file; values are printed with 17 significant digits so reruns compare
// byte-for-byte.
struct ResultTable {
    std::vector<std::string> meta;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add_row(std::vector<double> row) {
        if (row.size() != columns.size())
            throw std::invalid_argument("ResultTable: row width does not match columns");
        rows.push_back(std::move(row));
    }
};

inline void write_csv(const ResultTable& table, std::ostream& os) {
    for (const auto& line : table.meta) os << "# " << line << "\n";
    for (std::size_t c = 0; c < table.columns.size(); ++c)
        os << table.columns[c] << (c + 1 < table.columns.size() ? "," : "");
    os << "\n";
    char buf[64];
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", row[c]);
            os << buf << (c + 1 < row.size() ? "," : "");
        }
        os << "\n";
    }
}

inline std::string csv_string(const ResultTable& table) {
    std::ostringstream oss;
    write_csv(table, oss);
    return oss.str();
}

// CSV plus a companion .meta file carrying the runtime and tool version.
inline void write_result_files(const ResultTable& table, const std::filesystem::path& csv_path,
                               const std::string& tool_version, double runtime_seconds) {
    std::ofstream csv(csv_path);
    if (!csv) throw std::runtime_error("cannot open " + csv_path.string() + " for writing");
    write_csv(table, csv);

    std::filesystem::path meta_path = csv_path;
    meta_path += ".meta";
    std::ofstream meta(meta_path);
    if (!meta) throw std::runtime_error("cannot open " + meta_path.string() + " for writing");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", runtime_seconds);
    meta << "tool: " << tool_version << "\n";
    meta << "runtime_seconds: " << buf << "\n";
}

}  // namespace mfas
