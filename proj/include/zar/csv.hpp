#pragma once

// Minimal numeric CSV ingestion: one header row naming the columns, then
// strictly numeric cells ('.' decimal separator, UTF-8, no quoting).

#include <Eigen/Dense>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace zar {

struct CsvTable {
    std::vector<std::string> header;
    Eigen::MatrixXd values;  // one row per data line

    Eigen::Index column(const std::string& name) const {
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (header[j] == name) return static_cast<Eigen::Index>(j);
        }
        throw std::invalid_argument("csv: no column named '" + name + "'");
    }

    bool has_column(const std::string& name) const {
        for (const std::string& h : header) {
            if (h == name) return true;
        }
        return false;
    }
};

namespace detail {

inline std::string strip(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            cells.push_back(strip(line.substr(start)));
            break;
        }
        cells.push_back(strip(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return cells;
}

inline double parse_cell(const std::string& cell, std::size_t line_no, std::size_t col) {
    double value = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || cell.empty()) {
        throw std::runtime_error("csv line " + std::to_string(line_no) + ": cell " +
                                 std::to_string(col + 1) + " ('" + cell +
                                 "') is not numeric");
    }
    return value;
}

}  // namespace detail

inline CsvTable read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("csv: empty input");
    CsvTable table;
    table.header = detail::split_csv_line(line);
    if (table.header.empty() || table.header.front().empty()) {
        throw std::runtime_error("csv line 1: empty header");
    }
    const std::size_t n_cols = table.header.size();
    std::vector<double> cells;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::strip(line).empty()) continue;
        const std::vector<std::string> row = detail::split_csv_line(line);
        if (row.size() != n_cols) {
            throw std::runtime_error("csv line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(n_cols) + " fields, got " +
                                     std::to_string(row.size()));
        }
        for (std::size_t j = 0; j < n_cols; ++j) {
            cells.push_back(detail::parse_cell(row[j], line_no, j));
        }
    }
    const std::size_t n_rows = cells.size() / n_cols;
    if (n_rows == 0) throw std::runtime_error("csv: no data rows");
    table.values.resize(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(n_cols));
    for (std::size_t i = 0; i < n_rows; ++i) {
        for (std::size_t j = 0; j < n_cols; ++j) {
            table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                cells[i * n_cols + j];
        }
    }
    return table;
}

inline CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    return read_csv(in);
}

}  // namespace zar
