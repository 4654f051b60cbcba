#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "selinf/design.hpp"
#include "selinf/errors.hpp"

namespace selinf {

// Comma-separated, period decimal. A single header row is auto-detected by a
// non-numeric first cell and skipped.
inline Matrix read_csv_matrix(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open file: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        bool bad = false;
        while (std::getline(ss, cell, ',')) {
            const char* b = cell.data();
            const char* e = b + cell.size();
            while (b < e && (*b == ' ' || *b == '\t')) ++b;
            while (e > b && (*(e - 1) == ' ' || *(e - 1) == '\t')) --e;
            double v;
            auto res = std::from_chars(b, e, v);
            if (res.ec != std::errc{} || res.ptr != e) {
                bad = true;
                break;
            }
            row.push_back(v);
        }
        if (bad) {
            if (lineno == 1) continue; // header row
            throw input_error(path + ":" + std::to_string(lineno) + ": non-numeric cell");
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw input_error(path + ":" + std::to_string(lineno) + ": ragged row");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw input_error(path + ": no data rows");
    Matrix X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < rows[i].size(); ++j)
            X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return X;
}

inline Vector read_csv_vector(const std::string& path) {
    Matrix m = read_csv_matrix(path);
    if (m.cols() != 1) throw input_error(path + ": expected a single column");
    return m.col(0);
}

} // namespace selinf
