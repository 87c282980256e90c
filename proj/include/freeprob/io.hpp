#pragma once

#include <complex>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "freeprob/errors.hpp"
#include "freeprob/randmat.hpp"

namespace freeprob::io {

/// Numeric formatting used by every CSV emitter: 12 significant digits,
/// shortest form. Identical inputs give identical bytes.
inline std::string fmt12(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

/// Two-column CSV with the fixed header used for radial quantile tables.
inline std::string radial_table_csv(const std::vector<double>& t, const std::vector<double>& r) {
    if (t.size() != r.size()) throw invalid_input("radial_table_csv: column length mismatch");
    std::string out = "t,radius\n";
    for (std::size_t i = 0; i < t.size(); ++i)
        out += fmt12(t[i]) + "," + fmt12(r[i]) + "\n";
    return out;
}

/// Planar sample sets serialize as (re, im) rows.
inline std::string samples_csv(const std::vector<std::complex<double>>& pts) {
    std::string out = "re,im\n";
    for (const auto& z : pts) out += fmt12(z.real()) + "," + fmt12(z.imag()) + "\n";
    return out;
}

/// Generic CSV from a header and rows of doubles.
inline std::string table_csv(const std::vector<std::string>& header,
                             const std::vector<std::vector<double>>& rows) {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out += ",";
        out += header[i];
    }
    out += "\n";
    for (const auto& row : rows) {
        if (row.size() != header.size())
            throw invalid_input("table_csv: row width does not match header");
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ",";
            out += fmt12(row[i]);
        }
        out += "\n";
    }
    return out;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw invalid_input("write_text_file: cannot open " + path);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw invalid_input("write_text_file: write failed for " + path);
}

/// Complex matrix to CSV: one row per matrix row, entries as re+imj pairs
/// in alternating columns. For small instances only.
inline std::string matrix_csv(const randmat::CMat& a) {
    std::string out;
    for (int i = 0; i < a.rows(); ++i) {
        for (int j = 0; j < a.cols(); ++j) {
            if (j) out += ",";
            out += fmt12(a(i, j).real()) + "," + fmt12(a(i, j).imag());
        }
        out += "\n";
    }
    return out;
}

/// Binary layout: int64 rows, int64 cols, then row-major (re, im) doubles.
inline void write_matrix_bin(const std::string& path, const randmat::CMat& a) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw invalid_input("write_matrix_bin: cannot open " + path);
    const std::int64_t r = a.rows(), c = a.cols();
    f.write(reinterpret_cast<const char*>(&r), sizeof(r));
    f.write(reinterpret_cast<const char*>(&c), sizeof(c));
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) {
            const double re = a(i, j).real(), im = a(i, j).imag();
            f.write(reinterpret_cast<const char*>(&re), sizeof(re));
            f.write(reinterpret_cast<const char*>(&im), sizeof(im));
        }
    if (!f) throw invalid_input("write_matrix_bin: write failed for " + path);
}

inline randmat::CMat read_matrix_bin(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw invalid_input("read_matrix_bin: cannot open " + path);
    std::int64_t r = 0, c = 0;
    f.read(reinterpret_cast<char*>(&r), sizeof(r));
    f.read(reinterpret_cast<char*>(&c), sizeof(c));
    if (!f || r < 0 || c < 0 || r > 100000 || c > 100000)
        throw invalid_input("read_matrix_bin: bad header in " + path);
    randmat::CMat a(r, c);
    for (std::int64_t i = 0; i < r; ++i)
        for (std::int64_t j = 0; j < c; ++j) {
            double re = 0, im = 0;
            f.read(reinterpret_cast<char*>(&re), sizeof(re));
            f.read(reinterpret_cast<char*>(&im), sizeof(im));
            a(i, j) = {re, im};
        }
    if (!f) throw invalid_input("read_matrix_bin: truncated file " + path);
    return a;
}

} // namespace freeprob::io
