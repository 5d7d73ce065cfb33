#include "cran/matrix_io.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "cran/errors.hpp"

namespace cran {

void write_matrix(std::ostream& os, const RealMatrix& m) {
    os << m.rows() << ' ' << m.cols() << '\n';
    char buf[64];
    for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
            if (c) os << ' ';
            os << buf;
        }
        os << '\n';
    }
}

void write_matrix_file(const std::string& path, const RealMatrix& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot open matrix file for writing: " + path);
    write_matrix(out, m);
    if (!out) throw InvalidInput("failed writing matrix file: " + path);
}

RealMatrix read_matrix(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw InvalidInput("matrix file: missing header line");
    std::istringstream header(line);
    long rows = 0;
    long cols = 0;
    std::string extra;
    if (!(header >> rows >> cols) || (header >> extra) || rows < 1 || cols < 1)
        throw InvalidInput("matrix file: header must be two positive integers");
    RealMatrix m(rows, cols);
    for (long r = 0; r < rows; ++r) {
        if (!std::getline(is, line)) throw InvalidInput("matrix file: expected " + std::to_string(rows) + " rows");
        std::istringstream row(line);
        for (long c = 0; c < cols; ++c) {
            double v = 0.0;
            if (!(row >> v)) throw InvalidInput("matrix file: row " + std::to_string(r + 1) + " is short");
            m(r, c) = v;
        }
        if (row >> extra) throw InvalidInput("matrix file: row " + std::to_string(r + 1) + " is long");
    }
    while (std::getline(is, line))
        if (line.find_first_not_of(" \t\r") != std::string::npos)
            throw InvalidInput("matrix file: trailing data after the last row");
    require_finite(m, "matrix file");
    return m;
}

RealMatrix read_matrix_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open matrix file: " + path);
    return read_matrix(in);
}

}  // namespace cran
