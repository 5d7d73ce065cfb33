#pragma once

#include <iosfwd>
#include <string>

#include "cran/numkernel.hpp"

namespace cran {

// Text format: "rows cols" on the first line, then one row per line with
// 17 significant digits per value.
void write_matrix(std::ostream& os, const RealMatrix& m);
void write_matrix_file(const std::string& path, const RealMatrix& m);
RealMatrix read_matrix(std::istream& is);
RealMatrix read_matrix_file(const std::string& path);

}  // namespace cran
