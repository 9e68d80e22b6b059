#pragma once

#include "conic/linalg.hpp"

#include <iosfwd>
#include <string>

namespace conic {

/// Headerless CSV of reals, one matrix row per line. Blank lines are skipped.
Matrix read_matrix_csv(std::istream& in);
Matrix read_matrix_csv(const std::string& path);

/// A vector may be stored as a single row or a single column.
Vector read_vector_csv(const std::string& path);

void write_matrix_csv(std::ostream& out, const Matrix& m, int precision = 17);
void write_matrix_csv(const std::string& path, const Matrix& m, int precision = 17);

} // namespace conic
