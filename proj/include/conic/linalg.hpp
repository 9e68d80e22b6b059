#pragma once

#include <Eigen/Dense>

#include <span>
#include <string_view>
#include <vector>

namespace conic {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using IndexList = std::vector<Index>;

/// Throws InvalidInput naming `what` if any entry is NaN or infinite.
void require_finite(const Matrix& m, std::string_view what);
void require_finite(const Vector& v, std::string_view what);

/// Rank by singular-value threshold `tol * sigma_max * max(rows, cols)`.
/// A matrix with no rows or no columns has rank 0.
Index numeric_rank(const Matrix& m, double tol);

/// Orthonormal basis (columns) of the right nullspace of `m`, using the same
/// threshold as numeric_rank. A matrix with no rows yields the identity.
Matrix nullspace_basis(const Matrix& m, Index cols, double tol);

Matrix select_rows(const Matrix& m, std::span<const Index> rows);
Matrix select_cols(const Matrix& m, std::span<const Index> cols);

} // namespace conic
