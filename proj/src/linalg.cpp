#include "conic/linalg.hpp"

#include "conic/error.hpp"

#include <algorithm>
#include <string>

namespace conic {

void require_finite(const Matrix& m, std::string_view what) {
    if (!m.allFinite()) {
        throw Error(ErrorCode::InvalidInput, std::string(what) + " contains non-finite entries");
    }
}

void require_finite(const Vector& v, std::string_view what) {
    if (!v.allFinite()) {
        throw Error(ErrorCode::InvalidInput, std::string(what) + " contains non-finite entries");
    }
}

Index numeric_rank(const Matrix& m, double tol) {
    if (m.rows() == 0 || m.cols() == 0) {
        return 0;
    }
    Eigen::JacobiSVD<Matrix> svd(m);
    const Vector& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) {
        return 0;
    }
    const double threshold = tol * s(0) * static_cast<double>(std::max(m.rows(), m.cols()));
    return (s.array() > threshold).count();
}

Matrix nullspace_basis(const Matrix& m, Index cols, double tol) {
    if (m.rows() == 0) {
        return Matrix::Identity(cols, cols);
    }
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
    const Vector& s = svd.singularValues();
    Index rank = 0;
    if (s.size() > 0 && s(0) > 0.0) {
        const double threshold = tol * s(0) * static_cast<double>(std::max(m.rows(), m.cols()));
        rank = (s.array() > threshold).count();
    }
    return svd.matrixV().rightCols(cols - rank);
}

Matrix select_rows(const Matrix& m, std::span<const Index> rows) {
    Matrix out(static_cast<Index>(rows.size()), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.row(static_cast<Index>(i)) = m.row(rows[i]);
    }
    return out;
}

Matrix select_cols(const Matrix& m, std::span<const Index> cols) {
    Matrix out(m.rows(), static_cast<Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        out.col(static_cast<Index>(j)) = m.col(cols[j]);
    }
    return out;
}

} // namespace conic
