#pragma once

#include "conic/linalg.hpp"

#include <optional>
#include <vector>

namespace conic {

/// minimize ||response - design * beta||^2 + sum_i ridge_i * beta_i^2  subject to beta >= 0
struct NnlsProblem {
    Matrix design;
    Vector response;
    std::optional<Vector> ridge_weights;

    /// Throws ShapeMismatch / InvalidInput when the invariants do not hold.
    void validate() const;
};

struct NnlsOptions {
    double tol = 1e-10;
    /// Outer (entering-variable) iterations; 0 selects 3 * cols.
    Index max_iter = 0;
};

struct NnlsSolution {
    Vector coefficients;
    double residual_norm = 0.0; ///< ||response - design * beta||, ridge excluded
    double objective = 0.0;     ///< full penalized objective
    double kkt_gap = 0.0;
    Index iterations = 0;
    bool converged = false;
    bool ill_conditioned = false; ///< a passive-set system needed the min-norm fallback
    std::vector<double> objective_trace; ///< objective after each outer iteration
};

/// Lawson-Hanson active-set solver working on the normal equations.
///
/// The Gram matrix of the design is cached, so repeated solves against the
/// same design (different responses or ridge weights) only pay for the
/// passive-set systems. When every passive coordinate carries a positive
/// ridge weight and the design has fewer rows than passive columns, the
/// passive system is solved through the Woodbury identity in the row space.
///
/// `weight` scales the data term: w * ||y - X beta||^2 + sum d_i beta_i^2.
class LawsonHanson {
public:
    explicit LawsonHanson(Matrix design, double weight = 1.0);

    const Matrix& design() const { return design_; }
    double weight() const { return weight_; }

    /// `warm_start`, when given, must be feasible (>= 0); its support seeds
    /// the passive set and the search proceeds from that point.
    NnlsSolution solve(const Vector& response, const Vector& ridge, const NnlsOptions& options = {},
                       const Vector* warm_start = nullptr) const;

private:
    Matrix design_;
    double weight_;
    Matrix gram_; // weight * X^T X
};

NnlsSolution solve_nnls(const NnlsProblem& problem, const NnlsOptions& options = {});

/// Penalized objective of `beta` for `problem` (no feasibility check).
double nnls_objective(const NnlsProblem& problem, const Vector& beta);

} // namespace conic
