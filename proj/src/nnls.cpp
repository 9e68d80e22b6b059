#include "conic/nnls.hpp"

#include "conic/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace conic {

void NnlsProblem::validate() const {
    if (response.size() != design.rows()) {
        throw Error(ErrorCode::ShapeMismatch, "response length " + std::to_string(response.size()) +
                                                  " != design rows " + std::to_string(design.rows()));
    }
    require_finite(design, "design");
    require_finite(response, "response");
    if (ridge_weights) {
        if (ridge_weights->size() != design.cols()) {
            throw Error(ErrorCode::ShapeMismatch, "ridge_weights length must equal design cols");
        }
        require_finite(*ridge_weights, "ridge_weights");
        if ((ridge_weights->array() < 0.0).any()) {
            throw Error(ErrorCode::InvalidInput, "ridge_weights must be non-negative");
        }
    }
}

LawsonHanson::LawsonHanson(Matrix design, double weight)
    : design_(std::move(design)), weight_(weight) {
    if (!(weight_ > 0.0) || !std::isfinite(weight_)) {
        throw Error(ErrorCode::InvalidInput, "data weight must be positive");
    }
    require_finite(design_, "design");
    gram_ = weight_ * (design_.transpose() * design_);
}

namespace {

struct PassiveSolve {
    Vector values;
    bool ill_conditioned = false;
};

} // namespace

NnlsSolution LawsonHanson::solve(const Vector& response, const Vector& ridge, const NnlsOptions& options,
                                 const Vector* warm_start) const {
    const Index d = design_.cols();
    const Index rows = design_.rows();
    if (response.size() != rows) {
        throw Error(ErrorCode::ShapeMismatch, "response length must equal design rows");
    }
    if (ridge.size() != d) {
        throw Error(ErrorCode::ShapeMismatch, "ridge length must equal design cols");
    }
    require_finite(response, "response");
    if (!ridge.allFinite() || (ridge.array() < 0.0).any()) {
        throw Error(ErrorCode::InvalidInput, "ridge weights must be finite and non-negative");
    }

    const Vector c = weight_ * (design_.transpose() * response);
    const double threshold = options.tol * std::max(1.0, c.cwiseAbs().maxCoeff());
    const Index max_iter = options.max_iter > 0 ? options.max_iter : 3 * d;

    NnlsSolution out;

    auto objective = [&](const Vector& x) {
        return weight_ * (response - design_ * x).squaredNorm() + (ridge.array() * x.array().square()).sum();
    };
    auto negative_half_gradient = [&](const Vector& x) -> Vector {
        return c - gram_ * x - ridge.cwiseProduct(x);
    };

    auto solve_passive = [&](const IndexList& passive) {
        PassiveSolve result;
        const Index k = static_cast<Index>(passive.size());
        const Vector c_p = c(passive);
        const Vector d_p = ridge(passive);
        const double diag_scale = std::max(1e-300, (gram_.diagonal()(passive) + d_p).maxCoeff());
        if (k > rows && d_p.minCoeff() > 1e-8 * diag_scale) {
            // (w X'X + D)^{-1} = D^{-1} - D^{-1} X' (I/w + X D^{-1} X')^{-1} X D^{-1}
            const Matrix x_p = design_(Eigen::all, passive);
            const Vector d_inv = d_p.cwiseInverse();
            const Matrix xd = x_p * d_inv.asDiagonal();
            Matrix inner = xd * x_p.transpose();
            inner.diagonal().array() += 1.0 / weight_;
            const Vector dc = d_inv.cwiseProduct(c_p);
            Eigen::LLT<Matrix> llt(inner);
            if (llt.info() == Eigen::Success) {
                result.values = dc - xd.transpose() * llt.solve(x_p * dc);
                return result;
            }
        }
        Matrix h = gram_(passive, passive);
        h.diagonal() += d_p;
        Eigen::LLT<Matrix> llt(h);
        if (llt.info() == Eigen::Success && llt.rcond() > 1e-14) {
            result.values = llt.solve(c_p);
            return result;
        }
        // Numerically deficient passive set: minimum-norm least squares on the
        // explicitly augmented columns.
        Matrix augmented(rows + k, k);
        augmented.topRows(rows) = std::sqrt(weight_) * design_(Eigen::all, passive);
        augmented.bottomRows(k) = d_p.cwiseSqrt().asDiagonal();
        Vector rhs = Vector::Zero(rows + k);
        rhs.head(rows) = std::sqrt(weight_) * response;
        result.values = augmented.completeOrthogonalDecomposition().solve(rhs);
        result.ill_conditioned = true;
        return result;
    };

    Vector x = Vector::Zero(d);
    std::vector<char> is_passive(static_cast<std::size_t>(d), 0);

    auto passive_list = [&]() {
        IndexList p;
        for (Index j = 0; j < d; ++j) {
            if (is_passive[static_cast<std::size_t>(j)]) {
                p.push_back(j);
            }
        }
        return p;
    };

    // Inner loop: move from the feasible x toward the passive-set minimizer,
    // dropping coordinates that hit zero, until the minimizer is feasible.
    auto inner_loop = [&]() {
        for (;;) {
            const IndexList passive = passive_list();
            if (passive.empty()) {
                x.setZero();
                return;
            }
            PassiveSolve s = solve_passive(passive);
            out.ill_conditioned = out.ill_conditioned || s.ill_conditioned;
            if ((s.values.array() > 0.0).all()) {
                x.setZero();
                x(passive) = s.values;
                return;
            }
            double alpha = std::numeric_limits<double>::infinity();
            Index leaving = -1;
            for (std::size_t q = 0; q < passive.size(); ++q) {
                const double sq = s.values(static_cast<Index>(q));
                if (sq <= 0.0) {
                    const double xq = x(passive[q]);
                    const double ratio = xq / (xq - sq);
                    if (ratio < alpha) { // strict: smallest index wins ties
                        alpha = ratio;
                        leaving = passive[q];
                    }
                }
            }
            for (std::size_t q = 0; q < passive.size(); ++q) {
                const Index j = passive[q];
                x(j) += alpha * (s.values(static_cast<Index>(q)) - x(j));
            }
            x(leaving) = 0.0;
            for (const Index j : passive) {
                if (x(j) <= 0.0) {
                    x(j) = 0.0;
                    is_passive[static_cast<std::size_t>(j)] = 0;
                }
            }
        }
    };

    if (warm_start != nullptr) {
        if (warm_start->size() != d || (warm_start->array() < 0.0).any() || !warm_start->allFinite()) {
            throw Error(ErrorCode::InvalidInput, "warm start must be a finite non-negative vector");
        }
        x = *warm_start;
        for (Index j = 0; j < d; ++j) {
            is_passive[static_cast<std::size_t>(j)] = x(j) > 0.0 ? 1 : 0;
        }
        inner_loop();
        out.objective_trace.push_back(objective(x));
    }

    std::vector<char> blocked(static_cast<std::size_t>(d), 0);
    out.converged = false;
    for (;;) {
        const Vector w = negative_half_gradient(x);
        Index entering = -1;
        double best = threshold;
        for (Index j = 0; j < d; ++j) {
            const auto sj = static_cast<std::size_t>(j);
            if (!is_passive[sj] && !blocked[sj] && w(j) > best) {
                best = w(j);
                entering = j;
            }
        }
        if (entering < 0) {
            out.converged = true;
            break;
        }
        if (out.iterations >= max_iter) {
            break;
        }
        ++out.iterations;
        is_passive[static_cast<std::size_t>(entering)] = 1;
        inner_loop();
        if (!is_passive[static_cast<std::size_t>(entering)]) {
            // Rejected immediately (rounding); do not offer it again until
            // the passive set changes through another variable.
            blocked[static_cast<std::size_t>(entering)] = 1;
        } else {
            std::fill(blocked.begin(), blocked.end(), 0);
        }
        out.objective_trace.push_back(objective(x));
    }

    const Vector w = negative_half_gradient(x);
    double gap = 0.0;
    for (Index j = 0; j < d; ++j) {
        gap = std::max(gap, x(j) > 0.0 ? std::abs(w(j)) : std::max(0.0, w(j)));
    }
    out.coefficients = x;
    out.kkt_gap = gap;
    out.residual_norm = (response - design_ * x).norm();
    out.objective = objective(x);
    return out;
}

NnlsSolution solve_nnls(const NnlsProblem& problem, const NnlsOptions& options) {
    problem.validate();
    const Vector ridge = problem.ridge_weights ? *problem.ridge_weights : Vector::Zero(problem.design.cols());
    return LawsonHanson(problem.design).solve(problem.response, ridge, options);
}

double nnls_objective(const NnlsProblem& problem, const Vector& beta) {
    double value = (problem.response - problem.design * beta).squaredNorm();
    if (problem.ridge_weights) {
        value += (problem.ridge_weights->array() * beta.array().square()).sum();
    }
    return value;
}

} // namespace conic
