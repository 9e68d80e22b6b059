#include "oracles.hpp"

#include "conic/error.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace oracle {

namespace {

using Rational = boost::multiprecision::cpp_rational;

template <typename F>
void for_each_subset(Index m, Index k, F&& f) {
    IndexList subset(static_cast<std::size_t>(k));
    for (Index i = 0; i < k; ++i) {
        subset[static_cast<std::size_t>(i)] = i;
    }
    while (true) {
        f(subset);
        Index i = k - 1;
        while (i >= 0 && subset[static_cast<std::size_t>(i)] == m - k + i) {
            --i;
        }
        if (i < 0) {
            return;
        }
        ++subset[static_cast<std::size_t>(i)];
        for (Index j = i + 1; j < k; ++j) {
            subset[static_cast<std::size_t>(j)] = subset[static_cast<std::size_t>(j - 1)] + 1;
        }
    }
}

// Null space of an integer matrix over the rationals.
std::vector<std::vector<Rational>> rational_nullspace(const std::vector<std::vector<Rational>>& rows, Index cols) {
    auto m = rows;
    std::vector<Index> pivot_cols;
    std::size_t r = 0;
    for (Index c = 0; c < cols && r < m.size(); ++c) {
        std::size_t pivot = r;
        while (pivot < m.size() && m[pivot][static_cast<std::size_t>(c)] == 0) {
            ++pivot;
        }
        if (pivot == m.size()) {
            continue;
        }
        std::swap(m[pivot], m[r]);
        const Rational lead = m[r][static_cast<std::size_t>(c)];
        for (auto& x : m[r]) {
            x /= lead;
        }
        for (std::size_t q = 0; q < m.size(); ++q) {
            if (q != r && m[q][static_cast<std::size_t>(c)] != 0) {
                const Rational factor = m[q][static_cast<std::size_t>(c)];
                for (Index j = 0; j < cols; ++j) {
                    m[q][static_cast<std::size_t>(j)] -= factor * m[r][static_cast<std::size_t>(j)];
                }
            }
        }
        pivot_cols.push_back(c);
        ++r;
    }
    std::vector<std::vector<Rational>> basis;
    for (Index free = 0; free < cols; ++free) {
        if (std::find(pivot_cols.begin(), pivot_cols.end(), free) != pivot_cols.end()) {
            continue;
        }
        std::vector<Rational> v(static_cast<std::size_t>(cols), Rational(0));
        v[static_cast<std::size_t>(free)] = 1;
        for (std::size_t k = 0; k < pivot_cols.size(); ++k) {
            v[static_cast<std::size_t>(pivot_cols[k])] = -m[k][static_cast<std::size_t>(free)];
        }
        basis.push_back(std::move(v));
    }
    return basis;
}

} // namespace

Matrix brute_force_rays(const Matrix& a, double tol) {
    const Index m = a.rows();
    const Index n = a.cols();
    std::vector<Vector> rays;
    auto consider = [&](const IndexList& subset) {
        const Matrix sub = conic::select_rows(a, subset);
        Eigen::JacobiSVD<Matrix> svd(sub, Eigen::ComputeFullV);
        const Vector& s = svd.singularValues();
        if (n > 1 && s(n - 2) <= tol * std::max(1.0, s(0))) {
            return; // rank below n - 1
        }
        if (s.size() == n && s(n - 1) > tol * std::max(1.0, s(0))) {
            return; // full rank: only the origin
        }
        Vector v = svd.matrixV().col(n - 1);
        const Vector activity = a * v;
        if (activity.minCoeff() < -tol) {
            v = -v;
        }
        if ((a * v).minCoeff() < -tol) {
            return;
        }
        v.normalize();
        for (const auto& r : rays) {
            if ((r - v).norm() < 1e-7) {
                return;
            }
        }
        rays.push_back(v);
    };
    if (n == 1) {
        Vector v(1);
        v(0) = a.col(0).minCoeff() >= 0 ? 1.0 : -1.0;
        rays.push_back(v);
    } else {
        for_each_subset(m, n - 1, consider);
    }
    Matrix out(n, static_cast<Index>(rays.size()));
    for (std::size_t j = 0; j < rays.size(); ++j) {
        out.col(static_cast<Index>(j)) = rays[j];
    }
    return out;
}

double set_distance(const Matrix& x, const Matrix& y) {
    if (x.cols() != y.cols() || x.rows() != y.rows()) {
        return std::numeric_limits<double>::infinity();
    }
    auto one_way = [](const Matrix& p, const Matrix& q) {
        double worst = 0.0;
        for (Index i = 0; i < p.cols(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (Index j = 0; j < q.cols(); ++j) {
                best = std::min(best, (p.col(i).normalized() - q.col(j).normalized()).norm());
            }
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(one_way(x, y), one_way(y, x));
}

ExhaustiveNnls exhaustive_nnls(const Matrix& x, const Vector& y, const Vector& ridge) {
    const Index d = x.cols();
    ExhaustiveNnls best{Vector::Zero(d), y.squaredNorm()};
    for (std::uint32_t mask = 1; mask < (1u << d); ++mask) {
        IndexList passive;
        for (Index j = 0; j < d; ++j) {
            if (mask & (1u << j)) {
                passive.push_back(j);
            }
        }
        const Matrix xp = conic::select_cols(x, passive);
        Matrix lhs = xp.transpose() * xp;
        for (std::size_t k = 0; k < passive.size(); ++k) {
            lhs(static_cast<Index>(k), static_cast<Index>(k)) += ridge(passive[k]);
        }
        const Vector coef = lhs.completeOrthogonalDecomposition().solve(xp.transpose() * y);
        if (coef.minCoeff() < 0.0) {
            continue;
        }
        Vector beta = Vector::Zero(d);
        for (std::size_t k = 0; k < passive.size(); ++k) {
            beta(passive[k]) = coef(static_cast<Index>(k));
        }
        const double objective = (y - x * beta).squaredNorm() + (ridge.array() * beta.array().square()).sum();
        if (objective < best.objective) {
            best = {beta, objective};
        }
    }
    return best;
}

Vector projected_gradient_nnls(const Matrix& x, const Vector& y, const Vector& ridge, int iterations) {
    Matrix h = x.transpose() * x;
    h.diagonal() += ridge;
    const Vector g0 = x.transpose() * y;
    const double lipschitz = Eigen::SelfAdjointEigenSolver<Matrix>(h, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    Vector beta = Vector::Zero(x.cols());
    Vector previous = beta;
    // accelerated projected gradient (FISTA)
    double t = 1.0;
    Vector z = beta;
    for (int it = 0; it < iterations; ++it) {
        const Vector grad = h * z - g0;
        beta = (z - grad / lipschitz).cwiseMax(0.0);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        z = beta + ((t - 1.0) / t_next) * (beta - previous);
        if ((beta - previous).norm() < 1e-15 * std::max(1.0, beta.norm()) && it > 100) {
            break;
        }
        previous = beta;
        t = t_next;
    }
    return beta;
}

std::vector<IndexList> exhaustive_cliques(const conic::AdjacencyGraph& graph) {
    const Index d = graph.node_count;
    std::vector<std::uint32_t> cliques;
    auto is_clique = [&](std::uint32_t mask) {
        for (Index i = 0; i < d; ++i) {
            if (!(mask & (1u << i))) {
                continue;
            }
            for (Index j = i + 1; j < d; ++j) {
                if ((mask & (1u << j)) && !graph.adjacent(i, j)) {
                    return false;
                }
            }
        }
        return true;
    };
    for (std::uint32_t mask = 1; mask < (1u << d); ++mask) {
        if (!is_clique(mask)) {
            continue;
        }
        bool maximal = true;
        for (Index k = 0; k < d && maximal; ++k) {
            if (!(mask & (1u << k)) && is_clique(mask | (1u << k))) {
                maximal = false;
            }
        }
        if (maximal) {
            cliques.push_back(mask);
        }
    }
    std::vector<IndexList> out;
    for (const auto mask : cliques) {
        IndexList c;
        for (Index i = 0; i < d; ++i) {
            if (mask & (1u << i)) {
                c.push_back(i);
            }
        }
        out.push_back(c);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<IndexList> exact_zero_sets(const Matrix& integer_a, const std::vector<IndexList>& float_zero_sets) {
    const Index m = integer_a.rows();
    const Index n = integer_a.cols();
    std::vector<std::vector<Rational>> a(static_cast<std::size_t>(m), std::vector<Rational>(static_cast<std::size_t>(n)));
    for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < n; ++j) {
            a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                Rational(static_cast<long long>(std::llround(integer_a(i, j))));
        }
    }
    std::vector<IndexList> out;
    for (const auto& zeros : float_zero_sets) {
        std::vector<std::vector<Rational>> rows;
        for (const Index i : zeros) {
            rows.push_back(a[static_cast<std::size_t>(i)]);
        }
        const auto basis = rational_nullspace(rows, n);
        if (basis.size() != 1) {
            out.emplace_back();
            continue;
        }
        std::vector<Rational> activity(static_cast<std::size_t>(m), Rational(0));
        bool has_positive = false, has_negative = false;
        for (Index i = 0; i < m; ++i) {
            for (Index j = 0; j < n; ++j) {
                activity[static_cast<std::size_t>(i)] +=
                    a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * basis[0][static_cast<std::size_t>(j)];
            }
            has_positive |= activity[static_cast<std::size_t>(i)] > 0;
            has_negative |= activity[static_cast<std::size_t>(i)] < 0;
        }
        if (has_positive && has_negative) {
            out.emplace_back();
            continue;
        }
        IndexList exact;
        for (Index i = 0; i < m; ++i) {
            if (activity[static_cast<std::size_t>(i)] == 0) {
                exact.push_back(i);
            }
        }
        out.push_back(exact);
    }
    return out;
}

conic::FacetCone random_proper_cone(Index n, Index m, conic::Rng& rng) {
    auto gaussian_matrix = [&](Index r, Index c) {
        Matrix g(r, c);
        for (Index i = 0; i < r; ++i) {
            for (Index j = 0; j < c; ++j) {
                g(i, j) = rng.normal();
            }
        }
        return g;
    };
    while (true) {
        Matrix a(m, n);
        if (n == 2) {
            a = gaussian_matrix(2, 2);
        } else {
            for (Index i = 0; i < m; ++i) {
                Vector u(n - 1);
                for (Index k = 0; k < n - 1; ++k) {
                    u(k) = rng.normal();
                }
                a(i, 0) = 1.0;
                a.row(i).tail(n - 1) = u.normalized().transpose();
            }
            bool separated = true;
            for (Index i = 0; i < m && separated; ++i) {
                for (Index j = i + 1; j < m; ++j) {
                    if ((a.row(i) - a.row(j)).norm() < 0.25) {
                        separated = false;
                        break;
                    }
                }
            }
            if (!separated) {
                continue;
            }
            const Matrix t = Matrix::Identity(n, n) + 0.3 * gaussian_matrix(n, n);
            a = a * t;
        }
        Eigen::JacobiSVD<Matrix> svd(a);
        const Vector& s = svd.singularValues();
        if (s(s.size() - 1) < 0.1 * s(0)) {
            continue;
        }
        conic::FacetCone cone{a, {}};
        try {
            (void)conic::make_dd_pair(cone);
        } catch (const conic::Error&) {
            continue; // near-degenerate draw
        }
        return cone;
    }
}

Conditional joint_gaussian_condition(const Matrix& b, const Matrix& sigma, double sigma2, const Vector& y,
                                     const Vector& f) {
    const Index n = b.rows();
    const Index k = b.cols();
    Matrix joint(k + n, k + n);
    joint.topLeftCorner(k, k) = sigma;
    joint.topRightCorner(k, n) = sigma * b.transpose();
    joint.bottomLeftCorner(n, k) = b * sigma;
    joint.bottomRightCorner(n, n) = b * sigma * b.transpose() + sigma2 * Matrix::Identity(n, n);
    const Matrix syy_inv = joint.bottomRightCorner(n, n).inverse();
    Conditional out;
    out.mean = joint.topRightCorner(k, n) * syy_inv * (y - f);
    out.cov = joint.topLeftCorner(k, k) - joint.topRightCorner(k, n) * syy_inv * joint.bottomLeftCorner(n, k);
    return out;
}

double naive_loglik(const Matrix& values, const Vector& f, const Matrix& cov) {
    const Matrix inv = cov.inverse();
    const double log_det = std::log(cov.determinant());
    const double n = static_cast<double>(f.size());
    double total = 0.0;
    for (Index i = 0; i < values.rows(); ++i) {
        const Vector r = values.row(i).transpose() - f;
        total += -0.5 * (n * std::log(2.0 * std::numbers::pi) + log_det + r.dot(inv * r));
    }
    return total;
}

} // namespace oracle
