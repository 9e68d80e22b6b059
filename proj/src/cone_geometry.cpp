#include "conic/cone_geometry.hpp"

#include "conic/error.hpp"
#include "conic/nnls.hpp"

#include <boost/dynamic_bitset.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace conic {

bool FacetCone::is_equality(Index row) const {
    return std::binary_search(linearity.begin(), linearity.end(), row);
}

IndexList FacetCone::inequality_rows() const {
    IndexList rows;
    for (Index i = 0; i < a.rows(); ++i) {
        if (!is_equality(i)) {
            rows.push_back(i);
        }
    }
    return rows;
}

void FacetCone::validate() const {
    if (a.rows() == 0 || a.cols() == 0) {
        throw Error(ErrorCode::InvalidInput, "facet matrix must be non-empty");
    }
    require_finite(a, "facet matrix");
    for (std::size_t k = 0; k < linearity.size(); ++k) {
        if (linearity[k] < 0 || linearity[k] >= a.rows()) {
            throw Error(ErrorCode::IndexOutOfRange,
                        "linearity row " + std::to_string(linearity[k]) + " outside the facet matrix");
        }
        if (k > 0 && linearity[k] <= linearity[k - 1]) {
            throw Error(ErrorCode::InvalidInput, "linearity rows must be sorted and unique");
        }
    }
}

namespace {

using Bits = boost::dynamic_bitset<>;

struct WorkRay {
    Vector v;
    Bits zeros;
};

struct RaySet {
    Matrix rays;             // k x d
    std::vector<Bits> zeros; // per ray, over the rows of the input matrix
};

// Extreme rays of { z : m z >= 0 } for m of full column rank.
RaySet double_description(const Matrix& m, double tol) {
    const Index rows = m.rows();
    const Index k = m.cols();
    const auto nbits = static_cast<std::size_t>(rows);

    Matrix unit = m;
    std::vector<char> zero_row(nbits, 0);
    for (Index i = 0; i < rows; ++i) {
        const double norm = unit.row(i).norm();
        if (norm <= tol) {
            zero_row[static_cast<std::size_t>(i)] = 1;
            unit.row(i).setZero();
        } else {
            unit.row(i) /= norm;
        }
    }

    // Greedy basis of k independent rows in input order.
    IndexList basis;
    std::vector<char> processed(nbits, 0);
    for (Index i = 0; i < rows && static_cast<Index>(basis.size()) < k; ++i) {
        if (zero_row[static_cast<std::size_t>(i)]) {
            continue;
        }
        IndexList trial = basis;
        trial.push_back(i);
        if (numeric_rank(select_rows(unit, trial), tol) == static_cast<Index>(trial.size())) {
            basis = std::move(trial);
        }
    }
    if (static_cast<Index>(basis.size()) < k) {
        throw Error(ErrorCode::NotPointed, "inequality rows do not have full column rank");
    }

    const Matrix inverse = select_rows(unit, basis).fullPivLu().inverse();
    std::vector<WorkRay> rays;
    rays.reserve(static_cast<std::size_t>(k));
    for (Index j = 0; j < k; ++j) {
        WorkRay ray{inverse.col(j).normalized(), Bits(nbits)};
        for (Index b = 0; b < k; ++b) {
            if (b != j) {
                ray.zeros.set(static_cast<std::size_t>(basis[static_cast<std::size_t>(b)]));
            }
        }
        rays.push_back(std::move(ray));
    }
    for (const Index b : basis) {
        processed[static_cast<std::size_t>(b)] = 1;
    }

    for (Index i = 0; i < rows; ++i) {
        const auto bit = static_cast<std::size_t>(i);
        if (processed[bit]) {
            continue;
        }
        processed[bit] = 1;
        if (zero_row[bit]) {
            for (auto& ray : rays) {
                ray.zeros.set(bit);
            }
            continue;
        }
        std::vector<std::size_t> positive, zero, negative;
        std::vector<double> value(rays.size());
        for (std::size_t r = 0; r < rays.size(); ++r) {
            value[r] = unit.row(i).dot(rays[r].v);
            if (std::abs(value[r]) <= tol) {
                zero.push_back(r);
                rays[r].zeros.set(bit);
            } else if (value[r] > 0.0) {
                positive.push_back(r);
            } else {
                negative.push_back(r);
            }
        }
        if (negative.empty()) {
            continue;
        }

        std::vector<WorkRay> next;
        next.reserve(positive.size() + zero.size());
        for (const auto r : positive) {
            next.push_back(rays[r]);
        }
        for (const auto r : zero) {
            next.push_back(rays[r]);
        }
        for (const auto p : positive) {
            for (const auto q : negative) {
                Bits common = rays[p].zeros & rays[q].zeros;
                if (static_cast<Index>(common.count()) < k - 2) {
                    continue;
                }
                bool adjacent = true;
                for (std::size_t r = 0; r < rays.size() && adjacent; ++r) {
                    if (r != p && r != q && common.is_subset_of(rays[r].zeros)) {
                        adjacent = false;
                    }
                }
                if (!adjacent) {
                    continue;
                }
                Vector v = value[p] * rays[q].v - value[q] * rays[p].v;
                common.set(bit);
                next.push_back(WorkRay{v.normalized(), std::move(common)});
            }
        }
        rays = std::move(next);
    }

    // Re-derive each ray as the null vector of its active rows to shed the
    // rounding accumulated through the incremental construction.
    RaySet out;
    out.rays.resize(k, static_cast<Index>(rays.size()));
    for (std::size_t r = 0; r < rays.size(); ++r) {
        Vector v = rays[r].v;
        IndexList active;
        for (std::size_t b = rays[r].zeros.find_first(); b != Bits::npos; b = rays[r].zeros.find_next(b)) {
            active.push_back(static_cast<Index>(b));
        }
        if (static_cast<Index>(active.size()) >= k - 1 && k > 1) {
            const Matrix sub = select_rows(unit, active);
            Eigen::JacobiSVD<Matrix> svd(sub, Eigen::ComputeFullV);
            const Vector& s = svd.singularValues();
            const double threshold = tol * std::max<double>(1.0, s(0)) * static_cast<double>(std::max(sub.rows(), k));
            const bool rank_k_minus_1 = s(k - 2) > threshold && (s.size() < k || s(k - 1) <= threshold);
            if (rank_k_minus_1) {
                Vector refined = svd.matrixV().col(k - 1);
                if (refined.dot(v) < 0.0) {
                    refined = -refined;
                }
                v = refined;
            }
        }
        out.rays.col(static_cast<Index>(r)) = v.normalized();
        out.zeros.push_back(rays[r].zeros);
    }
    return out;
}

bool lex_less_rounded(const Vector& x, const Vector& y) {
    for (Index i = 0; i < x.size(); ++i) {
        const double a = std::round(x(i) * 1e12);
        const double b = std::round(y(i) * 1e12);
        if (a != b) {
            return a < b;
        }
    }
    return false;
}

Matrix canonical_order(const Matrix& rays) {
    std::vector<Index> order(static_cast<std::size_t>(rays.cols()));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) {
        return lex_less_rounded(rays.col(i), rays.col(j));
    });
    return select_cols(rays, order);
}

} // namespace

DDPair make_dd_pair(const FacetCone& cone, const ConversionOptions& options) {
    cone.validate();
    const double tol = options.tol;
    const Index n = cone.dim();
    if (numeric_rank(cone.a, tol) < n) {
        throw Error(ErrorCode::NotPointed, "facet matrix rank is below the ambient dimension");
    }

    const IndexList inequality = cone.inequality_rows();
    const Matrix basis = nullspace_basis(select_rows(cone.a, cone.linearity), n, tol);
    const Index k = basis.cols();
    if (k == 0 || inequality.empty()) {
        throw Error(ErrorCode::DegenerateCone, "equality rows leave only the origin");
    }
    const Matrix reduced = select_rows(cone.a, inequality) * basis;
    RaySet dd = double_description(reduced, tol);
    const Index d = dd.rays.cols();
    if (d == 0) {
        throw Error(ErrorCode::DegenerateCone, "cone has no extreme rays");
    }

    // Classify inequality rows by the rays they are active on: a facet row
    // supports a set of rays spanning a hyperplane of the cone's span.
    const Index cone_dim = numeric_rank(dd.rays, tol);
    enum class RowKind { Facet, Implicit, Redundant };
    std::vector<RowKind> kind(inequality.size(), RowKind::Redundant);
    std::vector<Bits> facet_supports;
    for (std::size_t q = 0; q < inequality.size(); ++q) {
        Bits support(static_cast<std::size_t>(d));
        IndexList active;
        for (Index r = 0; r < d; ++r) {
            if (dd.zeros[static_cast<std::size_t>(r)].test(q)) {
                support.set(static_cast<std::size_t>(r));
                active.push_back(r);
            }
        }
        if (static_cast<Index>(active.size()) == d) {
            kind[q] = RowKind::Implicit;
            continue;
        }
        if (numeric_rank(select_cols(dd.rays, active), tol) != cone_dim - 1) {
            continue;
        }
        if (std::find(facet_supports.begin(), facet_supports.end(), support) != facet_supports.end()) {
            continue; // positive multiple of an earlier facet row
        }
        facet_supports.push_back(support);
        kind[q] = RowKind::Facet;
    }

    FacetCone facet;
    if (!options.reduce_redundant) {
        for (std::size_t q = 0; q < inequality.size(); ++q) {
            if (kind[q] == RowKind::Redundant) {
                throw Error(ErrorCode::NotIrreducible,
                            "inequality row " + std::to_string(inequality[q]) + " is redundant");
            }
            if (kind[q] == RowKind::Implicit) {
                throw Error(ErrorCode::NotIrreducible,
                            "inequality row " + std::to_string(inequality[q]) +
                                " holds with equality on the whole cone (rows are conically dependent)");
            }
        }
        facet = cone;
    } else {
        std::vector<Index> keep;
        IndexList linearity;
        std::size_t q = 0;
        for (Index i = 0; i < cone.row_count(); ++i) {
            if (cone.is_equality(i)) {
                linearity.push_back(static_cast<Index>(keep.size()));
                keep.push_back(i);
                continue;
            }
            const RowKind rk = kind[q++];
            if (rk == RowKind::Redundant) {
                continue;
            }
            if (rk == RowKind::Implicit) {
                linearity.push_back(static_cast<Index>(keep.size()));
            }
            keep.push_back(i);
        }
        facet.a = select_rows(cone.a, keep);
        facet.linearity = std::move(linearity);
    }

    Matrix rays = basis * dd.rays;
    for (Index r = 0; r < d; ++r) {
        rays.col(r).normalize();
    }
    return DDPair{std::move(facet), VertexCone{canonical_order(rays)}, tol};
}

VertexCone facet_to_vertex(const FacetCone& cone, const ConversionOptions& options) {
    return make_dd_pair(cone, options).vertex;
}

FacetCone vertex_to_facet(const VertexCone& cone, double tol) {
    if (cone.delta.cols() == 0 || cone.delta.rows() == 0) {
        throw Error(ErrorCode::DegenerateCone, "no generators");
    }
    require_finite(cone.delta, "generator matrix");
    if (numeric_rank(cone.delta, tol) < cone.dim()) {
        throw Error(ErrorCode::DegenerateCone, "generators do not span a full-dimensional cone");
    }
    FacetCone dual{cone.delta.transpose(), {}};
    for (Index j = 0; j < dual.a.rows(); ++j) {
        const double norm = dual.a.row(j).norm();
        if (norm <= tol) {
            throw Error(ErrorCode::DegenerateCone, "zero generator " + std::to_string(j));
        }
        dual.a.row(j) /= norm;
    }
    const DDPair dual_pair = make_dd_pair(dual, ConversionOptions{tol, true});
    if (!dual_pair.facet.linearity.empty()) {
        throw Error(ErrorCode::DegenerateCone, "generators do not span a pointed cone");
    }
    return FacetCone{dual_pair.vertex.delta.transpose(), {}};
}

ConicIndependence conically_independent_rows(const Matrix& a, double tol) {
    require_finite(a, "matrix");
    const Index m = a.rows();
    const Index n = a.cols();
    ConicIndependence out;
    if (m == 0) {
        return out;
    }
    Vector norms(m);
    for (Index i = 0; i < m; ++i) {
        norms(i) = a.row(i).norm();
        if (norms(i) <= tol) {
            Vector witness = Vector::Zero(m);
            witness(i) = 1.0;
            out.independent = false;
            out.witness = witness;
            return out;
        }
    }
    // min || [A_hat'; 1'] lambda - [0; 1] ||  over lambda >= 0; zero residual
    // certifies a non-trivial non-negative combination of rows equal to zero.
    NnlsProblem problem;
    problem.design.resize(n + 1, m);
    problem.design.topRows(n) = (norms.cwiseInverse().asDiagonal() * a).transpose();
    problem.design.row(n).setOnes();
    problem.response = Vector::Zero(n + 1);
    problem.response(n) = 1.0;
    const NnlsSolution solution = solve_nnls(problem, NnlsOptions{1e-14, 0});
    if (solution.residual_norm <= 100.0 * tol) {
        Vector witness = solution.coefficients.cwiseQuotient(norms);
        witness /= witness.sum();
        out.independent = false;
        out.witness = witness;
    }
    return out;
}

IndexList zero_set(const DDPair& pair, Index ray) {
    if (ray < 0 || ray >= pair.vertex.ray_count()) {
        throw Error(ErrorCode::IndexOutOfRange, "ray index " + std::to_string(ray));
    }
    IndexList rows;
    const Vector activity = pair.facet.a * pair.vertex.delta.col(ray);
    for (Index i = 0; i < activity.size(); ++i) {
        if (std::abs(activity(i)) <= pair.tolerance) {
            rows.push_back(i);
        }
    }
    return rows;
}

bool in_conic_hull(const Vector& target, const Matrix& generators, double slack) {
    const double threshold = slack * std::max(1.0, target.norm());
    if (generators.cols() == 0) {
        return target.norm() <= threshold;
    }
    NnlsProblem problem{generators, target, std::nullopt};
    return solve_nnls(problem, NnlsOptions{1e-14, 0}).residual_norm <= threshold;
}

DDValidationReport verify_dd_pair(const DDPair& pair) {
    const Matrix& a = pair.facet.a;
    const Matrix& delta = pair.vertex.delta;
    const double tol = pair.tolerance;
    if (a.cols() != delta.rows()) {
        throw Error(ErrorCode::ShapeMismatch, "facet matrix has " + std::to_string(a.cols()) +
                                                  " columns but rays have dimension " +
                                                  std::to_string(delta.rows()));
    }
    pair.facet.validate();
    require_finite(delta, "ray matrix");

    DDValidationReport report;
    const Index n = a.cols();
    const Index d = delta.cols();
    const Matrix activity = a * delta;
    for (Index i = 0; i < a.rows(); ++i) {
        const bool equality = pair.facet.is_equality(i);
        for (Index j = 0; j < d; ++j) {
            const double v = activity(i, j);
            if (v < -tol || (equality && v > tol)) {
                report.sign_violations.push_back({i, j, v});
            }
        }
    }
    for (Index j = 0; j < d; ++j) {
        const IndexList active = zero_set(pair, j);
        if (numeric_rank(select_rows(a, active), tol) != n - 1) {
            report.non_extreme_rays.push_back(j);
        }
    }
    const double slack = 100.0 * tol;
    for (Index j = 0; j < d; ++j) {
        IndexList others;
        for (Index r = 0; r < d; ++r) {
            if (r != j) {
                others.push_back(r);
            }
        }
        if (in_conic_hull(delta.col(j), select_cols(delta, others), slack)) {
            report.redundant_rays.push_back(j);
        }
    }
    // Farkas: a_i' x >= 0 is implied by the rest iff a_i lies in the cone of
    // the other inequality normals plus both signs of the equality normals.
    Matrix unit = a;
    for (Index i = 0; i < a.rows(); ++i) {
        const double norm = a.row(i).norm();
        if (norm > 0.0) {
            unit.row(i) /= norm;
        }
    }
    for (const Index i : pair.facet.inequality_rows()) {
        std::vector<Vector> cols;
        for (Index r = 0; r < a.rows(); ++r) {
            if (r == i) {
                continue;
            }
            cols.emplace_back(unit.row(r).transpose());
            if (pair.facet.is_equality(r)) {
                cols.emplace_back(-unit.row(r).transpose());
            }
        }
        Matrix generators(n, static_cast<Index>(cols.size()));
        for (std::size_t c = 0; c < cols.size(); ++c) {
            generators.col(static_cast<Index>(c)) = cols[c];
        }
        if (in_conic_hull(unit.row(i).transpose(), generators, slack)) {
            report.redundant_facets.push_back(i);
        }
    }
    return report;
}

Vector projection_coefficients(const Vector& y, const VertexCone& cone) {
    if (y.size() != cone.dim()) {
        throw Error(ErrorCode::ShapeMismatch, "point dimension does not match the cone");
    }
    require_finite(y, "point");
    NnlsProblem problem{cone.delta, y, std::nullopt};
    return solve_nnls(problem, NnlsOptions{1e-13, 0}).coefficients;
}

Vector project_onto_cone(const Vector& y, const VertexCone& cone) {
    return cone.delta * projection_coefficients(y, cone);
}

FacetCone transform_cone(const FacetCone& cone, const Matrix& basis, double tol) {
    cone.validate();
    require_finite(basis, "basis");
    if (basis.rows() != cone.dim()) {
        throw Error(ErrorCode::ShapeMismatch, "basis must have as many rows as the cone dimension");
    }
    if (basis.cols() > basis.rows() || basis.cols() == 0) {
        throw Error(ErrorCode::InvalidInput, "basis must be n x J with 1 <= J <= n");
    }
    FacetCone out{cone.a * basis, cone.linearity};
    if (numeric_rank(out.a, tol) < out.a.cols()) {
        throw Error(ErrorCode::Result1Violated, "full column rank: a * basis is rank deficient");
    }
    if (!conically_independent_rows(select_rows(out.a, out.inequality_rows()), tol).independent) {
        throw Error(ErrorCode::Result1Violated,
                    "conic independence: rows of a * basis admit a non-negative combination equal to zero");
    }
    return out;
}

} // namespace conic
