#pragma once

#include "conic/linalg.hpp"

#include <optional>
#include <string>
#include <vector>

namespace conic {

inline constexpr double kDefaultTolerance = 1e-10;

/// { mu : a_i' mu >= 0 for every row i, a_i' mu = 0 for i in linearity }
struct FacetCone {
    Matrix a;
    IndexList linearity; ///< sorted, unique row indices held at equality

    Index dim() const { return a.cols(); }
    Index row_count() const { return a.rows(); }
    bool is_equality(Index row) const;
    IndexList inequality_rows() const;

    /// Shape/finiteness/index checks only; geometric invariants are the job
    /// of facet_to_vertex and verify_dd_pair.
    void validate() const;
};

/// Conic hull of the columns of delta (unit-norm extreme rays).
struct VertexCone {
    Matrix delta;

    Index dim() const { return delta.rows(); }
    Index ray_count() const { return delta.cols(); }
};

struct DDPair {
    FacetCone facet;
    VertexCone vertex;
    double tolerance = kDefaultTolerance;
};

struct ConversionOptions {
    double tol = kDefaultTolerance;
    /// Drop redundant inequality rows instead of failing with NotIrreducible.
    bool reduce_redundant = false;
};

/// Extreme rays of a pointed cone by the incremental (Motzkin) double
/// description method. Equality rows are eliminated first by restricting to
/// their nullspace. Rays are unit-norm and lexicographically ordered.
///
/// Throws NotPointed when rank(a) < n, NotIrreducible naming the first
/// redundant inequality row (unless reduction is enabled) and DegenerateCone
/// when the cone is {0}.
VertexCone facet_to_vertex(const FacetCone& cone, const ConversionOptions& options = {});

/// As facet_to_vertex, but also returns the (possibly reduced) facet side.
DDPair make_dd_pair(const FacetCone& cone, const ConversionOptions& options = {});

/// Facets of conv-cone(delta) as the extreme rays of the dual cone
/// { y : delta' y >= 0 }. Throws DegenerateCone when the hull is not
/// full-dimensional or not pointed.
FacetCone vertex_to_facet(const VertexCone& cone, double tol = kDefaultTolerance);

struct ConicIndependence {
    bool independent = true;
    /// lambda >= 0, sum lambda = 1, a' lambda = 0 when dependent.
    std::optional<Vector> witness;
};

/// Decides feasibility of a' lambda = 0, sum lambda = 1, lambda >= 0.
ConicIndependence conically_independent_rows(const Matrix& a, double tol = kDefaultTolerance);

/// Rows of the facet matrix active (|a_i' delta_j| <= tol) at ray j.
IndexList zero_set(const DDPair& pair, Index ray);

struct ActivityViolation {
    Index row = 0;
    Index ray = 0;
    double value = 0.0;
};

struct DDValidationReport {
    std::vector<ActivityViolation> sign_violations; ///< a_i' delta_j < -tol, or equality rows off zero
    IndexList non_extreme_rays;   ///< active rows do not have rank n - 1
    IndexList redundant_rays;     ///< ray is a non-negative combination of the others
    IndexList redundant_facets;   ///< inequality row implied by the remaining rows

    bool clean() const {
        return sign_violations.empty() && non_extreme_rays.empty() && redundant_rays.empty() &&
               redundant_facets.empty();
    }
};

DDValidationReport verify_dd_pair(const DDPair& pair);

/// Euclidean projection of y onto the cone: delta * argmin_{b >= 0} ||y - delta b||.
Vector project_onto_cone(const Vector& y, const VertexCone& cone);

/// Same projection, returning the conic coefficients b.
Vector projection_coefficients(const Vector& y, const VertexCone& cone);

/// { theta : (a * basis) theta >= 0 } after checking that a * basis has full
/// column rank and conically independent inequality rows. Throws
/// Result1Violated naming the failed condition.
FacetCone transform_cone(const FacetCone& cone, const Matrix& basis, double tol = kDefaultTolerance);

/// True when `target` lies in the conic hull of `generators` columns, up to a
/// residual of `slack * max(1, ||target||)`.
bool in_conic_hull(const Vector& target, const Matrix& generators, double slack);

} // namespace conic
