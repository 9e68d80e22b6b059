#pragma once

#include "conic/adjacency.hpp"
#include "conic/em_solver.hpp"
#include "conic/rng.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace conic {

struct BsplineBasis {
    Vector grid;          ///< evaluation points 1..n
    Index basis_count = 0;
    int degree = 3;
    Vector knots;
    Matrix matrix;        ///< n x basis_count
    bool knot_averaging = false; ///< interior knots were moved to averages of the grid
};

/// Clamped B-spline basis on [1, n] evaluated at 1..n. Uniform interior
/// knots are tried first; when the square case fails the
/// Schoenberg-Whitney condition, knots are placed by averaging grid points.
BsplineBasis bspline_basis(Index n, Index basis_count, int degree = 3);

/// Balanced panel: one value per subject per time index.
struct LongDataset {
    std::vector<std::string> subjects;
    Matrix values; ///< subjects x time points

    Index subject_count() const { return values.rows(); }
    Index time_count() const { return values.cols(); }
    Vector time_means() const;
    LongDataset subset(const IndexList& rows) const;

    static LongDataset from_matrix(Matrix values);
};

/// Long CSV with header `subject,time,value`; times run 1..n.
LongDataset read_long_csv(std::istream& in);
LongDataset read_long_csv(const std::string& path);
void write_long_csv(std::ostream& out, const LongDataset& data);

/// Seeded shuffle of subjects into disjoint train / test sets.
std::pair<LongDataset, LongDataset> split_subjects(const LongDataset& data, Index train_count, Index test_count,
                                                   std::uint64_t seed);

struct MixedModel {
    Vector f_hat;
    Matrix sigma;   ///< random-effect covariance, K x K
    double sigma2 = 1.0;
    Matrix basis;   ///< n x K basis carrying the random effects

    void validate() const;
    Matrix marginal_covariance() const;
};

struct EffectPosterior {
    Vector u;
    Vector eta_mean;
    Matrix eta_cov;
};

EffectPosterior random_effect_posterior(const Vector& y, const Vector& f_hat, const MixedModel& model);

/// All subjects at once; the posterior covariance is shared across subjects.
struct PanelPosterior {
    Matrix u;         ///< subjects x n
    Matrix eta_means; ///< subjects x K
    Matrix eta_cov;
};

PanelPosterior random_effect_posteriors(const LongDataset& data, const MixedModel& model);

/// Average second moment of the random-effect posteriors, symmetrized and
/// with negative eigenvalues set to zero.
Matrix update_sigma_matrix(const std::vector<Vector>& eta_means, const std::vector<Matrix>& eta_covs);
Matrix update_sigma_matrix(const Matrix& eta_means, const Matrix& shared_cov);

double marginal_loglik(const LongDataset& data, const MixedModel& model);

/// Everything about a restricted fit that depends only on the cone and the
/// mean basis: the generators in data space and their clique structure.
struct RestrictedDesign {
    FacetCone cone;              ///< constraints on f
    std::optional<Matrix> mean_basis; ///< B when f = B theta
    DDPair pair;                 ///< of the cone on the coefficients (theta or f)
    AdjacencyGraph graph;
    CliqueSet cliques;
    Matrix design;               ///< generators mapped to f (delta or B * delta_1), unit-norm columns
};

RestrictedDesign prepare_restricted_design(const FacetCone& cone, const std::optional<Matrix>& mean_basis,
                                           double tol = kDefaultTolerance);

struct MixedConfig {
    EmConfig em;
    Index max_outer = 200;
    double outer_tol = 1e-5;
    Index basis_count = 0; ///< 0 selects K = n
    int degree = 3;
    std::optional<Matrix> random_basis; ///< overrides the B-spline basis for W_i
    std::optional<Matrix> fixed_sigma;  ///< holds Sigma fixed instead of estimating it

    void validate() const;
};

struct MixedFit {
    MixedModel model;
    std::optional<EmFit> em; ///< last inner fit (restricted models only)
    Index outer_iterations = 0;
    bool converged = false;
    std::vector<double> f_change; ///< relative change of f_hat per outer iteration
    std::vector<std::string> warnings;
};

/// Random-effect basis used by the fits: config.random_basis or a B-spline basis.
Matrix random_effect_basis(Index n, const MixedConfig& config);

MixedFit fit_mixed(const LongDataset& data, const RestrictedDesign& design, const MixedConfig& config);
MixedFit fit_mixed(const LongDataset& data, const FacetCone& cone, bool use_spline, const MixedConfig& config);

/// Same alternating scheme with an unconstrained least-squares M-step; with
/// `use_spline`, f is restricted to the column space of the B-spline basis.
MixedFit fit_unrestricted(const LongDataset& data, bool use_spline, const MixedConfig& config);

} // namespace conic
