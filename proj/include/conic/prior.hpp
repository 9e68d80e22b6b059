#pragma once

#include "conic/adjacency.hpp"
#include "conic/rng.hpp"

#include <iosfwd>
#include <optional>

namespace conic {

/// Hyperparameters of the clique spike-and-slab prior.
struct SpikeSlabHyper {
    double v0 = 0.01; ///< spike variance
    double v1 = 10.0; ///< slab variance
    double a = 1.0;   ///< Beta(a, b) on theta_w
    double b = 1.0;
    Vector gamma;     ///< clique probabilities, one per maximal clique
    Vector theta;     ///< per-clique inclusion probabilities
    double alpha_ig = 0.5; ///< Gamma(alpha, beta) on 1 / sigma^2
    double beta_ig = 0.5;
    double phi = 0.05; ///< probability of the full-support component

    /// Defaults with uniform gamma and theta = 0.5 over `clique_count` cliques.
    static SpikeSlabHyper with_cliques(std::size_t clique_count);

    void validate() const;
};

struct PriorDraw {
    std::optional<Index> clique_index; ///< unset for a full-support or adjacency draw
    std::optional<Index> anchor;       ///< node whose neighborhood was used (adjacency prior)
    IndexList coordinates;             ///< coordinates eligible for the slab
    std::vector<int> indicators;       ///< one per entry of `coordinates`
    Vector b;
    Vector mu;
    bool dense = false;
};

/// Half-normal density 2 (2 pi v)^{-1/2} exp(-x^2 / (2 v)) for x >= 0.
double truncated_normal_density(double x, double variance);

/// Categorical draw from hyper.gamma.
Index sample_clique(const SpikeSlabHyper& hyper, const CliqueSet& cliques, Rng& rng);

struct CliqueCoefficients {
    std::vector<int> indicators;
    Vector b;
};

/// Indicators ~ Bernoulli(theta_w) on the clique, half-normal entries with
/// variance v1 (indicator 1) or v0 (indicator 0), zeros elsewhere.
CliqueCoefficients sample_b_given_clique(const SpikeSlabHyper& hyper, Index clique_index, const IndexList& clique,
                                         Index ray_count, Rng& rng);

PriorDraw sample_prior_mu(const DDPair& pair, const CliqueSet& cliques, const SpikeSlabHyper& hyper, Rng& rng,
                          bool use_mixture = false);

/// sum over the clique of log(theta gamma phi_1(b_i) + (1 - theta gamma) phi_0(b_i)).
double log_prior_b(const Vector& b, Index clique_index, const IndexList& clique, const SpikeSlabHyper& hyper,
                   double tol = kDefaultTolerance);

/// Uniform anchor node, support restricted to its closed neighborhood; the
/// inclusion probability is the mean of hyper.theta.
PriorDraw sample_adjacency_prior(const DDPair& pair, const AdjacencyGraph& graph, const SpikeSlabHyper& hyper,
                                 Rng& rng);

/// One draw per row: clique index (or -1), then b, then mu.
void write_prior_draws_csv(std::ostream& out, const std::vector<PriorDraw>& draws);

} // namespace conic
