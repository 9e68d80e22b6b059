#pragma once

#include "conic/nnls.hpp"
#include "conic/prior.hpp"

#include <string>
#include <vector>

namespace conic {

struct EmConfig {
    /// gamma/theta here are the starting values; when their length does not
    /// match the clique count, gamma starts uniform and theta at 0.5.
    SpikeSlabHyper hyper;
    Index max_iter = 500;
    double rel_tol = 1e-6;
    bool clamp_theta = true;
    bool freeze_hyper = false;
    NnlsOptions nnls;

    void validate() const;
};

struct EmState {
    Vector beta;
    double sigma2 = 1.0;
    std::vector<Vector> p_star; ///< p_star[w](k): inclusion probability of the k-th member of clique w
    Vector p_star_sums;
    Vector gamma;
    Vector theta;
    double log_posterior = 0.0;
    Index iteration = 0;
};

struct EmFit {
    EmState state;
    Vector mu_hat;
    bool converged = false;
    std::vector<double> trace;
    std::vector<std::string> warnings;
};

/// Regression data in pooled form: the response is observed `replication`
/// times (so the data term is replication * ||y - X beta||^2), and
/// `extra_rss` carries residual mass that does not depend on beta.
struct RegressionData {
    Matrix design;
    Vector response;
    double replication = 1.0;
    double extra_rss = 0.0;
    double n_obs = 0.0; ///< 0 means rows * replication

    double observation_count() const;
    double rss(const Vector& beta) const;
};

/// p*_{w,i} = tg phi1 / (tg phi1 + (1 - tg) phi0), tg = theta_w gamma_w.
std::vector<Vector> e_step(const Vector& beta, const SpikeSlabHyper& hyper, const CliqueSet& cliques);

/// Per-coordinate quadratic penalty  sum_{w contains i} p/V1 + (1 - p)/V0.
Vector penalty_weights(const std::vector<Vector>& p_star, const CliqueSet& cliques, const SpikeSlabHyper& hyper,
                       Index coefficient_count);

/// argmin_{beta >= 0} ||y - X beta||^2 / (2 sigma2) + 1/2 sum_i D_i beta_i^2.
Vector m_step_beta(const Vector& y, const Matrix& design, double sigma2, const std::vector<Vector>& p_star,
                   const CliqueSet& cliques, const SpikeSlabHyper& hyper, const NnlsOptions& nnls = {});

/// (rss + 2 beta_ig) / (n_obs + 2 (alpha_ig - 1)), floored at 1e-12.
double m_step_sigma2(double rss, double n_obs, const SpikeSlabHyper& hyper);

struct HyperUpdate {
    Vector gamma;
    Vector theta;
    Index clamped = 0;   ///< theta entries moved into [eps, 1 - eps]
    bool reset = false;  ///< gamma fell back to uniform
};

HyperUpdate update_hyper(const std::vector<Vector>& p_star, bool clamp_theta = true);

/// Gaussian log-likelihood + spike/slab log-prior + sigma^2 prior, up to constants.
double log_posterior(const RegressionData& data, const Vector& beta, double sigma2, const SpikeSlabHyper& hyper,
                     const CliqueSet& cliques);

EmFit fit(const Vector& y, const Matrix& design, const CliqueSet& cliques, const EmConfig& config);

/// Pooled-data fit; `warm` (when given) replaces the default initialization.
EmFit fit(const RegressionData& data, const CliqueSet& cliques, const EmConfig& config, const EmState* warm = nullptr);

} // namespace conic
