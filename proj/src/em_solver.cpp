#include "conic/em_solver.hpp"

#include "conic/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace conic {

namespace {

constexpr double kThetaEps = 1e-6;
constexpr double kSigmaFloor = 1e-12;

void check_cliques(const CliqueSet& cliques, Index coefficient_count) {
    if (cliques.empty()) {
        throw Error(ErrorCode::EmptyCliqueSet, "EM needs at least one clique");
    }
    for (const auto& clique : cliques.cliques) {
        for (Index i : clique) {
            if (i < 0 || i >= coefficient_count) {
                throw Error(ErrorCode::IndexOutOfRange, "clique member outside the coefficient range");
            }
        }
    }
}

// log(tg phi1(x) + (1 - tg) phi0(x)) without underflow for large x.
double log_mixture(double x, double tg, double v0, double v1) {
    const double log_norm = std::log(2.0) - 0.5 * std::log(2.0 * 3.14159265358979323846);
    const double l1 = log_norm - 0.5 * std::log(v1) - x * x / (2.0 * v1);
    const double l0 = log_norm - 0.5 * std::log(v0) - x * x / (2.0 * v0);
    const double a = tg > 0.0 ? std::log(tg) + l1 : -INFINITY;
    const double b = tg < 1.0 ? std::log1p(-tg) + l0 : -INFINITY;
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double relative_change(const Vector& next, const Vector& previous) {
    return (next - previous).norm() / std::max(previous.norm(), 1e-12);
}

} // namespace

void EmConfig::validate() const {
    if (max_iter < 1) {
        throw Error(ErrorCode::InvalidInput, "max_iter must be at least 1");
    }
    if (!(rel_tol > 0.0)) {
        throw Error(ErrorCode::InvalidInput, "rel_tol must be positive");
    }
}

double RegressionData::observation_count() const {
    return n_obs > 0.0 ? n_obs : static_cast<double>(design.rows()) * replication;
}

double RegressionData::rss(const Vector& beta) const {
    return replication * (response - design * beta).squaredNorm() + extra_rss;
}

std::vector<Vector> e_step(const Vector& beta, const SpikeSlabHyper& hyper, const CliqueSet& cliques) {
    check_cliques(cliques, beta.size());
    if (hyper.gamma.size() != static_cast<Index>(cliques.size()) ||
        hyper.theta.size() != static_cast<Index>(cliques.size())) {
        throw Error(ErrorCode::ShapeMismatch, "gamma and theta need one entry per clique");
    }
    if ((beta.array() < 0.0).any()) {
        throw Error(ErrorCode::DomainError, "e_step needs beta >= 0");
    }
    std::vector<Vector> p_star;
    p_star.reserve(cliques.size());
    const double ratio = std::sqrt(hyper.v0 / hyper.v1);
    const double precision_gap = 0.5 * (1.0 / hyper.v0 - 1.0 / hyper.v1);
    for (std::size_t w = 0; w < cliques.size(); ++w) {
        const double tg = hyper.theta(static_cast<Index>(w)) * hyper.gamma(static_cast<Index>(w));
        if (tg < 0.0 || tg > 1.0) {
            throw Error(ErrorCode::DomainError, "theta * gamma must lie in [0, 1]");
        }
        const auto& clique = cliques.cliques[w];
        Vector p(static_cast<Index>(clique.size()));
        for (std::size_t k = 0; k < clique.size(); ++k) {
            const double x = beta(clique[k]);
            // phi1 / phi0 = sqrt(v0 / v1) exp(x^2 (1/v0 - 1/v1) / 2)
            const double log_odds_density = std::log(ratio) + precision_gap * x * x;
            if (tg == 0.0) {
                p(static_cast<Index>(k)) = 0.0;
            } else if (tg == 1.0) {
                p(static_cast<Index>(k)) = 1.0;
            } else {
                const double z = std::log(tg) - std::log1p(-tg) + log_odds_density;
                p(static_cast<Index>(k)) = z > 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
            }
        }
        p_star.push_back(std::move(p));
    }
    return p_star;
}

Vector penalty_weights(const std::vector<Vector>& p_star, const CliqueSet& cliques, const SpikeSlabHyper& hyper,
                       Index coefficient_count) {
    if (p_star.size() != cliques.size()) {
        throw Error(ErrorCode::ShapeMismatch, "p_star needs one vector per clique");
    }
    Vector d = Vector::Zero(coefficient_count);
    for (std::size_t w = 0; w < cliques.size(); ++w) {
        const auto& clique = cliques.cliques[w];
        if (p_star[w].size() != static_cast<Index>(clique.size())) {
            throw Error(ErrorCode::ShapeMismatch, "p_star entry does not match its clique");
        }
        for (std::size_t k = 0; k < clique.size(); ++k) {
            const double p = p_star[w](static_cast<Index>(k));
            if (clique[k] < 0 || clique[k] >= coefficient_count) {
                throw Error(ErrorCode::IndexOutOfRange, "clique member outside the coefficient range");
            }
            d(clique[k]) += p / hyper.v1 + (1.0 - p) / hyper.v0;
        }
    }
    return d;
}

Vector m_step_beta(const Vector& y, const Matrix& design, double sigma2, const std::vector<Vector>& p_star,
                   const CliqueSet& cliques, const SpikeSlabHyper& hyper, const NnlsOptions& nnls) {
    if (!(sigma2 > 0.0)) {
        throw Error(ErrorCode::DomainError, "sigma2 must be positive");
    }
    if (design.rows() != y.size()) {
        throw Error(ErrorCode::ShapeMismatch, "design rows must match the response length");
    }
    const Vector ridge = sigma2 * penalty_weights(p_star, cliques, hyper, design.cols());
    const LawsonHanson solver(design);
    return solver.solve(y, ridge, nnls).coefficients;
}

double m_step_sigma2(double rss, double n_obs, const SpikeSlabHyper& hyper) {
    if (rss < 0.0 || !std::isfinite(rss)) {
        throw Error(ErrorCode::DomainError, "residual sum of squares must be finite and nonnegative");
    }
    const double denominator = n_obs + 2.0 * (hyper.alpha_ig - 1.0);
    if (!(denominator > 0.0)) {
        throw Error(ErrorCode::NonPositiveDenominator, "n_obs + 2 (alpha - 1) must be positive");
    }
    return std::max((rss + 2.0 * hyper.beta_ig) / denominator, kSigmaFloor);
}

HyperUpdate update_hyper(const std::vector<Vector>& p_star, bool clamp_theta) {
    const auto count = static_cast<Index>(p_star.size());
    HyperUpdate update;
    Vector sums(count);
    for (Index w = 0; w < count; ++w) {
        sums(w) = p_star[static_cast<std::size_t>(w)].sum();
    }
    const double total = sums.sum();
    if (total < 1e-12) {
        update.gamma = Vector::Constant(count, 1.0 / static_cast<double>(std::max<Index>(count, 1)));
        update.reset = true;
    } else {
        update.gamma = sums / total;
    }
    update.theta.resize(count);
    for (Index w = 0; w < count; ++w) {
        double theta = update.gamma(w) > 0.0 ? sums(w) / update.gamma(w) : 0.0;
        if (clamp_theta) {
            const double clipped = std::clamp(theta, kThetaEps, 1.0 - kThetaEps);
            if (clipped != theta) {
                ++update.clamped;
            }
            theta = clipped;
        }
        update.theta(w) = theta;
    }
    return update;
}

double log_posterior(const RegressionData& data, const Vector& beta, double sigma2, const SpikeSlabHyper& hyper,
                     const CliqueSet& cliques) {
    const double n = data.observation_count();
    double value = -data.rss(beta) / (2.0 * sigma2) - 0.5 * n * std::log(sigma2) -
                   (hyper.alpha_ig - 1.0) * std::log(sigma2) - hyper.beta_ig / sigma2;
    for (std::size_t w = 0; w < cliques.size(); ++w) {
        const double tg = hyper.theta(static_cast<Index>(w)) * hyper.gamma(static_cast<Index>(w));
        for (Index i : cliques.cliques[w]) {
            value += log_mixture(beta(i), tg, hyper.v0, hyper.v1);
        }
    }
    return value;
}

EmFit fit(const Vector& y, const Matrix& design, const CliqueSet& cliques, const EmConfig& config) {
    RegressionData data;
    data.design = design;
    data.response = y;
    return fit(data, cliques, config);
}

EmFit fit(const RegressionData& data, const CliqueSet& cliques, const EmConfig& config, const EmState* warm) {
    config.validate();
    require_finite(data.design, "design");
    require_finite(data.response, "response");
    if (data.design.rows() != data.response.size()) {
        throw Error(ErrorCode::ShapeMismatch, "design rows must match the response length");
    }
    if (!(data.replication > 0.0) || data.extra_rss < 0.0) {
        throw Error(ErrorCode::InvalidInput, "replication must be positive and extra_rss nonnegative");
    }
    const Index d = data.design.cols();
    check_cliques(cliques, d);
    const auto clique_count = static_cast<Index>(cliques.size());

    SpikeSlabHyper hyper = config.hyper;
    if (hyper.gamma.size() != clique_count) {
        hyper.gamma = Vector::Constant(clique_count, 1.0 / static_cast<double>(clique_count));
    }
    if (hyper.theta.size() != clique_count) {
        hyper.theta = Vector::Constant(clique_count, 0.5);
    }
    hyper.validate();

    const LawsonHanson solver(data.design, data.replication);
    const double n_obs = data.observation_count();

    EmFit result;
    EmState& state = result.state;
    if (warm != nullptr) {
        if (warm->beta.size() != d || warm->gamma.size() != clique_count || warm->theta.size() != clique_count) {
            throw Error(ErrorCode::ShapeMismatch, "warm-start state does not match the problem");
        }
        state = *warm;
        state.beta = state.beta.cwiseMax(0.0);
        hyper.gamma = state.gamma;
        hyper.theta = state.theta;
        state.sigma2 = m_step_sigma2(data.rss(state.beta), n_obs, hyper);
    } else {
        state.beta = solver.solve(data.response, Vector::Zero(d), config.nnls).coefficients;
        state.sigma2 = m_step_sigma2(data.rss(state.beta), n_obs, hyper);
        state.gamma = hyper.gamma;
        state.theta = hyper.theta;
    }
    state.iteration = 0;
    state.log_posterior = log_posterior(data, state.beta, state.sigma2, hyper, cliques);
    result.trace.push_back(state.log_posterior);

    Index clamped = 0;
    Index resets = 0;
    for (Index iter = 1; iter <= config.max_iter; ++iter) {
        state.p_star = e_step(state.beta, hyper, cliques);
        const Vector ridge = state.sigma2 * penalty_weights(state.p_star, cliques, hyper, d);
        const Vector previous_beta = state.beta;
        const double previous_lp = state.log_posterior;

        state.beta = solver.solve(data.response, ridge, config.nnls, &previous_beta).coefficients;
        state.sigma2 = m_step_sigma2(data.rss(state.beta), n_obs, hyper);
        if (!config.freeze_hyper) {
            const HyperUpdate update = update_hyper(state.p_star, config.clamp_theta);
            hyper.gamma = update.gamma;
            hyper.theta = update.theta;
            clamped += update.clamped;
            resets += update.reset ? 1 : 0;
        }
        state.gamma = hyper.gamma;
        state.theta = hyper.theta;
        state.log_posterior = log_posterior(data, state.beta, state.sigma2, hyper, cliques);
        state.iteration = iter;
        result.trace.push_back(state.log_posterior);

        const double beta_change = relative_change(state.beta, previous_beta);
        const double lp_change = std::abs(state.log_posterior - previous_lp) / std::max(1.0, std::abs(previous_lp));
        if (beta_change < config.rel_tol && lp_change < config.rel_tol) {
            result.converged = true;
            break;
        }
    }

    state.p_star = e_step(state.beta, hyper, cliques);
    state.p_star_sums.resize(clique_count);
    for (Index w = 0; w < clique_count; ++w) {
        state.p_star_sums(w) = state.p_star[static_cast<std::size_t>(w)].sum();
    }
    result.mu_hat = data.design * state.beta;
    if (clamped > 0) {
        result.warnings.push_back("theta clamped to [1e-6, 1 - 1e-6] " + std::to_string(clamped) + " times");
    }
    if (resets > 0) {
        result.warnings.push_back("clique mass vanished; gamma reset to uniform " + std::to_string(resets) + " times");
    }
    if (!result.converged) {
        result.warnings.push_back("EM stopped at max_iter without meeting rel_tol");
    }
    return result;
}

} // namespace conic
