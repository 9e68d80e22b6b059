#include "conic/prior.hpp"

#include "conic/error.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <string>

namespace conic {

SpikeSlabHyper SpikeSlabHyper::with_cliques(std::size_t clique_count) {
    SpikeSlabHyper hyper;
    const auto w = static_cast<Index>(clique_count);
    hyper.gamma = Vector::Constant(w, w > 0 ? 1.0 / static_cast<double>(w) : 0.0);
    hyper.theta = Vector::Constant(w, 0.5);
    return hyper;
}

void SpikeSlabHyper::validate() const {
    if (!(v0 > 0.0) || !(v1 >= v0)) {
        throw Error(ErrorCode::InvalidInput, "need 0 < v0 <= v1");
    }
    if (!(a > 0.0) || !(b > 0.0)) {
        throw Error(ErrorCode::InvalidInput, "Beta hyperparameters must be positive");
    }
    if (gamma.size() != theta.size()) {
        throw Error(ErrorCode::ShapeMismatch, "gamma and theta must have one entry per clique");
    }
    if (gamma.size() > 0) {
        if ((gamma.array() < 0.0).any() || std::abs(gamma.sum() - 1.0) > 1e-12) {
            throw Error(ErrorCode::InvalidInput, "gamma must lie on the probability simplex");
        }
    }
    if ((theta.array() < 0.0).any() || (theta.array() > 1.0).any()) {
        throw Error(ErrorCode::InvalidInput, "theta must lie in [0, 1]");
    }
    if (!(phi >= 0.0 && phi <= 1.0)) {
        throw Error(ErrorCode::InvalidInput, "phi must lie in [0, 1]");
    }
    if (!std::isfinite(alpha_ig) || !(beta_ig >= 0.0)) {
        throw Error(ErrorCode::InvalidInput, "invalid Gamma hyperparameters for 1 / sigma^2");
    }
}

double truncated_normal_density(double x, double variance) {
    if (x < 0.0 || !std::isfinite(x)) {
        throw Error(ErrorCode::DomainError, "half-normal density needs a finite x >= 0");
    }
    if (!(variance > 0.0)) {
        throw Error(ErrorCode::DomainError, "variance must be positive");
    }
    return 2.0 / std::sqrt(2.0 * std::numbers::pi * variance) * std::exp(-x * x / (2.0 * variance));
}

Index sample_clique(const SpikeSlabHyper& hyper, const CliqueSet& cliques, Rng& rng) {
    if (cliques.empty()) {
        throw Error(ErrorCode::EmptyCliqueSet, "no cliques to sample from");
    }
    if (hyper.gamma.size() != static_cast<Index>(cliques.size())) {
        throw Error(ErrorCode::ShapeMismatch, "gamma needs one entry per clique");
    }
    const double u = rng.uniform();
    double cumulative = 0.0;
    Index last_positive = 0;
    for (Index w = 0; w < hyper.gamma.size(); ++w) {
        if (hyper.gamma(w) > 0.0) {
            last_positive = w;
        }
        cumulative += hyper.gamma(w);
        if (u < cumulative) {
            return w;
        }
    }
    return last_positive; // rounding left u above the accumulated mass
}

CliqueCoefficients sample_b_given_clique(const SpikeSlabHyper& hyper, Index clique_index, const IndexList& clique,
                                         Index ray_count, Rng& rng) {
    if (clique_index < 0 || clique_index >= hyper.theta.size()) {
        throw Error(ErrorCode::IndexOutOfRange, "clique index " + std::to_string(clique_index));
    }
    CliqueCoefficients out;
    out.b = Vector::Zero(ray_count);
    const double theta = hyper.theta(clique_index);
    for (const Index i : clique) {
        if (i < 0 || i >= ray_count) {
            throw Error(ErrorCode::IndexOutOfRange, "clique member " + std::to_string(i));
        }
        const int indicator = rng.bernoulli(theta) ? 1 : 0;
        const double sd = std::sqrt(indicator ? hyper.v1 : hyper.v0);
        out.indicators.push_back(indicator);
        out.b(i) = std::abs(rng.normal()) * sd;
    }
    return out;
}

PriorDraw sample_prior_mu(const DDPair& pair, const CliqueSet& cliques, const SpikeSlabHyper& hyper, Rng& rng,
                          bool use_mixture) {
    const Index d = pair.vertex.ray_count();
    PriorDraw draw;
    if (use_mixture && rng.bernoulli(hyper.phi)) {
        draw.dense = true;
        draw.b = Vector::Zero(d);
        for (Index i = 0; i < d; ++i) {
            draw.coordinates.push_back(i);
            draw.indicators.push_back(1);
            draw.b(i) = std::abs(rng.normal()) * std::sqrt(hyper.v1);
        }
    } else {
        const Index w = sample_clique(hyper, cliques, rng);
        const IndexList& clique = cliques.cliques[static_cast<std::size_t>(w)];
        CliqueCoefficients coef = sample_b_given_clique(hyper, w, clique, d, rng);
        draw.clique_index = w;
        draw.coordinates = clique;
        draw.indicators = std::move(coef.indicators);
        draw.b = std::move(coef.b);
    }
    draw.mu = pair.vertex.delta * draw.b;
    return draw;
}

double log_prior_b(const Vector& b, Index clique_index, const IndexList& clique, const SpikeSlabHyper& hyper,
                   double tol) {
    if (clique_index < 0 || clique_index >= hyper.theta.size() || clique_index >= hyper.gamma.size()) {
        throw Error(ErrorCode::IndexOutOfRange, "clique index " + std::to_string(clique_index));
    }
    std::vector<char> member(static_cast<std::size_t>(b.size()), 0);
    for (const Index i : clique) {
        if (i < 0 || i >= b.size()) {
            throw Error(ErrorCode::IndexOutOfRange, "clique member " + std::to_string(i));
        }
        member[static_cast<std::size_t>(i)] = 1;
    }
    for (Index i = 0; i < b.size(); ++i) {
        if (b(i) < -tol) {
            throw Error(ErrorCode::SupportViolation, "negative coefficient at " + std::to_string(i));
        }
        if (!member[static_cast<std::size_t>(i)] && b(i) > tol) {
            throw Error(ErrorCode::SupportViolation, "coefficient " + std::to_string(i) + " lies outside the clique");
        }
    }
    const double mix = hyper.theta(clique_index) * hyper.gamma(clique_index);
    double total = 0.0;
    for (const Index i : clique) {
        const double x = std::max(0.0, b(i));
        total += std::log(mix * truncated_normal_density(x, hyper.v1) +
                          (1.0 - mix) * truncated_normal_density(x, hyper.v0));
    }
    return total;
}

PriorDraw sample_adjacency_prior(const DDPair& pair, const AdjacencyGraph& graph, const SpikeSlabHyper& hyper,
                                 Rng& rng) {
    const Index d = pair.vertex.ray_count();
    if (graph.node_count != d || d == 0) {
        throw Error(ErrorCode::ShapeMismatch, "graph does not match the DD pair");
    }
    const double theta = hyper.theta.size() > 0 ? hyper.theta.mean() : 0.5;
    auto anchor = static_cast<Index>(rng.uniform() * static_cast<double>(d));
    anchor = std::min(anchor, d - 1);

    PriorDraw draw;
    draw.anchor = anchor;
    draw.coordinates = graph.closed_neighborhood(anchor);
    draw.b = Vector::Zero(d);
    for (const Index i : draw.coordinates) {
        const int indicator = rng.bernoulli(theta) ? 1 : 0;
        draw.indicators.push_back(indicator);
        draw.b(i) = std::abs(rng.normal()) * std::sqrt(indicator ? hyper.v1 : hyper.v0);
    }
    draw.mu = pair.vertex.delta * draw.b;
    return draw;
}

void write_prior_draws_csv(std::ostream& out, const std::vector<PriorDraw>& draws) {
    if (draws.empty()) {
        return;
    }
    const Index d = draws.front().b.size();
    const Index n = draws.front().mu.size();
    out << "clique";
    for (Index i = 1; i <= d; ++i) out << ",b" << i;
    for (Index i = 1; i <= n; ++i) out << ",mu" << i;
    out << '\n' << std::setprecision(17);
    for (const auto& draw : draws) {
        out << (draw.clique_index ? *draw.clique_index + 1 : -1);
        for (Index i = 0; i < d; ++i) out << ',' << draw.b(i);
        for (Index i = 0; i < n; ++i) out << ',' << draw.mu(i);
        out << '\n';
    }
}

} // namespace conic
