#include "conic/em_solver.hpp"
#include "conic/shape_constraints.hpp"

#include "helpers.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace conic;

namespace {

SpikeSlabHyper hyper_for(const CliqueSet& cliques, double v0, double v1, double theta) {
    SpikeSlabHyper h = SpikeSlabHyper::with_cliques(cliques.size());
    h.v0 = v0;
    h.v1 = v1;
    h.theta.setConstant(theta);
    return h;
}

Matrix random_positive_design(Index rows, Index cols, Rng& rng) {
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) {
            m(i, j) = rng.normal();
        }
    }
    return m;
}

} // namespace

TEST_CASE("e-step closed forms") {
    const CliqueSet one{{{0}}};
    SpikeSlabHyper h = hyper_for(one, 0.01, 1.0, 0.5);
    auto p = e_step(Vector::Zero(1), h, one);
    CHECK(p[0](0) == doctest::Approx(0.1 / 1.1));

    h.v0 = h.v1 = 3.0;
    h.theta(0) = 0.37;
    p = e_step(testing::vec({2.5}), h, one);
    CHECK(p[0](0) == doctest::Approx(0.37));

    h = hyper_for(one, 0.01, 1.0, 0.5);
    CHECK_THROWS_CODE(e_step(testing::vec({-1.0}), h, one), ErrorCode::DomainError);
    h.theta(0) = 1.5;
    CHECK_THROWS_CODE(e_step(testing::vec({1.0}), h, one), ErrorCode::DomainError);
}

TEST_CASE("e-step matches Bayes rule by quadrature") {
    // P(slab | beta in [x, x + h]) from integrated joint densities
    const CliqueSet one{{{0}}};
    SpikeSlabHyper h = hyper_for(one, 0.02, 2.0, 0.3);
    const double tg = 0.3;
    for (double x : {0.0, 0.05, 0.2, 0.5, 1.0, 3.0}) {
        const double width = 1e-6;
        double slab = 0.0;
        double spike = 0.0;
        const int steps = 100;
        for (int k = 0; k < steps; ++k) {
            const double t = x + (k + 0.5) * width / steps;
            slab += tg * truncated_normal_density(t, h.v1);
            spike += (1.0 - tg) * truncated_normal_density(t, h.v0);
        }
        const double oracle = slab / (slab + spike);
        CHECK(e_step(testing::vec({x}), h, one)[0](0) == doctest::Approx(oracle).epsilon(1e-5));
    }
    // far in the tail the spike density underflows; the posterior must saturate, not NaN
    CHECK(e_step(testing::vec({100.0}), h, one)[0](0) == doctest::Approx(1.0));
}

TEST_CASE("penalty weights add over overlapping cliques") {
    const CliqueSet cliques{{{0, 1}, {1, 2}}};
    SpikeSlabHyper h = hyper_for(cliques, 0.5, 4.0, 0.5);
    const std::vector<Vector> p{testing::vec({1.0, 0.0}), testing::vec({0.5, 1.0})};
    const Vector d = penalty_weights(p, cliques, h, 3);
    CHECK(d(0) == doctest::Approx(0.25));
    CHECK(d(1) == doctest::Approx(2.0 + 0.5 * 0.25 + 0.5 * 2.0));
    CHECK(d(2) == doctest::Approx(0.25));
}

TEST_CASE("beta M-step limits and oracle") {
    const CliqueSet one{{{0, 1, 2}}};
    SpikeSlabHyper h = hyper_for(one, 1e-3, 1e12, 0.5);
    const std::vector<Vector> slab{Vector::Ones(3)};
    const Vector b = m_step_beta(testing::vec({1.5, -2.0, 0.25}), Matrix::Identity(3, 3), 1.0, slab, one, h);
    CHECK((b - testing::vec({1.5, 0.0, 0.25})).norm() < 1e-9);

    const CliqueSet single{{{0}}};
    h = hyper_for(single, 1.0, 1.0, 0.5);
    CHECK(m_step_beta(testing::vec({2.0}), Matrix::Identity(1, 1), 1.0, {testing::vec({0.5})}, single, h)(0) ==
          doctest::Approx(1.0));

    Rng rng(77);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix x = random_positive_design(12, 5, rng);
        Vector y(12);
        for (Index i = 0; i < 12; ++i) {
            y(i) = rng.normal();
        }
        const CliqueSet cliques{{{0, 1, 2}, {2, 3, 4}}};
        const SpikeSlabHyper hh = hyper_for(cliques, 0.1, 5.0, 0.5);
        const std::vector<Vector> p{testing::vec({0.2, 0.9, 0.5}), testing::vec({0.1, 0.7, 0.3})};
        const double sigma2 = 0.7;
        const Vector ridge = sigma2 * penalty_weights(p, cliques, hh, 5);
        const Vector reference = oracle::projected_gradient_nnls(x, y, ridge);
        CHECK((m_step_beta(y, x, sigma2, p, cliques, hh) - reference).norm() < 1e-6);
    }
}

TEST_CASE("sigma2 M-step maximizes its objective") {
    SpikeSlabHyper h = SpikeSlabHyper::with_cliques(1);
    auto objective = [&](double rss, double n) {
        return [&h, rss, n](double s2) {
            return -rss / (2.0 * s2) - 0.5 * n * std::log(s2) - (h.alpha_ig - 1.0) * std::log(s2) - h.beta_ig / s2;
        };
    };
    CHECK(m_step_sigma2(10.0, 20.0, h) == doctest::Approx(11.0 / 19.0));
    CHECK(oracle::maximize_scalar(objective(10.0, 20.0), 1e-4, 1e3) == doctest::Approx(11.0 / 19.0).epsilon(1e-6));
    CHECK(m_step_sigma2(0.0, 20.0, h) == doctest::Approx(1.0 / 19.0));
    CHECK(oracle::maximize_scalar(objective(0.0, 20.0), 1e-4, 1e3) == doctest::Approx(1.0 / 19.0).epsilon(1e-6));

    h.alpha_ig = 1.0;
    h.beta_ig = 0.0;
    CHECK(m_step_sigma2(7.0, 14.0, h) == doctest::Approx(0.5));
    CHECK(m_step_sigma2(0.0, 14.0, h) == doctest::Approx(1e-12));

    h.alpha_ig = 0.5;
    CHECK_THROWS_CODE(m_step_sigma2(1.0, 1.0, h), ErrorCode::NonPositiveDenominator);
}

TEST_CASE("hyperparameter update") {
    const std::vector<Vector> equal{testing::vec({0.2, 0.3}), testing::vec({0.4, 0.1})};
    HyperUpdate u = update_hyper(equal);
    CHECK(u.gamma(0) == doctest::Approx(0.5));
    CHECK(u.gamma(1) == doctest::Approx(0.5));
    CHECK(u.theta(0) == doctest::Approx(1.0 - 1e-6));
    CHECK(u.clamped == 2);

    u = update_hyper({testing::vec({0.3})});
    CHECK(u.gamma(0) == 1.0);
    CHECK(u.theta(0) == doctest::Approx(0.3));
    CHECK(u.clamped == 0);

    u = update_hyper({testing::vec({0.9, 0.9})}, false);
    CHECK(u.theta(0) == doctest::Approx(1.8));

    u = update_hyper({testing::vec({0.0}), testing::vec({0.0, 0.0})});
    CHECK(u.reset);
    CHECK(u.gamma(1) == doctest::Approx(0.5));
}

TEST_CASE("noiseless orthant fit recovers a single ray") {
    const DDPair pair = make_dd_pair(FacetCone{Matrix::Identity(3, 3), {}});
    const CliqueSet cliques{{{0}, {1}, {2}}};
    EmConfig config;
    config.hyper = hyper_for(cliques, 1e-4, 100.0, 0.5);
    config.hyper.alpha_ig = 1.0;
    config.hyper.beta_ig = 0.0;
    config.max_iter = 2000;
    config.rel_tol = 1e-10;
    const Vector truth = testing::vec({0.0, 2.0, 0.0});
    const EmFit f = fit(pair.vertex.delta * truth, pair.vertex.delta, cliques, config);
    CHECK((f.mu_hat - pair.vertex.delta * truth).norm() < 1e-6);
    for (Index w = 0; w < 3; ++w) {
        const Index ray = cliques.cliques[static_cast<std::size_t>(w)][0];
        if (f.state.beta(ray) > 1.0) {
            CHECK(f.state.beta(ray) == doctest::Approx(2.0).epsilon(1e-6));
        } else {
            CHECK(f.state.beta(ray) < 1e-6);
            CHECK(f.state.p_star[static_cast<std::size_t>(w)](0) < 0.5);
        }
    }
}

TEST_CASE("frozen hyperparameters give a non-decreasing log posterior") {
    const DDPair pair = make_dd_pair(preset_cone("bell20"));
    const CliqueSet cliques = enumerate_maximal_cliques(build_adjacency_graph(pair));
    Rng rng(13);
    for (int trial = 0; trial < 5; ++trial) {
        Vector y(20);
        for (Index i = 0; i < 20; ++i) {
            y(i) = 2.0 * std::exp(-0.02 * (i - 9.5) * (i - 9.5)) + 0.3 * rng.normal();
        }
        EmConfig config;
        config.hyper = SpikeSlabHyper::with_cliques(cliques.size());
        config.freeze_hyper = true;
        config.max_iter = 100;
        const EmFit f = fit(y, pair.vertex.delta, cliques, config);
        for (std::size_t k = 1; k < f.trace.size(); ++k) {
            CHECK(f.trace[k] >= f.trace[k - 1] - 1e-8);
        }
        CHECK((pair.facet.a * f.mu_hat).minCoeff() >= -1e-8);
    }
}

TEST_CASE("converged fit is a fixed point") {
    const DDPair pair = make_dd_pair(FacetCone{testing::hexagonal_facets(), {}});
    const CliqueSet cliques = enumerate_maximal_cliques(build_adjacency_graph(pair));
    EmConfig config;
    config.rel_tol = 1e-12;
    config.max_iter = 5000;
    const Vector y = testing::vec({0.3, -0.2, 1.4});
    const EmFit f = fit(y, pair.vertex.delta, cliques, config);
    REQUIRE(f.converged);
    SpikeSlabHyper h = config.hyper;
    h.gamma = f.state.gamma;
    h.theta = f.state.theta;
    const Vector again = m_step_beta(y, pair.vertex.delta, f.state.sigma2, f.state.p_star, cliques, h);
    CHECK((again - f.state.beta).norm() < 1e-6);
    // KKT of the penalized problem at the returned beta
    const Vector ridge = penalty_weights(f.state.p_star, cliques, h, pair.vertex.ray_count());
    const Vector grad = pair.vertex.delta.transpose() * (pair.vertex.delta * again - y) / f.state.sigma2 +
                        Vector(ridge.array() * again.array());
    for (Index i = 0; i < grad.size(); ++i) {
        CHECK(grad(i) >= -1e-7);
        CHECK(std::abs(grad(i) * again(i)) < 1e-7);
    }
}

TEST_CASE("flat slab and spike give the plain projection") {
    const DDPair pair = make_dd_pair(preset_cone("bell20"));
    const CliqueSet cliques = enumerate_maximal_cliques(build_adjacency_graph(pair));
    Rng rng(21);
    Vector y(20);
    for (Index i = 0; i < 20; ++i) {
        y(i) = 2.0 * std::exp(-0.02 * (i - 9.5) * (i - 9.5)) + 0.5 * rng.normal();
    }
    EmConfig config;
    config.hyper = SpikeSlabHyper::with_cliques(cliques.size());
    config.hyper.v0 = config.hyper.v1 = 1e12;
    const EmFit f = fit(y, pair.vertex.delta, cliques, config);
    CHECK((f.mu_hat - project_onto_cone(y, pair.vertex)).norm() < 1e-6);
}

TEST_CASE("pooled data matches stacked replicates") {
    const DDPair pair = make_dd_pair(FacetCone{testing::hexagonal_facets(), {}});
    const CliqueSet cliques = enumerate_maximal_cliques(build_adjacency_graph(pair));
    const Vector r1 = testing::vec({0.5, 0.1, 1.2});
    const Vector r2 = testing::vec({0.1, -0.3, 0.8});
    Matrix stacked(6, pair.vertex.ray_count());
    stacked << pair.vertex.delta, pair.vertex.delta;
    Vector y(6);
    y << r1, r2;
    EmConfig config;
    config.rel_tol = 1e-12;
    config.max_iter = 3000;
    const EmFit a = fit(y, stacked, cliques, config);

    RegressionData pooled;
    pooled.design = pair.vertex.delta;
    pooled.response = 0.5 * (r1 + r2);
    pooled.replication = 2.0;
    pooled.extra_rss = (r1 - pooled.response).squaredNorm() + (r2 - pooled.response).squaredNorm();
    const EmFit b = fit(pooled, cliques, config);
    CHECK((a.state.beta - b.state.beta).norm() < 1e-6);
    CHECK(a.state.sigma2 == doctest::Approx(b.state.sigma2).epsilon(1e-6));
    CHECK(pooled.observation_count() == 6.0);
}

TEST_CASE("theta clamping is reported") {
    const DDPair pair = make_dd_pair(preset_cone("bell20"));
    const CliqueSet cliques = enumerate_maximal_cliques(build_adjacency_graph(pair));
    EmConfig config;
    config.max_iter = 5;
    const EmFit f = fit(Vector::LinSpaced(20, 0.0, 1.0), pair.vertex.delta, cliques, config);
    bool reported = false;
    for (const auto& w : f.warnings) {
        reported = reported || w.find("clamped") != std::string::npos;
    }
    CHECK(reported);
    CHECK((f.state.theta.array() <= 1.0 - 1e-6).all());
}

TEST_CASE("configuration errors") {
    EmConfig config;
    config.max_iter = 0;
    CHECK_THROWS_CODE(config.validate(), ErrorCode::InvalidInput);
    config.max_iter = 10;
    config.rel_tol = 0.0;
    CHECK_THROWS_CODE(config.validate(), ErrorCode::InvalidInput);
    CHECK_THROWS_CODE(fit(Vector::Ones(2), Matrix::Identity(2, 2), CliqueSet{}, EmConfig{}),
                      ErrorCode::EmptyCliqueSet);
    CHECK_THROWS_CODE(fit(Vector::Ones(3), Matrix::Identity(2, 2), CliqueSet{{{0, 1}}}, EmConfig{}),
                      ErrorCode::ShapeMismatch);
}
