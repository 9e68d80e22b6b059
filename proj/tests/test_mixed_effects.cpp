#include "conic/mixed_effects.hpp"
#include "conic/shape_constraints.hpp"
#include "conic/simulation.hpp"

#include "helpers.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

using namespace conic;

namespace {

Matrix random_spd(Index k, Rng& rng) {
    Matrix g(k, k);
    for (Index i = 0; i < k; ++i) {
        for (Index j = 0; j < k; ++j) {
            g(i, j) = rng.normal();
        }
    }
    return g * g.transpose() / static_cast<double>(k) + 0.1 * Matrix::Identity(k, k);
}

Vector normal_vector(Index n, Rng& rng) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) {
        v(i) = rng.normal();
    }
    return v;
}

// Panel y_i = f + B eta_i + sigma e_i with eta_i ~ N(0, Sigma).
LongDataset simulate(const Vector& f, const Matrix& b, const Matrix& sigma, double noise, Index subjects, Rng& rng) {
    const Matrix root = sigma.llt().matrixL();
    Matrix values(subjects, f.size());
    for (Index i = 0; i < subjects; ++i) {
        const Vector eta = root * normal_vector(sigma.rows(), rng);
        values.row(i) = (f + b * eta + noise * normal_vector(f.size(), rng)).transpose();
    }
    return LongDataset::from_matrix(values);
}

} // namespace

TEST_CASE("B-spline basis properties") {
    for (auto [n, j] : {std::pair<Index, Index>{20, 20}, {24, 24}, {20, 8}, {10, 4}}) {
        const BsplineBasis basis = bspline_basis(n, j);
        REQUIRE(basis.matrix.rows() == n);
        REQUIRE(basis.matrix.cols() == j);
        CHECK(basis.matrix.minCoeff() >= 0.0);
        for (Index r = 0; r < n; ++r) {
            CHECK(basis.matrix.row(r).sum() == doctest::Approx(1.0).epsilon(1e-12));
        }
        CHECK(numeric_rank(basis.matrix, 1e-10) == j);
    }
    const BsplineBasis square = bspline_basis(24, 24);
    CHECK(std::abs(square.matrix.determinant()) > 0.0);
    const Eigen::JacobiSVD<Matrix> svd(square.matrix);
    CHECK(std::isfinite(svd.singularValues()(0) / svd.singularValues()(23)));

    // degree 1 at J = n interpolates the grid values
    const BsplineBasis linear = bspline_basis(6, 6, 1);
    CHECK((linear.matrix - Matrix::Identity(6, 6)).norm() < 1e-12);

    CHECK_THROWS_CODE(bspline_basis(20, 21), ErrorCode::InvalidInput);
    CHECK_THROWS_CODE(bspline_basis(3, 3, 3), ErrorCode::InvalidInput);
}

TEST_CASE("random-effect posterior matches joint Gaussian conditioning") {
    Rng rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        const Index n = 6;
        const Index k = 2 + trial % 4;
        MixedModel model;
        model.basis = Matrix(n, k);
        for (Index i = 0; i < n; ++i) {
            for (Index j = 0; j < k; ++j) {
                model.basis(i, j) = rng.normal();
            }
        }
        model.sigma = random_spd(k, rng);
        model.sigma2 = 0.2 + rng.uniform();
        model.f_hat = normal_vector(n, rng);
        const Vector y = normal_vector(n, rng);
        const EffectPosterior post = random_effect_posterior(y, model.f_hat, model);
        const oracle::Conditional expected =
            oracle::joint_gaussian_condition(model.basis, model.sigma, model.sigma2, y, model.f_hat);
        CHECK((post.eta_mean - expected.mean).norm() < 1e-9);
        CHECK((post.eta_cov - expected.cov).norm() < 1e-9);
        CHECK((post.u - model.basis * expected.mean).norm() < 1e-9);

        const LongDataset panel = LongDataset::from_matrix(y.transpose());
        const PanelPosterior all = random_effect_posteriors(panel, model);
        CHECK((all.eta_means.row(0).transpose() - post.eta_mean).norm() < 1e-12);
        CHECK((all.eta_cov - post.eta_cov).norm() < 1e-12);
    }
}

TEST_CASE("posterior limits") {
    Rng rng(3);
    MixedModel model;
    model.basis = bspline_basis(8, 8).matrix;
    model.f_hat = normal_vector(8, rng);
    model.sigma = Matrix::Zero(8, 8);
    model.sigma2 = 1.0;
    const Vector y = normal_vector(8, rng);
    CHECK(random_effect_posterior(y, model.f_hat, model).u.isZero(0.0));

    model.sigma = Matrix::Identity(8, 8);
    model.sigma2 = 1e-10;
    CHECK((random_effect_posterior(y, model.f_hat, model).u - (y - model.f_hat)).norm() < 1e-6);
}

TEST_CASE("Sigma update") {
    const std::vector<Vector> zeros(4, Vector::Zero(3));
    const std::vector<Matrix> identities(4, Matrix::Identity(3, 3));
    CHECK((update_sigma_matrix(zeros, identities) - Matrix::Identity(3, 3)).norm() < 1e-15);

    const Vector m = testing::vec({1.0, -2.0});
    const Matrix rank_one = update_sigma_matrix(std::vector<Vector>{m}, std::vector<Matrix>{Matrix::Zero(2, 2)});
    CHECK((rank_one - m * m.transpose()).norm() < 1e-12);
    CHECK(numeric_rank(rank_one, 1e-10) == 1);

    Matrix means(2, 2);
    means << 1.0, 0.0, 0.0, 1.0;
    CHECK((update_sigma_matrix(means, Matrix::Identity(2, 2)) - 1.5 * Matrix::Identity(2, 2)).norm() < 1e-12);

    // an indefinite average is clipped to the PSD cone
    Matrix bad(2, 2);
    bad << 1.0, 0.0, 0.0, -1.0;
    const Matrix clipped = update_sigma_matrix(Matrix::Zero(1, 2), bad);
    CHECK(clipped(0, 0) == doctest::Approx(1.0));
    CHECK(std::abs(clipped(1, 1)) < 1e-12);
    CHECK_THROWS_CODE(update_sigma_matrix(std::vector<Vector>{}, std::vector<Matrix>{}), ErrorCode::InvalidInput);
}

TEST_CASE("marginal log-likelihood") {
    Rng rng(10);
    const Index n = 5;
    MixedModel model;
    model.basis = bspline_basis(n, 4).matrix;
    model.sigma = random_spd(4, rng);
    model.sigma2 = 0.4;
    model.f_hat = normal_vector(n, rng);
    Matrix values(7, n);
    for (Index i = 0; i < 7; ++i) {
        values.row(i) = normal_vector(n, rng).transpose();
    }
    const LongDataset data = LongDataset::from_matrix(values);
    const double ll = marginal_loglik(data, model);
    CHECK(ll == doctest::Approx(oracle::naive_loglik(values, model.f_hat, model.marginal_covariance())));

    const LongDataset shuffled = data.subset({6, 2, 4, 0, 1, 5, 3});
    CHECK(marginal_loglik(shuffled, model) == doctest::Approx(ll).epsilon(1e-13));

    model.sigma.setZero();
    double independent = 0.0;
    for (Index i = 0; i < 7; ++i) {
        for (Index j = 0; j < n; ++j) {
            const double r = values(i, j) - model.f_hat(j);
            independent += -0.5 * std::log(2.0 * std::numbers::pi * model.sigma2) - r * r / (2.0 * model.sigma2);
        }
    }
    CHECK(marginal_loglik(data, model) == doctest::Approx(independent));
}

TEST_CASE("model validation") {
    MixedModel model;
    model.basis = Matrix::Identity(3, 3);
    model.sigma = Matrix::Identity(3, 3);
    model.f_hat = Vector::Zero(3);
    model.sigma2 = 0.0;
    CHECK_THROWS_CODE(model.validate(), ErrorCode::DomainError);
    model.sigma2 = 1.0;
    model.sigma(0, 1) = 0.5;
    CHECK_THROWS_CODE(model.validate(), ErrorCode::InvalidInput);
    model.sigma = Matrix::Identity(2, 2);
    CHECK_THROWS_CODE(model.validate(), ErrorCode::ShapeMismatch);
}

TEST_CASE("fixed zero Sigma reduces to the pooled EM fit") {
    Rng rng(5);
    const FacetCone cone = preset_cone("bell20");
    const Vector truth = true_f_dense(20);
    Matrix values(30, 20);
    for (Index i = 0; i < 30; ++i) {
        values.row(i) = (truth + 0.8 * normal_vector(20, rng)).transpose();
    }
    const LongDataset data = LongDataset::from_matrix(values);
    MixedConfig config;
    config.fixed_sigma = Matrix::Zero(20, 20);
    config.em.rel_tol = 1e-10;
    config.em.max_iter = 5000;
    const RestrictedDesign design = prepare_restricted_design(cone, std::nullopt);
    const MixedFit mixed = fit_mixed(data, design, config);

    RegressionData pooled;
    pooled.design = design.design;
    pooled.response = data.time_means();
    pooled.replication = 30.0;
    pooled.extra_rss = (values.rowwise() - pooled.response.transpose()).squaredNorm();
    const EmFit direct = fit(pooled, design.cliques, config.em);
    CHECK((mixed.model.f_hat - direct.mu_hat).norm() < 1e-5 * direct.mu_hat.norm());
    CHECK(mixed.model.sigma2 == doctest::Approx(direct.state.sigma2).epsilon(1e-5));
    CHECK((cone.a * mixed.model.f_hat).minCoeff() >= -1e-8);
}

TEST_CASE("restricted fits stay in the cone") {
    Rng rng(6);
    const FacetCone cone = preset_cone("bell20");
    GpSampler gp(20, 4.0);
    Matrix values(40, 20);
    for (Index i = 0; i < 40; ++i) {
        values.row(i) = (true_f_dense(20) + gp.draw(rng) + 2.0 * normal_vector(20, rng)).transpose();
    }
    const LongDataset data = LongDataset::from_matrix(values);
    MixedConfig config;
    for (bool spline : {false, true}) {
        const MixedFit fitted = fit_mixed(data, cone, spline, config);
        CHECK((cone.a * fitted.model.f_hat).minCoeff() >= -1e-8);
        CHECK(fitted.em.has_value());
        CHECK(fitted.outer_iterations >= 1);
    }
}

TEST_CASE("identity basis makes the spline and plain fits agree") {
    Rng rng(12);
    const FacetCone cone = preset_cone("bell20");
    Matrix values(25, 20);
    for (Index i = 0; i < 25; ++i) {
        values.row(i) = (true_f_dense(20) + normal_vector(20, rng)).transpose();
    }
    const LongDataset data = LongDataset::from_matrix(values);
    MixedConfig config;
    config.random_basis = Matrix::Identity(20, 20);
    const MixedFit plain = fit_mixed(data, cone, false, config);
    const MixedFit spline = fit_mixed(data, cone, true, config);
    CHECK((plain.model.f_hat - spline.model.f_hat).norm() < 1e-6);
    const MixedFit u_plain = fit_unrestricted(data, false, config);
    const MixedFit u_spline = fit_unrestricted(data, true, config);
    CHECK((u_plain.model.f_hat - u_spline.model.f_hat).norm() < 1e-8);
}

TEST_CASE("unrestricted fit on noiseless data is the time mean") {
    const Vector f = testing::vec({1.0, 3.0, 2.0, 0.5, 0.0, 4.0});
    Matrix values(4, 6);
    values.rowwise() = f.transpose();
    const LongDataset data = LongDataset::from_matrix(values);
    MixedConfig config;
    config.random_basis = Matrix::Identity(6, 6);
    const MixedFit fitted = fit_unrestricted(data, false, config);
    CHECK((fitted.model.f_hat - f).norm() < 1e-10);
}

TEST_CASE("two-point toy matches the closed-form ML solution") {
    // With a free mean and V = Sigma + s2 I unrestricted, the ML estimates
    // are the sample mean and the (1/N) sample covariance.
    Matrix values(4, 2);
    values << 1.0, 2.0, 3.0, 3.0, 0.0, 1.0, 2.0, 6.0;
    const LongDataset data = LongDataset::from_matrix(values);
    MixedConfig config;
    config.random_basis = Matrix::Identity(2, 2);
    config.em.hyper.alpha_ig = 1.0;
    config.em.hyper.beta_ig = 0.0;
    config.outer_tol = 1e-10;
    config.max_outer = 200000;
    const MixedFit fitted = fit_unrestricted(data, false, config);
    const Vector mean = data.time_means();
    const Matrix centered = values.rowwise() - mean.transpose();
    const Matrix s = centered.transpose() * centered / 4.0;
    CHECK((fitted.model.f_hat - mean).norm() < 1e-10);
    CHECK((fitted.model.marginal_covariance() - s).norm() < 1e-4);
    CHECK(fitted.converged);

    // the unrestricted optimum bounds any other model of the same family
    MixedModel other = fitted.model;
    other.f_hat = mean + testing::vec({0.1, -0.2});
    CHECK(marginal_loglik(data, other) < marginal_loglik(data, fitted.model));
}

TEST_CASE("Sigma estimate is consistent on a large panel") {
    Rng rng(77);
    const Index n = 8;
    const Index k = 3;
    Matrix b(n, k);
    for (Index i = 0; i < n; ++i) {
        b(i, 0) = 1.0;
        b(i, 1) = (i - 3.5) / 3.5;
        b(i, 2) = std::cos(static_cast<double>(i));
    }
    Matrix sigma(k, k);
    sigma << 1.0, 0.3, 0.0, 0.3, 0.5, 0.1, 0.0, 0.1, 0.4;
    const Vector f = Vector::LinSpaced(n, 0.0, 2.0);
    const LongDataset data = simulate(f, b, sigma, 0.5, 4000, rng);
    MixedConfig config;
    config.random_basis = b;
    config.outer_tol = 1e-8;
    config.max_outer = 5000;
    const MixedFit fitted = fit_unrestricted(data, false, config);
    CHECK((fitted.model.sigma - sigma).norm() < 0.1);
    CHECK(fitted.model.sigma2 == doctest::Approx(0.25).epsilon(0.05));
    CHECK((fitted.model.f_hat - f).norm() < 0.1);
}

TEST_CASE("long CSV round trip and validation") {
    Matrix values(2, 3);
    values << 1.5, 2.0, -1.0, 0.0, 0.25, 3.0;
    LongDataset data = LongDataset::from_matrix(values);
    data.subjects = {"a", "b"};
    std::ostringstream out;
    write_long_csv(out, data);
    std::istringstream in(out.str());
    const LongDataset back = read_long_csv(in);
    CHECK(back.subjects == data.subjects);
    CHECK(back.values == values);

    std::istringstream shuffled("subject,time,value\nb,2,5\na,1,1\nb,1,4\na,2,2\n");
    const LongDataset s = read_long_csv(shuffled);
    CHECK(s.subjects == std::vector<std::string>{"b", "a"});
    CHECK(s.values(0, 1) == 5.0);
    CHECK(s.values(1, 0) == 1.0);

    std::istringstream header("id,time,value\na,1,1\n");
    CHECK_THROWS_CODE(read_long_csv(header), ErrorCode::InvalidInput);
    std::istringstream unbalanced("subject,time,value\na,1,1\na,2,2\nb,1,3\n");
    CHECK_THROWS_CODE(read_long_csv(unbalanced), ErrorCode::InvalidInput);
    std::istringstream zero("subject,time,value\na,0,1\n");
    CHECK_THROWS_CODE(read_long_csv(zero), ErrorCode::IndexOutOfRange);
    std::istringstream duplicate("subject,time,value\na,1,1\na,1,2\n");
    CHECK_THROWS_CODE(read_long_csv(duplicate), ErrorCode::InvalidInput);
}

TEST_CASE("subject splits are disjoint and seeded") {
    const LongDataset data = LongDataset::from_matrix(Matrix(Vector::LinSpaced(10, 0, 9).replicate(1, 3)));
    const auto [train, test] = split_subjects(data, 6, 4, 42);
    CHECK(train.subject_count() == 6);
    CHECK(test.subject_count() == 4);
    std::vector<double> seen;
    for (Index i = 0; i < 6; ++i) seen.push_back(train.values(i, 0));
    for (Index i = 0; i < 4; ++i) seen.push_back(test.values(i, 0));
    std::sort(seen.begin(), seen.end());
    CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
    const auto again = split_subjects(data, 6, 4, 42);
    CHECK(again.first.values == train.values);
    CHECK_THROWS_CODE(split_subjects(data, 8, 4, 1), ErrorCode::InvalidInput);
}
