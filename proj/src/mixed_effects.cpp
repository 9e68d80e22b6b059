#include "conic/mixed_effects.hpp"

#include "conic/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

namespace conic {

namespace {

constexpr double kSigma2Floor = 1e-12;

// Cox-de Boor recursion; x at the right end belongs to the last interval.
Matrix evaluate_bsplines(const Vector& grid, const Vector& knots, Index count, int degree) {
    const Index n = grid.size();
    Matrix out = Matrix::Zero(n, count);
    const double right = knots(knots.size() - 1);
    for (Index r = 0; r < n; ++r) {
        const double x = grid(r);
        Vector basis = Vector::Zero(knots.size() - 1);
        for (Index j = 0; j + 1 < knots.size(); ++j) {
            const bool inside = knots(j) <= x && x < knots(j + 1);
            const bool at_end = x == right && knots(j) < knots(j + 1) && knots(j + 1) == right;
            if (inside || at_end) {
                basis(j) = 1.0;
                break;
            }
        }
        for (int p = 1; p <= degree; ++p) {
            for (Index j = 0; j + p + 1 < knots.size(); ++j) {
                double value = 0.0;
                const double left_span = knots(j + p) - knots(j);
                const double right_span = knots(j + p + 1) - knots(j + 1);
                if (left_span > 0.0) {
                    value += (x - knots(j)) / left_span * basis(j);
                }
                if (right_span > 0.0) {
                    value += (knots(j + p + 1) - x) / right_span * basis(j + 1);
                }
                basis(j) = value;
            }
        }
        out.row(r) = basis.head(count).transpose();
    }
    return out;
}

Vector clamped_knots(const Vector& interior, double left, double right, int degree) {
    const Index p = degree;
    Vector knots(interior.size() + 2 * (p + 1));
    knots.head(p + 1).setConstant(left);
    knots.segment(p + 1, interior.size()) = interior;
    knots.tail(p + 1).setConstant(right);
    return knots;
}

bool schoenberg_whitney(const Vector& grid, const Vector& knots, int degree) {
    const Index count = grid.size();
    for (Index j = 0; j < count; ++j) {
        const double lo = knots(j);
        const double hi = knots(j + degree + 1);
        const bool left_ok = grid(j) > lo || (j == 0 && grid(j) == lo);
        const bool right_ok = grid(j) < hi || (j == count - 1 && grid(j) == hi);
        if (!left_ok || !right_ok) {
            return false;
        }
    }
    return true;
}

bool full_column_rank(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    const Vector& s = svd.singularValues();
    return s.size() == m.cols() && s(s.size() - 1) > 1e-10 * s(0);
}

Matrix clip_psd(const Matrix& m) {
    const Matrix sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
    const Vector values = eig.eigenvalues().cwiseMax(0.0);
    Matrix out = eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

Eigen::LLT<Matrix> factor_marginal(const MixedModel& model) {
    Eigen::LLT<Matrix> llt(model.marginal_covariance());
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::SingularMarginal, "marginal covariance is not positive definite");
    }
    const Vector diag = Matrix(llt.matrixL()).diagonal();
    if (!(diag.minCoeff() > 1e-150) || !diag.allFinite()) {
        throw Error(ErrorCode::SingularMarginal, "marginal covariance is numerically singular");
    }
    return llt;
}

Matrix pseudo_inverse(const Matrix& m) {
    return m.completeOrthogonalDecomposition().pseudoInverse();
}

void check_dataset(const LongDataset& data) {
    if (data.subject_count() < 1 || data.time_count() < 2) {
        throw Error(ErrorCode::InvalidInput, "need at least one subject and two time points");
    }
    require_finite(data.values, "panel values");
}

struct Initial {
    Matrix sigma;
    double sigma2;
};

// Moment start: half the average marginal variance goes to noise, the rest
// is mapped back through the basis.
Initial moment_start(const LongDataset& data, const Matrix& basis) {
    const Index n = data.time_count();
    const Index subjects = data.subject_count();
    Matrix s = Matrix::Zero(n, n);
    if (subjects > 1) {
        const Matrix centered = data.values.rowwise() - data.time_means().transpose();
        s = centered.transpose() * centered / static_cast<double>(subjects - 1);
    }
    Initial start;
    start.sigma2 = std::max(s.trace() / (2.0 * static_cast<double>(n)), kSigma2Floor);
    const Matrix pinv = pseudo_inverse(basis);
    start.sigma = clip_psd(pinv * (s - start.sigma2 * Matrix::Identity(n, n)) * pinv.transpose());
    return start;
}

struct PooledResidual {
    Vector mean;
    double extra_rss;
};

PooledResidual pool(const LongDataset& data, const PanelPosterior& post, const Matrix& basis) {
    const Matrix residual = data.values - post.u;
    PooledResidual out;
    out.mean = residual.colwise().mean().transpose();
    const double subjects = static_cast<double>(data.subject_count());
    out.extra_rss = (residual.rowwise() - out.mean.transpose()).squaredNorm() +
                    subjects * (basis * post.eta_cov * basis.transpose()).trace();
    out.extra_rss = std::max(out.extra_rss, 0.0);
    return out;
}

double relative_change(const Vector& next, const Vector& previous) {
    return (next - previous).norm() / std::max(previous.norm(), 1e-12);
}

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

} // namespace

BsplineBasis bspline_basis(Index n, Index basis_count, int degree) {
    if (degree < 1 || n < degree + 1) {
        throw Error(ErrorCode::InvalidInput, "need degree >= 1 and n >= degree + 1");
    }
    if (basis_count < degree + 1 || basis_count > n) {
        throw Error(ErrorCode::InvalidInput, "basis count must lie in [degree + 1, n]");
    }
    BsplineBasis out;
    out.grid = Vector::LinSpaced(n, 1.0, static_cast<double>(n));
    out.basis_count = basis_count;
    out.degree = degree;

    const Index interior_count = basis_count - degree - 1;
    Vector interior(interior_count);
    for (Index k = 0; k < interior_count; ++k) {
        interior(k) = 1.0 + static_cast<double>(n - 1) * static_cast<double>(k + 1) /
                                static_cast<double>(interior_count + 1);
    }
    out.knots = clamped_knots(interior, 1.0, static_cast<double>(n), degree);
    out.matrix = evaluate_bsplines(out.grid, out.knots, basis_count, degree);

    const bool square = basis_count == n;
    if (square && (!schoenberg_whitney(out.grid, out.knots, degree) || !full_column_rank(out.matrix))) {
        for (Index k = 0; k < interior_count; ++k) {
            interior(k) = out.grid.segment(k + 1, degree).mean();
        }
        out.knots = clamped_knots(interior, 1.0, static_cast<double>(n), degree);
        out.matrix = evaluate_bsplines(out.grid, out.knots, basis_count, degree);
        out.knot_averaging = true;
    }
    if (!full_column_rank(out.matrix)) {
        throw Error(ErrorCode::SingularBasis, "B-spline basis matrix is rank deficient");
    }
    return out;
}

Vector LongDataset::time_means() const {
    return values.colwise().mean().transpose();
}

LongDataset LongDataset::subset(const IndexList& rows) const {
    LongDataset out;
    out.values = select_rows(values, rows);
    for (const Index r : rows) {
        out.subjects.push_back(subjects.at(static_cast<std::size_t>(r)));
    }
    return out;
}

LongDataset LongDataset::from_matrix(Matrix values) {
    LongDataset out;
    out.values = std::move(values);
    for (Index i = 0; i < out.values.rows(); ++i) {
        out.subjects.push_back(std::to_string(i + 1));
    }
    return out;
}

LongDataset read_long_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw Error(ErrorCode::InvalidInput, "empty long-format CSV");
    }
    std::string header;
    for (const char c : line) {
        if (c != ' ' && c != '\r' && c != '\t') {
            header += c;
        }
    }
    if (header != "subject,time,value") {
        throw Error(ErrorCode::InvalidInput, "expected header 'subject,time,value'");
    }
    std::vector<std::string> order;
    std::map<std::string, std::map<long, double>> cells;
    long max_time = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        std::stringstream ss(line);
        std::string subject, time_text, value_text;
        if (!std::getline(ss, subject, ',') || !std::getline(ss, time_text, ',') || !std::getline(ss, value_text)) {
            throw Error(ErrorCode::InvalidInput, "line " + std::to_string(line_no) + ": expected three fields");
        }
        subject = trim(subject);
        long time = 0;
        double value = 0.0;
        try {
            std::size_t used = 0;
            time = std::stol(trim(time_text), &used);
            if (used != trim(time_text).size()) {
                throw std::invalid_argument("time");
            }
            value = std::stod(trim(value_text), &used);
            if (used != trim(value_text).size()) {
                throw std::invalid_argument("value");
            }
        } catch (const std::exception&) {
            throw Error(ErrorCode::InvalidInput, "line " + std::to_string(line_no) + ": bad time or value");
        }
        if (time < 1) {
            throw Error(ErrorCode::IndexOutOfRange, "line " + std::to_string(line_no) + ": time indices start at 1");
        }
        auto [it, inserted] = cells.try_emplace(subject);
        if (inserted) {
            order.push_back(subject);
        }
        if (!it->second.emplace(time, value).second) {
            throw Error(ErrorCode::InvalidInput,
                        "subject '" + subject + "' has two values at time " + std::to_string(time));
        }
        max_time = std::max(max_time, time);
    }
    if (order.empty()) {
        throw Error(ErrorCode::InvalidInput, "long-format CSV has no records");
    }
    LongDataset out;
    out.values.resize(static_cast<Index>(order.size()), max_time);
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto& row = cells[order[i]];
        if (static_cast<long>(row.size()) != max_time) {
            throw Error(ErrorCode::InvalidInput, "subject '" + order[i] + "' is missing time points");
        }
        for (const auto& [time, value] : row) {
            out.values(static_cast<Index>(i), time - 1) = value;
        }
    }
    out.subjects = std::move(order);
    require_finite(out.values, "panel values");
    return out;
}

LongDataset read_long_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::InvalidInput, "cannot open " + path);
    }
    return read_long_csv(in);
}

void write_long_csv(std::ostream& out, const LongDataset& data) {
    out << "subject,time,value\n" << std::setprecision(17);
    for (Index i = 0; i < data.subject_count(); ++i) {
        const std::string& id = static_cast<std::size_t>(i) < data.subjects.size()
                                    ? data.subjects[static_cast<std::size_t>(i)]
                                    : std::to_string(i + 1);
        for (Index j = 0; j < data.time_count(); ++j) {
            out << id << ',' << (j + 1) << ',' << data.values(i, j) << '\n';
        }
    }
}

std::pair<LongDataset, LongDataset> split_subjects(const LongDataset& data, Index train_count, Index test_count,
                                                   std::uint64_t seed) {
    if (train_count < 1 || test_count < 0 || train_count + test_count > data.subject_count()) {
        throw Error(ErrorCode::InvalidInput, "split sizes exceed the subject count");
    }
    IndexList order(static_cast<std::size_t>(data.subject_count()));
    std::iota(order.begin(), order.end(), Index{0});
    Rng rng(seed);
    for (std::size_t i = order.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
        std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }
    const IndexList train(order.begin(), order.begin() + train_count);
    const IndexList test(order.begin() + train_count, order.begin() + train_count + test_count);
    return {data.subset(train), data.subset(test)};
}

void MixedModel::validate() const {
    const Index n = f_hat.size();
    if (basis.rows() != n || sigma.rows() != basis.cols() || sigma.cols() != basis.cols()) {
        throw Error(ErrorCode::ShapeMismatch, "mixed model dimensions disagree");
    }
    if (!(sigma2 > 0.0)) {
        throw Error(ErrorCode::DomainError, "residual variance must be positive");
    }
    if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
        throw Error(ErrorCode::InvalidInput, "random-effect covariance is not symmetric");
    }
    if (sigma.size() > 0) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma, Eigen::EigenvaluesOnly);
        if (eig.eigenvalues().minCoeff() < -1e-10) {
            throw Error(ErrorCode::InvalidInput, "random-effect covariance is not positive semidefinite");
        }
    }
}

Matrix MixedModel::marginal_covariance() const {
    const Index n = basis.rows();
    return basis * sigma * basis.transpose() + sigma2 * Matrix::Identity(n, n);
}

EffectPosterior random_effect_posterior(const Vector& y, const Vector& f_hat, const MixedModel& model) {
    if (y.size() != f_hat.size() || y.size() != model.basis.rows()) {
        throw Error(ErrorCode::ShapeMismatch, "response, mean and basis lengths disagree");
    }
    const auto llt = factor_marginal(model);
    const Matrix gain = model.sigma * llt.solve(model.basis).transpose(); // Sigma B' V^-1
    EffectPosterior out;
    out.eta_mean = gain * (y - f_hat);
    out.eta_cov = model.sigma - gain * model.basis * model.sigma;
    out.eta_cov = 0.5 * (out.eta_cov + out.eta_cov.transpose());
    out.u = model.basis * out.eta_mean;
    return out;
}

PanelPosterior random_effect_posteriors(const LongDataset& data, const MixedModel& model) {
    if (data.time_count() != model.basis.rows() || model.f_hat.size() != data.time_count()) {
        throw Error(ErrorCode::ShapeMismatch, "panel width does not match the model");
    }
    const auto llt = factor_marginal(model);
    const Matrix gain = model.sigma * llt.solve(model.basis).transpose();
    const Matrix centered = data.values.rowwise() - model.f_hat.transpose();
    PanelPosterior out;
    out.eta_means = centered * gain.transpose();
    out.u = out.eta_means * model.basis.transpose();
    out.eta_cov = model.sigma - gain * model.basis * model.sigma;
    out.eta_cov = 0.5 * (out.eta_cov + out.eta_cov.transpose());
    return out;
}

Matrix update_sigma_matrix(const std::vector<Vector>& eta_means, const std::vector<Matrix>& eta_covs) {
    if (eta_means.empty() || eta_means.size() != eta_covs.size()) {
        throw Error(ErrorCode::InvalidInput, "need one mean and one covariance per subject");
    }
    const Index k = eta_means.front().size();
    Matrix total = Matrix::Zero(k, k);
    for (std::size_t i = 0; i < eta_means.size(); ++i) {
        if (eta_means[i].size() != k || eta_covs[i].rows() != k || eta_covs[i].cols() != k) {
            throw Error(ErrorCode::ShapeMismatch, "random-effect moments have inconsistent sizes");
        }
        total += eta_covs[i] + eta_means[i] * eta_means[i].transpose();
    }
    return clip_psd(total / static_cast<double>(eta_means.size()));
}

Matrix update_sigma_matrix(const Matrix& eta_means, const Matrix& shared_cov) {
    if (eta_means.rows() == 0 || shared_cov.rows() != eta_means.cols() || shared_cov.cols() != eta_means.cols()) {
        throw Error(ErrorCode::ShapeMismatch, "random-effect moments have inconsistent sizes");
    }
    return clip_psd(shared_cov + eta_means.transpose() * eta_means / static_cast<double>(eta_means.rows()));
}

double marginal_loglik(const LongDataset& data, const MixedModel& model) {
    model.validate();
    if (data.time_count() != model.f_hat.size()) {
        throw Error(ErrorCode::ShapeMismatch, "panel width does not match the model");
    }
    const auto llt = factor_marginal(model);
    const Matrix centered = (data.values.rowwise() - model.f_hat.transpose()).transpose();
    const Matrix whitened = llt.matrixL().solve(centered);
    const Vector diag = Matrix(llt.matrixL()).diagonal();
    const double log_det = 2.0 * diag.array().log().sum();
    const double n = static_cast<double>(data.time_count());
    const double subjects = static_cast<double>(data.subject_count());
    return -0.5 * subjects * (n * std::log(2.0 * std::numbers::pi) + log_det) - 0.5 * whitened.squaredNorm();
}

RestrictedDesign prepare_restricted_design(const FacetCone& cone, const std::optional<Matrix>& mean_basis,
                                           double tol) {
    RestrictedDesign out;
    out.cone = cone;
    out.mean_basis = mean_basis;
    const FacetCone coefficient_cone = mean_basis ? transform_cone(cone, *mean_basis, tol) : cone;
    ConversionOptions options;
    options.tol = tol;
    options.reduce_redundant = !coefficient_cone.linearity.empty();
    out.pair = make_dd_pair(coefficient_cone, options);
    out.graph = build_adjacency_graph(out.pair);
    out.cliques = enumerate_maximal_cliques(out.graph);
    out.design = mean_basis ? Matrix(*mean_basis * out.pair.vertex.delta) : out.pair.vertex.delta;
    // generators are rescaled to unit length in data space so the prior scale
    // does not depend on how the basis stretches each ray
    for (Index j = 0; j < out.design.cols(); ++j) {
        out.design.col(j).normalize();
    }
    return out;
}

void MixedConfig::validate() const {
    em.validate();
    if (max_outer < 1 || !(outer_tol > 0.0)) {
        throw Error(ErrorCode::InvalidInput, "max_outer must be positive and outer_tol > 0");
    }
    if (basis_count < 0) {
        throw Error(ErrorCode::InvalidInput, "basis count must be nonnegative");
    }
}

Matrix random_effect_basis(Index n, const MixedConfig& config) {
    if (config.random_basis) {
        if (config.random_basis->rows() != n) {
            throw Error(ErrorCode::ShapeMismatch, "random-effect basis must have one row per time point");
        }
        return *config.random_basis;
    }
    return bspline_basis(n, config.basis_count > 0 ? config.basis_count : n, config.degree).matrix;
}

namespace {

template <typename MStep>
MixedFit alternate(const LongDataset& data, const MixedConfig& config, const Matrix& basis, MStep&& m_step) {
    config.validate();
    check_dataset(data);
    MixedFit out;
    MixedModel& model = out.model;
    model.basis = basis;
    const Initial start = moment_start(data, basis);
    model.sigma = config.fixed_sigma ? *config.fixed_sigma : start.sigma;
    model.sigma2 = start.sigma2;
    model.f_hat = data.time_means();
    model.validate();

    for (Index outer = 1; outer <= config.max_outer; ++outer) {
        const PanelPosterior post = random_effect_posteriors(data, model);
        const PooledResidual pooled = pool(data, post, basis);
        const Matrix previous_sigma = model.sigma;
        if (!config.fixed_sigma) {
            model.sigma = update_sigma_matrix(post.eta_means, post.eta_cov);
        }
        const Vector previous = model.f_hat;
        const double previous_sigma2 = model.sigma2;
        m_step(pooled, model, out);
        out.outer_iterations = outer;
        const double change = relative_change(model.f_hat, previous);
        out.f_change.push_back(change);
        const double variance_change =
            std::max((model.sigma - previous_sigma).norm() / std::max(previous_sigma.norm(), 1e-12),
                     std::abs(model.sigma2 - previous_sigma2) / previous_sigma2);
        if (change < config.outer_tol && variance_change < config.outer_tol) {
            out.converged = true;
            break;
        }
    }
    if (!out.converged) {
        out.warnings.push_back("outer loop stopped at max_outer without meeting outer_tol");
    }
    return out;
}

} // namespace

MixedFit fit_mixed(const LongDataset& data, const RestrictedDesign& design, const MixedConfig& config) {
    const Index n = data.time_count();
    if (design.design.rows() != n) {
        throw Error(ErrorCode::ShapeMismatch, "cone dimension does not match the time grid");
    }
    const Matrix basis = random_effect_basis(n, config);
    const double subjects = static_cast<double>(data.subject_count());
    std::optional<EmState> warm;
    MixedFit out = alternate(data, config, basis, [&](const PooledResidual& pooled, MixedModel& model, MixedFit& fit) {
        RegressionData reg;
        reg.design = design.design;
        reg.response = pooled.mean;
        reg.replication = subjects;
        reg.extra_rss = pooled.extra_rss;
        reg.n_obs = subjects * static_cast<double>(n);
        EmFit em = conic::fit(reg, design.cliques, config.em, warm ? &*warm : nullptr);
        warm = em.state;
        model.f_hat = em.mu_hat;
        model.sigma2 = em.state.sigma2;
        fit.em = std::move(em);
    });
    if (out.em) {
        for (const auto& w : out.em->warnings) {
            out.warnings.push_back("em: " + w);
        }
    }
    return out;
}

MixedFit fit_mixed(const LongDataset& data, const FacetCone& cone, bool use_spline, const MixedConfig& config) {
    std::optional<Matrix> mean_basis;
    if (use_spline) {
        mean_basis = random_effect_basis(data.time_count(), config);
    }
    return fit_mixed(data, prepare_restricted_design(cone, mean_basis), config);
}

MixedFit fit_unrestricted(const LongDataset& data, bool use_spline, const MixedConfig& config) {
    check_dataset(data);
    const Index n = data.time_count();
    const Matrix basis = random_effect_basis(n, config);
    const double subjects = static_cast<double>(data.subject_count());
    Eigen::ColPivHouseholderQR<Matrix> qr;
    if (use_spline) {
        qr.compute(basis);
    }
    return alternate(data, config, basis, [&](const PooledResidual& pooled, MixedModel& model, MixedFit&) {
        model.f_hat = use_spline ? Vector(basis * qr.solve(pooled.mean)) : pooled.mean;
        const double rss = subjects * (pooled.mean - model.f_hat).squaredNorm() + pooled.extra_rss;
        model.sigma2 = m_step_sigma2(rss, subjects * static_cast<double>(n), config.em.hyper);
    });
}

} // namespace conic
