#include "conic/simulation.hpp"

#include "conic/error.hpp"
#include "conic/shape_constraints.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

namespace conic {

Scenario parse_scenario(std::string_view name) {
    if (name == "sparse") {
        return Scenario::Sparse;
    }
    if (name == "dense") {
        return Scenario::Dense;
    }
    throw Error(ErrorCode::InvalidInput, "unknown scenario '" + std::string(name) + "'");
}

std::string to_string(Scenario scenario) {
    return scenario == Scenario::Sparse ? "sparse" : "dense";
}

std::string to_string(Model model) {
    switch (model) {
    case Model::RestrictedSpline:
        return "Restricted spline";
    case Model::Restricted:
        return "Restricted";
    case Model::UnrestrictedSpline:
        return "Unrestricted spline";
    case Model::Unrestricted:
        return "Unrestricted";
    }
    return "?";
}

void SimConfig::validate() const {
    if (n != 20) {
        throw Error(ErrorCode::InvalidInput, "the bell-shape study is defined on n = 20 time points");
    }
    if (subjects < 1 || replications < 1 || basis_count < 4 || basis_count > n) {
        throw Error(ErrorCode::InvalidInput, "counts must be positive and the basis count in [4, n]");
    }
    if (!(sigma >= 0.0) || !(kernel_bandwidth > 0.0) || !(random_effect_scale >= 0.0)) {
        throw Error(ErrorCode::InvalidInput, "sigma, bandwidth and effect scale must be valid");
    }
    mixed.validate();
}

Vector true_f_dense(Index n) {
    if (n < 2) {
        throw Error(ErrorCode::InvalidInput, "need at least two grid points");
    }
    const Vector x = Vector::LinSpaced(n, -2.0, 2.0);
    Vector f(n);
    for (Index j = 0; j < n; ++j) {
        const double z = x(j) / 0.5;
        f(j) = 6.0 * std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    }
    return f;
}

Vector true_f_sparse(const Vector& f_dense, const FacetCone& cone_with_equalities) {
    ConversionOptions options;
    options.reduce_redundant = true;
    const DDPair pair = make_dd_pair(cone_with_equalities, options);
    return project_onto_cone(f_dense, pair.vertex);
}

GpSampler::GpSampler(Index n, double bandwidth) {
    if (n < 1 || !(bandwidth > 0.0)) {
        throw Error(ErrorCode::InvalidInput, "GP needs n >= 1 and a positive bandwidth");
    }
    covariance_.resize(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            const double d = static_cast<double>(i - j);
            covariance_(i, j) = std::exp(-d * d / (2.0 * bandwidth * bandwidth));
        }
    }
    const Matrix jittered = covariance_ + 1e-10 * Matrix::Identity(n, n);
    Eigen::LLT<Matrix> llt(jittered);
    if (llt.info() == Eigen::Success) {
        factor_ = llt.matrixL();
    } else {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(jittered);
        factor_ = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                  eig.eigenvectors().transpose();
    }
}

Vector GpSampler::draw(Rng& rng) const {
    Vector z(factor_.cols());
    for (Index i = 0; i < z.size(); ++i) {
        z(i) = rng.normal();
    }
    return factor_ * z;
}

Vector sample_gp_effect(Index n, double bandwidth, Rng& rng) {
    return GpSampler(n, bandwidth).draw(rng);
}

SimulationSetup prepare_simulation(const SimConfig& config) {
    config.validate();
    FacetCone cone = preset_cone("bell20");
    const Vector dense = true_f_dense(config.n);
    Vector truth = dense;
    if (config.scenario == Scenario::Sparse) {
        truth = true_f_sparse(dense, sparse_scenario_cone(cone, bell20_sparse_equalities()));
    }
    MixedConfig mixed = config.mixed;
    mixed.basis_count = config.basis_count;
    const Matrix basis = random_effect_basis(config.n, mixed);
    RestrictedDesign plain = prepare_restricted_design(cone, std::nullopt);
    RestrictedDesign spline = prepare_restricted_design(cone, basis);
    return SimulationSetup{std::move(cone), std::move(truth), std::move(plain), std::move(spline),
                           GpSampler(config.n, config.kernel_bandwidth)};
}

LongDataset simulate_panel(const SimConfig& config, const Vector& truth, const GpSampler& gp, Rng& rng) {
    const Index n = truth.size();
    Matrix values(config.subjects, n);
    for (Index i = 0; i < config.subjects; ++i) {
        const Vector w = gp.draw(rng);
        for (Index j = 0; j < n; ++j) {
            values(i, j) = truth(j) + config.random_effect_scale * w(j) + config.sigma * rng.normal();
        }
    }
    return LongDataset::from_matrix(std::move(values));
}

ReplicationResult run_replication(const SimConfig& config, Index rep) {
    return run_replication(config, prepare_simulation(config), rep);
}

ReplicationResult run_replication(const SimConfig& config, const SimulationSetup& setup, Index rep) {
    config.validate();
    ReplicationResult out;
    out.rep = rep;
    out.seed = derive_seed(config.seed, static_cast<std::uint64_t>(rep));
    Rng rng(out.seed);
    const LongDataset data = simulate_panel(config, setup.truth, setup.gp, rng);

    MixedConfig mixed = config.mixed;
    mixed.basis_count = config.basis_count;
    for (std::size_t m = 0; m < kModels.size(); ++m) {
        try {
            MixedFit fit;
            switch (kModels[m]) {
            case Model::RestrictedSpline:
                fit = fit_mixed(data, setup.spline, mixed);
                break;
            case Model::Restricted:
                fit = fit_mixed(data, setup.plain, mixed);
                break;
            case Model::UnrestrictedSpline:
                fit = fit_unrestricted(data, true, mixed);
                break;
            case Model::Unrestricted:
                fit = fit_unrestricted(data, false, mixed);
                break;
            }
            out.f_hat[m] = fit.model.f_hat;
            out.mse[m] = (fit.model.f_hat - setup.truth).squaredNorm() / static_cast<double>(config.n);
        } catch (const Error& e) {
            out.failures.push_back(to_string(kModels[m]) + ": " + e.what());
        }
    }
    return out;
}

const StudyCell& StudySummary::cell(Scenario scenario, double sigma, Model model) const {
    for (const auto& c : cells) {
        if (c.scenario == scenario && c.sigma == sigma && c.model == model) {
            return c;
        }
    }
    throw Error(ErrorCode::InvalidInput, "no such study cell");
}

double median(std::vector<double> values) {
    if (values.empty()) {
        return std::nan("");
    }
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

StudySummary run_study(const StudyPlan& plan, const std::function<void(const StudyReplication&)>& progress) {
    StudySummary summary;
    for (const Scenario scenario : plan.scenarios) {
        SimConfig config = plan.base;
        config.scenario = scenario;
        const SimulationSetup setup = prepare_simulation(config);
        for (const double sigma : plan.sigmas) {
            config.sigma = sigma;
            std::array<std::vector<double>, 4> mses;
            std::array<Index, 4> failures{};
            for (Index rep = 0; rep < config.replications; ++rep) {
                StudyReplication record{scenario, sigma, run_replication(config, setup, rep)};
                for (std::size_t m = 0; m < kModels.size(); ++m) {
                    if (record.result.mse[m]) {
                        mses[m].push_back(*record.result.mse[m]);
                    } else {
                        ++failures[m];
                    }
                }
                if (progress) {
                    progress(record);
                }
                summary.replications.push_back(std::move(record));
            }
            for (std::size_t m = 0; m < kModels.size(); ++m) {
                StudyCell c;
                c.scenario = scenario;
                c.sigma = sigma;
                c.model = kModels[m];
                c.median = median(mses[m]);
                double total = 0.0;
                for (const double v : mses[m]) {
                    total += v;
                }
                c.mean = mses[m].empty() ? std::nan("") : total / static_cast<double>(mses[m].size());
                c.failures = failures[m];
                summary.cells.push_back(c);
            }
        }
    }
    return summary;
}

void write_study_csv(std::ostream& out, const StudySummary& summary) {
    out << "scenario,sigma,model,median_mse,mean_mse,failures\n" << std::setprecision(10);
    for (const auto& c : summary.cells) {
        out << to_string(c.scenario) << ',' << c.sigma << ',' << to_string(c.model) << ',' << c.median << ','
            << c.mean << ',' << c.failures << '\n';
    }
}

void write_study_table(std::ostream& out, const StudySummary& summary) {
    std::vector<Scenario> scenarios;
    std::vector<double> sigmas;
    for (const auto& c : summary.cells) {
        if (std::find(scenarios.begin(), scenarios.end(), c.scenario) == scenarios.end()) {
            scenarios.push_back(c.scenario);
        }
        if (std::find(sigmas.begin(), sigmas.end(), c.sigma) == sigmas.end()) {
            sigmas.push_back(c.sigma);
        }
    }
    for (const Scenario scenario : scenarios) {
        out << "Scenario: " << to_string(scenario) << '\n';
        std::ostringstream header;
        header << std::left << std::setw(24) << "";
        for (const double sigma : sigmas) {
            std::ostringstream label;
            label << "sigma = " << sigma;
            header << std::right << std::setw(12) << label.str();
        }
        out << header.str() << '\n';
        for (const bool use_median : {true, false}) {
            out << (use_median ? "Median error" : "Mean error") << '\n';
            for (const Model model : kModels) {
                out << "  " << std::left << std::setw(22) << to_string(model);
                for (const double sigma : sigmas) {
                    const StudyCell& c = summary.cell(scenario, sigma, model);
                    out << std::right << std::setw(12) << std::fixed << std::setprecision(3)
                        << (use_median ? c.median : c.mean);
                }
                out << std::defaultfloat << '\n';
            }
        }
        out << '\n';
    }
}

void write_replications_csv(std::ostream& out, const StudySummary& summary) {
    out << "scenario,sigma,rep,seed";
    for (const Model model : kModels) {
        out << ',' << to_string(model);
    }
    out << '\n' << std::setprecision(10);
    for (const auto& r : summary.replications) {
        out << to_string(r.scenario) << ',' << r.sigma << ',' << r.result.rep << ',' << r.result.seed;
        for (const auto& mse : r.result.mse) {
            out << ',';
            if (mse) {
                out << *mse;
            }
        }
        out << '\n';
    }
}

} // namespace conic
