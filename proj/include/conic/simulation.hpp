#pragma once

#include "conic/mixed_effects.hpp"

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace conic {

enum class Scenario { Sparse, Dense };

Scenario parse_scenario(std::string_view name);
std::string to_string(Scenario scenario);

/// The four fitted models, in table order.
enum class Model { RestrictedSpline, Restricted, UnrestrictedSpline, Unrestricted };
inline constexpr std::array<Model, 4> kModels{Model::RestrictedSpline, Model::Restricted,
                                              Model::UnrestrictedSpline, Model::Unrestricted};
std::string to_string(Model model);

struct SimConfig {
    Index n = 20;
    Index subjects = 100;
    double sigma = 1.0;
    Scenario scenario = Scenario::Sparse;
    Index replications = 50;
    std::uint64_t seed = 2024;
    double kernel_bandwidth = 4.0;
    Index basis_count = 20;
    double random_effect_scale = 1.0; ///< multiplies the GP draw; 0 removes the random effect
    MixedConfig mixed;

    void validate() const;
};

/// 6 phi(x / 0.5) on n equally spaced points of [-2, 2].
Vector true_f_dense(Index n);

/// Euclidean projection of f_dense onto the cone (equalities included).
Vector true_f_sparse(const Vector& f_dense, const FacetCone& cone_with_equalities);

/// Zero-mean GP with kernel exp(-(i - j)^2 / (2 bandwidth^2)) on 1..n.
class GpSampler {
public:
    GpSampler(Index n, double bandwidth);

    Vector draw(Rng& rng) const;
    const Matrix& covariance() const { return covariance_; }

private:
    Matrix covariance_;
    Matrix factor_; // lower triangular, or a symmetric square root
};

Vector sample_gp_effect(Index n, double bandwidth, Rng& rng);

/// Per-scenario state shared by all replications.
struct SimulationSetup {
    FacetCone cone;  ///< constraints used by the restricted fits
    Vector truth;
    RestrictedDesign plain;
    RestrictedDesign spline;
    GpSampler gp;
};

SimulationSetup prepare_simulation(const SimConfig& config);

/// y_ij = f(j) + scale * W_i(j) + sigma * e_ij.
LongDataset simulate_panel(const SimConfig& config, const Vector& truth, const GpSampler& gp, Rng& rng);

struct ReplicationResult {
    Index rep = 0;
    std::uint64_t seed = 0;
    std::array<std::optional<double>, 4> mse; ///< indexed like kModels; unset when the fit failed
    std::array<Vector, 4> f_hat;
    std::vector<std::string> failures;
};

ReplicationResult run_replication(const SimConfig& config, Index rep);
ReplicationResult run_replication(const SimConfig& config, const SimulationSetup& setup, Index rep);

struct StudyCell {
    Scenario scenario = Scenario::Sparse;
    double sigma = 1.0;
    Model model = Model::Restricted;
    double median = 0.0;
    double mean = 0.0;
    Index failures = 0;
};

struct StudyReplication {
    Scenario scenario = Scenario::Sparse;
    double sigma = 1.0;
    ReplicationResult result;
};

struct StudySummary {
    std::vector<StudyCell> cells;
    std::vector<StudyReplication> replications;

    const StudyCell& cell(Scenario scenario, double sigma, Model model) const;
};

struct StudyPlan {
    SimConfig base;
    std::vector<Scenario> scenarios{Scenario::Sparse, Scenario::Dense};
    std::vector<double> sigmas{1.0, 2.0, 5.0};
};

/// Median of the values; the mean of the two middle values for even counts.
double median(std::vector<double> values);

StudySummary run_study(const StudyPlan& plan,
                       const std::function<void(const StudyReplication&)>& progress = {});

void write_study_csv(std::ostream& out, const StudySummary& summary);
void write_study_table(std::ostream& out, const StudySummary& summary);
void write_replications_csv(std::ostream& out, const StudySummary& summary);

} // namespace conic
