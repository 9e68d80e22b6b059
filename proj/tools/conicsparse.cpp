// conicsparse: command-line front end for the conic library.

#include "conic/adjacency.hpp"
#include "conic/cone_geometry.hpp"
#include "conic/em_solver.hpp"
#include "conic/error.hpp"
#include "conic/matrix_io.hpp"
#include "conic/mixed_effects.hpp"
#include "conic/prior.hpp"
#include "conic/shape_constraints.hpp"
#include "conic/simulation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

using json = nlohmann::json;

namespace {

// JSON config files for CLI11: keys are long option names, nested objects
// address subcommands ({"simulate": {"replications": 10}}).
class JsonConfig : public CLI::Config {
public:
    std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
        return collect(app, default_also).dump(2) + "\n";
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        json j;
        try {
            input >> j;
        } catch (const json::exception& e) {
            throw CLI::ConversionError(std::string("config is not valid JSON: ") + e.what());
        }
        if (!j.is_object()) {
            throw CLI::ConversionError("config must be a JSON object");
        }
        std::vector<CLI::ConfigItem> items;
        flatten(j, {}, items);
        return items;
    }

private:
    static json collect(const CLI::App* app, bool default_also) {
        json j = json::object();
        for (const CLI::Option* opt : app->get_options({})) {
            if (opt->get_lnames().empty() || !opt->get_configurable()) {
                continue;
            }
            const std::string& name = opt->get_lnames().front();
            if (opt->count() > 0) {
                const auto& results = opt->results();
                if (opt->get_expected_max() > 1) {
                    j[name] = results;
                } else if (opt->get_type_size() == 0) {
                    j[name] = true;
                } else if (!results.empty()) {
                    j[name] = results.back();
                }
            } else if (default_also && !opt->get_default_str().empty()) {
                j[name] = opt->get_default_str();
            }
        }
        for (const CLI::App* sub : app->get_subcommands({})) {
            json nested = collect(sub, default_also);
            if (!nested.empty()) {
                j[sub->get_name()] = nested;
            }
        }
        return j;
    }

    static void flatten(const json& j, std::vector<std::string> parents, std::vector<CLI::ConfigItem>& out) {
        for (const auto& [key, value] : j.items()) {
            if (value.is_object()) {
                auto next = parents;
                next.push_back(key);
                flatten(value, next, out);
                continue;
            }
            CLI::ConfigItem item;
            item.parents = parents;
            item.name = key;
            if (value.is_array()) {
                for (const auto& element : value) {
                    item.inputs.push_back(scalar(element));
                }
            } else {
                item.inputs.push_back(scalar(value));
            }
            out.push_back(std::move(item));
        }
    }

    static std::string scalar(const json& value) {
        if (value.is_string()) {
            return value.get<std::string>();
        }
        if (value.is_boolean()) {
            return value.get<bool>() ? "true" : "false";
        }
        return value.dump();
    }
};

struct Settings {
    double tol = conic::kDefaultTolerance;
    std::uint64_t seed = 2024;
    std::size_t clique_cap = conic::kDefaultCliqueCap;

    double v0 = 0.01;
    double v1 = 10.0;
    double beta_a = 1.0;
    double beta_b = 1.0;
    double alpha_ig = 0.5;
    double beta_ig = 0.5;
    double phi = 0.05;

    conic::Index max_iter = 500;
    double rel_tol = 1e-6;
    bool clamp_theta = true;
    conic::Index max_outer = 200;
    double outer_tol = 1e-5;
    conic::Index basis_count = 0;
    int degree = 3;

    conic::SpikeSlabHyper hyper() const {
        conic::SpikeSlabHyper h;
        h.v0 = v0;
        h.v1 = v1;
        h.a = beta_a;
        h.b = beta_b;
        h.alpha_ig = alpha_ig;
        h.beta_ig = beta_ig;
        h.phi = phi;
        return h;
    }

    conic::EmConfig em() const {
        conic::EmConfig c;
        c.hyper = hyper();
        c.max_iter = max_iter;
        c.rel_tol = rel_tol;
        c.clamp_theta = clamp_theta;
        return c;
    }

    conic::MixedConfig mixed() const {
        conic::MixedConfig c;
        c.em = em();
        c.max_outer = max_outer;
        c.outer_tol = outer_tol;
        c.basis_count = basis_count;
        c.degree = degree;
        return c;
    }
};

// Where a subcommand reads its cone from.
struct ConeSource {
    std::string preset;
    std::string facets;
    std::string spec;
    std::vector<conic::Index> linearity; // 1-based

    void attach(CLI::App* app) {
        auto* p = app->add_option("--preset", preset, "Named constraint matrix (bell20, nhanes24)");
        auto* f = app->add_option("--facets", facets, "Facet matrix CSV (rows a_i, cone a f >= 0)")->check(CLI::ExistingFile);
        auto* s = app->add_option("--spec", spec, "Shape spec file")->check(CLI::ExistingFile);
        p->excludes(f)->excludes(s);
        f->excludes(s);
        app->add_option("--linearity", linearity, "1-based rows held with equality");
    }

    bool given() const { return !preset.empty() || !facets.empty() || !spec.empty(); }

    conic::FacetCone load() const {
        conic::FacetCone cone;
        if (!preset.empty()) {
            cone = conic::preset_cone(preset);
        } else if (!facets.empty()) {
            cone.a = conic::read_matrix_csv(facets);
        } else if (!spec.empty()) {
            cone = conic::build_constraint_matrix(conic::read_shape_spec(spec));
        } else {
            throw conic::Error(conic::ErrorCode::InvalidInput, "give one of --preset, --facets or --spec");
        }
        if (!linearity.empty()) {
            conic::IndexList rows;
            for (const conic::Index r : linearity) {
                rows.push_back(r - 1);
            }
            cone = conic::sparse_scenario_cone(cone, rows);
        }
        return cone;
    }
};

std::ostream& open_output(const std::string& path, std::unique_ptr<std::ofstream>& holder) {
    if (path.empty() || path == "-") {
        return std::cout;
    }
    holder = std::make_unique<std::ofstream>(path);
    if (!*holder) {
        throw conic::Error(conic::ErrorCode::InvalidInput, "cannot write " + path);
    }
    return *holder;
}

json to_json(const conic::Vector& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

json one_based(const conic::IndexList& list) {
    json out = json::array();
    for (const conic::Index i : list) {
        out.push_back(i + 1);
    }
    return out;
}

json report_json(const conic::DDValidationReport& report) {
    json j;
    j["clean"] = report.clean();
    j["sign_violations"] = json::array();
    for (const auto& v : report.sign_violations) {
        j["sign_violations"].push_back({{"row", v.row + 1}, {"ray", v.ray + 1}, {"value", v.value}});
    }
    j["non_extreme_rays"] = one_based(report.non_extreme_rays);
    j["redundant_rays"] = one_based(report.redundant_rays);
    j["redundant_facets"] = one_based(report.redundant_facets);
    return j;
}

conic::DDPair pair_for(const ConeSource& source, const Settings& settings, bool reduce) {
    conic::ConversionOptions options;
    options.tol = settings.tol;
    options.reduce_redundant = reduce;
    return conic::make_dd_pair(source.load(), options);
}

json em_json(const conic::EmFit& fit) {
    json j;
    j["converged"] = fit.converged;
    j["iterations"] = fit.state.iteration;
    j["sigma2"] = fit.state.sigma2;
    j["log_posterior"] = fit.state.log_posterior;
    j["beta"] = to_json(fit.state.beta);
    j["mu_hat"] = to_json(fit.mu_hat);
    j["gamma"] = to_json(fit.state.gamma);
    j["theta"] = to_json(fit.state.theta);
    j["p_star_sums"] = to_json(fit.state.p_star_sums);
    j["trace"] = fit.trace;
    j["warnings"] = fit.warnings;
    return j;
}

json mixed_json(const conic::MixedFit& fit) {
    json j;
    j["converged"] = fit.converged;
    j["outer_iterations"] = fit.outer_iterations;
    j["f_hat"] = to_json(fit.model.f_hat);
    j["sigma2"] = fit.model.sigma2;
    j["f_change"] = fit.f_change;
    j["warnings"] = fit.warnings;
    if (fit.em) {
        j["em"] = em_json(*fit.em);
    }
    return j;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conic-sparse estimation on polyhedral cones"};
    app.require_subcommand(1);
    app.fallthrough();
    app.config_formatter(std::make_shared<JsonConfig>());
    app.set_config("--config", "", "JSON config; keys are long option names");

    Settings settings;
    auto* tuning = &app;
    tuning->add_option("--tol", settings.tol, "Geometric tolerance")->capture_default_str();
    tuning->add_option("--seed", settings.seed, "Random seed")->capture_default_str();
    tuning->add_option("--clique-cap", settings.clique_cap, "Maximal-clique enumeration cap")->capture_default_str();
    tuning->add_option("--v0", settings.v0, "Spike variance")->capture_default_str();
    tuning->add_option("--v1", settings.v1, "Slab variance")->capture_default_str();
    tuning->add_option("--beta-a", settings.beta_a, "Beta(a, b) shape a for theta")->capture_default_str();
    tuning->add_option("--beta-b", settings.beta_b, "Beta(a, b) shape b for theta")->capture_default_str();
    tuning->add_option("--alpha-ig", settings.alpha_ig, "Gamma shape on 1 / sigma^2")->capture_default_str();
    tuning->add_option("--beta-ig", settings.beta_ig, "Gamma rate on 1 / sigma^2")->capture_default_str();
    tuning->add_option("--phi", settings.phi, "Weight of the full-support prior component")->capture_default_str();
    tuning->add_option("--max-iter", settings.max_iter, "EM iteration cap")->capture_default_str();
    tuning->add_option("--rel-tol", settings.rel_tol, "EM relative tolerance")->capture_default_str();
    tuning->add_flag("--clamp-theta,!--no-clamp-theta", settings.clamp_theta, "Clip theta into [1e-6, 1 - 1e-6]");
    tuning->add_option("--max-outer", settings.max_outer, "Mixed-model outer iteration cap")->capture_default_str();
    tuning->add_option("--outer-tol", settings.outer_tol, "Mixed-model relative tolerance on f, Sigma and sigma^2")->capture_default_str();
    tuning->add_option("--basis-count", settings.basis_count, "B-spline basis size (0: one per time point)")
        ->capture_default_str();
    tuning->add_option("--degree", settings.degree, "B-spline degree")->capture_default_str();

    // cone
    auto* cone = app.add_subcommand("cone", "Cone representations and structure");
    cone->require_subcommand(1);

    ConeSource convert_src;
    std::string convert_vertices, convert_out;
    bool convert_reduce = false;
    auto* convert = cone->add_subcommand("convert", "Facets to extreme rays (or rays to facets with --vertices)");
    convert_src.attach(convert);
    convert->add_option("--vertices", convert_vertices, "Ray matrix CSV, one ray per column")->check(CLI::ExistingFile);
    convert->add_flag("--reduce", convert_reduce, "Drop redundant rows instead of failing");
    convert->add_option("-o,--out", convert_out, "Output CSV (default stdout)");

    ConeSource verify_src;
    std::string verify_vertices;
    auto* verify = cone->add_subcommand("verify", "Check a facet/ray pair");
    verify_src.attach(verify);
    verify->add_option("--vertices", verify_vertices, "Ray matrix CSV; computed from the facets when absent")
        ->check(CLI::ExistingFile);

    ConeSource adjacency_src;
    std::string adjacency_out;
    std::vector<conic::Index> adjacency_pair;
    auto* adjacency = cone->add_subcommand("adjacency", "Edge list of the ray adjacency graph");
    adjacency_src.attach(adjacency);
    adjacency->add_option("--pair", adjacency_pair, "Two 1-based rays: run both adjacency tests on them")
        ->expected(2);
    adjacency->add_option("-o,--out", adjacency_out, "Output CSV (default stdout)");

    ConeSource cliques_src;
    std::string cliques_out;
    auto* cliques = cone->add_subcommand("cliques", "Maximal cliques of the adjacency graph");
    cliques_src.attach(cliques);
    cliques->add_option("-o,--out", cliques_out, "Output CSV (default stdout)");

    ConeSource project_src;
    std::string project_point, project_out;
    auto* project = cone->add_subcommand("project", "Euclidean projection onto the cone");
    project_src.attach(project);
    project->add_option("--point", project_point, "Vector CSV")->required()->check(CLI::ExistingFile);
    project->add_option("-o,--out", project_out, "Output JSON (default stdout)");

    // constraints
    ConeSource constraints_src;
    std::string constraints_out;
    bool constraints_check = false;
    auto* constraints = app.add_subcommand("constraints", "Emit a shape-constraint matrix");
    constraints_src.attach(constraints);
    constraints->add_flag("--check", constraints_check, "Also check pointedness and conic independence");
    constraints->add_option("-o,--out", constraints_out, "Output CSV (default stdout)");

    // fit
    ConeSource fit_src;
    std::string fit_response, fit_data, fit_report, fit_mu_out;
    bool fit_mixed = false, fit_spline = false, fit_unrestricted = false;
    auto* fit = app.add_subcommand("fit", "EM fit of a cone-restricted mean");
    fit_src.attach(fit);
    fit->add_option("--response", fit_response, "Response vector CSV (plain regression)")->check(CLI::ExistingFile);
    fit->add_option("--data", fit_data, "Long CSV subject,time,value (with --mixed)")->check(CLI::ExistingFile);
    fit->add_flag("--mixed", fit_mixed, "Mixed-effect functional model");
    fit->add_flag("--spline", fit_spline, "Mean through the B-spline basis");
    fit->add_flag("--unrestricted", fit_unrestricted, "Unconstrained comparator (with --mixed)");
    fit->add_option("--report", fit_report, "JSON report path (default stdout)");
    fit->add_option("--mu-out", fit_mu_out, "Fitted mean CSV");

    // loglik
    ConeSource loglik_src;
    std::string loglik_data, loglik_out;
    conic::Index train = 95, test = 60, splits = 10;
    bool loglik_spline = false;
    auto* loglik = app.add_subcommand("loglik", "Held-out marginal log-likelihood over subject splits");
    loglik_src.attach(loglik);
    loglik->add_option("--data", loglik_data, "Long CSV subject,time,value")->required()->check(CLI::ExistingFile);
    loglik->add_option("--train", train, "Training subjects per split")->capture_default_str();
    loglik->add_option("--test", test, "Test subjects per split")->capture_default_str();
    loglik->add_option("--splits", splits, "Number of splits")->capture_default_str();
    loglik->add_flag("--spline", loglik_spline, "Mean through the B-spline basis");
    loglik->add_option("-o,--out", loglik_out, "Per-split CSV (default stdout)");

    // simulate
    conic::StudyPlan plan;
    std::vector<std::string> scenario_names{"sparse", "dense"};
    std::string sim_csv, sim_table, sim_reps, sim_panel;
    conic::Index panel_rep = 0;
    auto* simulate = app.add_subcommand("simulate", "Synthetic bell-curve study");
    simulate->add_option("--subjects", plan.base.subjects, "Subjects per data set")->capture_default_str();
    simulate->add_option("--replications", plan.base.replications, "Replications per cell")->capture_default_str();
    simulate->add_option("--sigmas", plan.sigmas, "Residual standard deviations")->capture_default_str();
    simulate->add_option("--scenarios", scenario_names, "sparse and/or dense")->capture_default_str();
    simulate->add_option("--bandwidth", plan.base.kernel_bandwidth, "GP length-scale")->capture_default_str();
    simulate->add_option("--effect-scale", plan.base.random_effect_scale, "Multiplier on the GP effect")
        ->capture_default_str();
    simulate->add_option("--spline-basis", plan.base.basis_count, "Basis count J")->capture_default_str();
    simulate->add_option("--csv", sim_csv, "Summary CSV path");
    simulate->add_option("--table", sim_table, "Text table path (default stdout)");
    simulate->add_option("--reps-csv", sim_reps, "Per-replication MSE CSV path");
    simulate->add_option("--panel-out", sim_panel, "Only write one simulated panel (long CSV) and exit");
    simulate->add_option("--panel-rep", panel_rep, "Replication index used by --panel-out")->capture_default_str();

    // prior-sample
    ConeSource prior_src;
    conic::Index draws = 100;
    bool prior_mixture = false, prior_adjacency = false;
    std::string prior_out;
    auto* prior = app.add_subcommand("prior-sample", "Draws from the clique spike-and-slab prior");
    prior_src.attach(prior);
    prior->add_option("--draws", draws, "Number of draws")->capture_default_str();
    prior->add_flag("--mixture", prior_mixture, "Mix in the full-support component with weight phi");
    prior->add_flag("--adjacency", prior_adjacency, "Neighborhood prior instead of cliques");
    prior->add_option("-o,--out", prior_out, "Output CSV (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        std::unique_ptr<std::ofstream> file;

        if (*convert) {
            if (!convert_vertices.empty()) {
                const conic::VertexCone v{conic::read_matrix_csv(convert_vertices)};
                const conic::FacetCone f = conic::vertex_to_facet(v, settings.tol);
                conic::write_matrix_csv(open_output(convert_out, file), f.a);
            } else {
                const conic::DDPair pair = pair_for(convert_src, settings, convert_reduce);
                conic::write_matrix_csv(open_output(convert_out, file), pair.vertex.delta);
            }
            return 0;
        }

        if (*verify) {
            conic::DDPair pair;
            if (verify_vertices.empty()) {
                pair = pair_for(verify_src, settings, false);
            } else {
                pair.facet = verify_src.load();
                pair.vertex.delta = conic::read_matrix_csv(verify_vertices);
                pair.tolerance = settings.tol;
            }
            const auto report = conic::verify_dd_pair(pair);
            std::cout << report_json(report).dump(2) << '\n';
            return report.clean() ? 0 : 1;
        }

        if (*adjacency) {
            const conic::DDPair pair = pair_for(adjacency_src, settings, false);
            if (!adjacency_pair.empty()) {
                const conic::Index i = adjacency_pair[0] - 1;
                const conic::Index j = adjacency_pair[1] - 1;
                json j_out{{"algebraic", conic::algebraic_adjacency_test(pair, i, j)},
                           {"combinatorial", conic::combinatorial_adjacency_test(pair, i, j)}};
                std::cout << j_out.dump(2) << '\n';
                return 0;
            }
            const auto graph = conic::build_adjacency_graph(pair);
            auto& out = open_output(adjacency_out, file);
            out << "ray_i,ray_j\n";
            for (const auto& [i, j] : graph.edges) {
                out << i + 1 << ',' << j + 1 << '\n';
            }
            return 0;
        }

        if (*cliques) {
            const conic::DDPair pair = pair_for(cliques_src, settings, false);
            const auto set = conic::enumerate_maximal_cliques(conic::build_adjacency_graph(pair), settings.clique_cap);
            auto& out = open_output(cliques_out, file);
            out << "clique,size,rays\n";
            for (std::size_t w = 0; w < set.cliques.size(); ++w) {
                out << w + 1 << ',' << set.cliques[w].size() << ',';
                for (std::size_t k = 0; k < set.cliques[w].size(); ++k) {
                    out << (k ? " " : "") << set.cliques[w][k] + 1;
                }
                out << '\n';
            }
            return 0;
        }

        if (*project) {
            const conic::DDPair pair = pair_for(project_src, settings, true);
            const conic::Vector y = conic::read_vector_csv(project_point);
            const conic::Vector b = conic::projection_coefficients(y, pair.vertex);
            const conic::Vector mu = pair.vertex.delta * b;
            json j_out{{"projection", to_json(mu)}, {"coefficients", to_json(b)}, {"distance", (y - mu).norm()}};
            open_output(project_out, file) << j_out.dump(2) << '\n';
            return 0;
        }

        if (*constraints) {
            const conic::FacetCone c = constraints_src.load();
            conic::write_matrix_csv(open_output(constraints_out, file), c.a, 17);
            if (constraints_check) {
                const bool pointed = conic::numeric_rank(c.a, settings.tol) == c.dim();
                const bool independent = conic::conically_independent_rows(c.a, settings.tol).independent;
                std::cerr << "pointed: " << (pointed ? "yes" : "no") << "\nconically independent rows: "
                          << (independent ? "yes" : "no") << '\n';
                return pointed && independent ? 0 : 1;
            }
            return 0;
        }

        if (*fit) {
            json report;
            conic::Vector mean;
            if (fit_mixed) {
                if (fit_data.empty()) {
                    throw conic::Error(conic::ErrorCode::InvalidInput, "--mixed needs --data");
                }
                const conic::LongDataset data = conic::read_long_csv(fit_data);
                conic::MixedFit result;
                if (fit_unrestricted) {
                    result = conic::fit_unrestricted(data, fit_spline, settings.mixed());
                } else {
                    result = conic::fit_mixed(data, fit_src.load(), fit_spline, settings.mixed());
                }
                report = mixed_json(result);
                report["marginal_loglik"] = conic::marginal_loglik(data, result.model);
                mean = result.model.f_hat;
            } else {
                if (fit_response.empty()) {
                    throw conic::Error(conic::ErrorCode::InvalidInput, "plain fit needs --response");
                }
                const conic::DDPair pair = pair_for(fit_src, settings, true);
                const auto set =
                    conic::enumerate_maximal_cliques(conic::build_adjacency_graph(pair), settings.clique_cap);
                const conic::EmFit result =
                    conic::fit(conic::read_vector_csv(fit_response), pair.vertex.delta, set, settings.em());
                report = em_json(result);
                mean = result.mu_hat;
            }
            open_output(fit_report, file) << report.dump(2) << '\n';
            if (!fit_mu_out.empty()) {
                conic::write_matrix_csv(fit_mu_out, mean);
            }
            return 0;
        }

        if (*loglik) {
            const conic::LongDataset data = conic::read_long_csv(loglik_data);
            const conic::FacetCone c = loglik_src.load();
            const conic::MixedConfig mixed = settings.mixed();
            std::optional<conic::Matrix> mean_basis;
            if (loglik_spline) {
                mean_basis = conic::random_effect_basis(data.time_count(), mixed);
            }
            const conic::RestrictedDesign design = conic::prepare_restricted_design(c, mean_basis, settings.tol);
            auto& out = open_output(loglik_out, file);
            out << "split,restricted,unrestricted\n" << std::setprecision(12);
            conic::Index wins = 0;
            for (conic::Index s = 0; s < splits; ++s) {
                const auto [tr, te] =
                    conic::split_subjects(data, train, test, conic::derive_seed(settings.seed, static_cast<std::uint64_t>(s)));
                const double restricted = conic::marginal_loglik(te, conic::fit_mixed(tr, design, mixed).model);
                const double unrestricted =
                    conic::marginal_loglik(te, conic::fit_unrestricted(tr, loglik_spline, mixed).model);
                wins += restricted > unrestricted ? 1 : 0;
                out << s + 1 << ',' << restricted << ',' << unrestricted << '\n';
            }
            std::cerr << "restricted ahead in " << wins << " of " << splits << " splits\n";
            return 0;
        }

        if (*simulate) {
            plan.base.seed = settings.seed;
            plan.base.mixed = settings.mixed();
            plan.scenarios.clear();
            for (const auto& name : scenario_names) {
                plan.scenarios.push_back(conic::parse_scenario(name));
            }
            if (!sim_panel.empty()) {
                conic::SimConfig config = plan.base;
                config.scenario = plan.scenarios.front();
                config.sigma = plan.sigmas.front();
                const conic::SimulationSetup setup = conic::prepare_simulation(config);
                conic::Rng rng(conic::derive_seed(config.seed, static_cast<std::uint64_t>(panel_rep)));
                conic::write_long_csv(open_output(sim_panel, file),
                                      conic::simulate_panel(config, setup.truth, setup.gp, rng));
                return 0;
            }
            const auto start = std::chrono::steady_clock::now();
            const auto summary = conic::run_study(plan, [](const conic::StudyReplication& r) {
                for (const auto& failure : r.result.failures) {
                    std::cerr << conic::to_string(r.scenario) << " sigma=" << r.sigma << " rep=" << r.result.rep
                              << ": " << failure << '\n';
                }
            });
            const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            conic::write_study_table(open_output(sim_table, file), summary);
            if (!sim_csv.empty()) {
                std::ofstream out(sim_csv);
                conic::write_study_csv(out, summary);
            }
            if (!sim_reps.empty()) {
                std::ofstream out(sim_reps);
                conic::write_replications_csv(out, summary);
            }
            std::cerr << "study finished in " << std::fixed << std::setprecision(1) << seconds << " s\n";
            return 0;
        }

        if (*prior) {
            const conic::DDPair pair = pair_for(prior_src, settings, true);
            const auto graph = conic::build_adjacency_graph(pair);
            const auto set = conic::enumerate_maximal_cliques(graph, settings.clique_cap);
            auto hyper = settings.hyper();
            const auto defaults = conic::SpikeSlabHyper::with_cliques(set.size());
            hyper.gamma = defaults.gamma;
            hyper.theta = defaults.theta;
            conic::Rng rng(settings.seed);
            std::vector<conic::PriorDraw> out_draws;
            for (conic::Index k = 0; k < draws; ++k) {
                out_draws.push_back(prior_adjacency ? conic::sample_adjacency_prior(pair, graph, hyper, rng)
                                                    : conic::sample_prior_mu(pair, set, hyper, rng, prior_mixture));
            }
            conic::write_prior_draws_csv(open_output(prior_out, file), out_draws);
            return 0;
        }
    } catch (const conic::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
