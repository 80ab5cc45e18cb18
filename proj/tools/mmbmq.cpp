// mmbmq: batch front end for the two-sided MMBM / finite-buffer fluid solvers.
//
// Exit codes: 0 ok, 2 input or validation error, 3 numerical failure.
// Diagnostics go to stderr as single-line JSON objects.

#include <CLI11.hpp>
#include <json.hpp>

#include <Eigen/Eigenvalues>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mmbm/fluid_stationary.hpp"
#include "mmbm/io.hpp"
#include "mmbm/mmbm_stationary.hpp"
#include "mmbm/model.hpp"
#include "mmbm/simulation.hpp"
#include "mmbm/validation.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct RunContext {
    std::string command;
    std::string model_path;
    std::string out_dir = ".";
    ordered_json parameters;
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

    std::string path(const std::string& name) const {
        return (fs::path(out_dir) / name).string();
    }

    void wrote(const std::string& name) { outputs.push_back(path(name)); }

    /// The manifest is the atomic completion marker: written last.
    void write_manifest() {
        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        ordered_json manifest;
        manifest["command"] = command;
        manifest["input"] = model_path;
        manifest["parameters"] = parameters;
        manifest["outputs"] = outputs;
        manifest["version"] = kVersion;
        manifest["wall_time_seconds"] = wall;
        mmbm::write_text_file(path("manifest.json"), manifest.dump(2) + "\n");
    }
};

ordered_json vec_to_json(const mmbm::RowVector& v) {
    ordered_json arr = ordered_json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

ordered_json eigenvalues_json(const mmbm::Matrix& A) {
    Eigen::EigenSolver<mmbm::Matrix> es(A, false);
    ordered_json arr = ordered_json::array();
    for (int i = 0; i < A.rows(); ++i) {
        arr.push_back({{"re", es.eigenvalues()(i).real()}, {"im", es.eigenvalues()(i).imag()}});
    }
    return arr;
}

void emit_warning(const std::string& message) {
    ordered_json w;
    w["warning"] = message;
    std::cerr << w.dump() << "\n";
}

std::vector<double> parse_eps_list(const std::string& text) {
    std::vector<double> out;
    std::string token;
    std::stringstream ss(text);
    while (std::getline(ss, token, ',')) {
        if (token.empty()) continue;
        try {
            out.push_back(std::stod(token));
        } catch (const std::exception&) {
            throw mmbm::SolverError(mmbm::ErrorCode::BadInput,
                                    "cannot parse eps value: " + token);
        }
    }
    if (out.empty()) throw mmbm::SolverError(mmbm::ErrorCode::BadInput, "empty --eps-list");
    for (size_t i = 0; i + 1 < out.size(); ++i) {
        if (out[i] < out[i + 1]) {
            emit_warning("eps list not sorted; sorting descending");
            break;
        }
    }
    return out;
}

int run_solve(RunContext& ctx, const mmbm::MmbmModel& model, int grid) {
    const mmbm::MmbmSolution sol = mmbm::stationary_density(model);

    const std::vector<double> xs = mmbm::interior_grid(model.b, grid);
    mmbm::Matrix density(grid, model.m), cdf(grid, model.m);
    for (int r = 0; r < grid; ++r) {
        density.row(r) = sol.density(xs[r]);
        cdf.row(r) = sol.cdf(xs[r]);
    }
    mmbm::write_density_csv(ctx.path("density.csv"), xs, density);
    ctx.wrote("density.csv");
    mmbm::write_density_csv(ctx.path("cdf.csv"), xs, cdf);
    ctx.wrote("cdf.csv");

    // boundary values by continuity of the kernel
    const int m = model.m;
    const mmbm::Vector theta_inv = model.theta().cwiseInverse();
    const mmbm::RowVector d0 =
        sol.coeff.head(m) * theta_inv.asDiagonal() +
        sol.coeff.tail(m) * mmbm::matrix_exponential(sol.lm.K0star * model.b) *
            theta_inv.asDiagonal();
    const mmbm::RowVector db =
        sol.coeff.head(m) * mmbm::matrix_exponential(sol.lm.K0 * model.b) *
            theta_inv.asDiagonal() +
        sol.coeff.tail(m) * theta_inv.asDiagonal();

    ordered_json summary;
    summary["limit"] = true;
    summary["b"] = model.b;
    summary["mass0"] = vec_to_json(mmbm::RowVector::Zero(m));
    summary["massb"] = vec_to_json(mmbm::RowVector::Zero(m));
    summary["c"] = sol.cstar;
    summary["nu0"] = vec_to_json(sol.nu0);
    summary["K0_eigenvalues"] = eigenvalues_json(sol.lm.K0);
    summary["K0star_eigenvalues"] = eigenvalues_json(sol.lm.K0star);
    summary["density_at_0"] = d0.sum();
    summary["density_at_b"] = db.sum();
    summary["cond_N0"] = sol.cond_N0;
    mmbm::write_text_file(ctx.path("summary.json"), summary.dump(2) + "\n");
    ctx.wrote("summary.json");
    return 0;
}

int run_fluid(RunContext& ctx, const mmbm::MmbmModel& model, double eps, int grid,
              bool check_alt) {
    const mmbm::FluidModel fluid = mmbm::build_fluid_approximation(model, eps);
    const mmbm::FiniteBufferSolution sol = mmbm::finite_buffer_solution(fluid, model.b);

    const std::vector<double> xs = mmbm::interior_grid(model.b, grid);
    mmbm::Matrix density(grid, model.m);
    for (int r = 0; r < grid; ++r) density.row(r) = mmbm::density_at(sol, xs[r]).collapsed;
    mmbm::write_density_csv(ctx.path("density.csv"), xs, density);
    ctx.wrote("density.csv");

    ordered_json summary;
    summary["eps"] = eps;
    summary["b"] = model.b;
    summary["mass0"] = vec_to_json(sol.p0_minus);
    summary["massb"] = vec_to_json(sol.pb_plus);
    summary["c"] = sol.c;
    summary["cond_N"] = sol.cond_N;
    if (check_alt) {
        const mmbm::FiniteBufferSolution alt = mmbm::solve_via_boundary_masses(fluid, model.b);
        double disc = std::max((alt.p0_minus - sol.p0_minus).cwiseAbs().maxCoeff(),
                               (alt.pb_plus - sol.pb_plus).cwiseAbs().maxCoeff());
        for (int r = 0; r < grid; ++r) {
            disc = std::max(disc, (mmbm::density_at(alt, xs[r]).full -
                                   mmbm::density_at(sol, xs[r]).full)
                                      .cwiseAbs()
                                      .maxCoeff());
        }
        summary["discrepancy_alt"] = disc;
    }
    mmbm::write_text_file(ctx.path("summary.json"), summary.dump(2) + "\n");
    ctx.wrote("summary.json");
    return 0;
}

int run_sweep(RunContext& ctx, const mmbm::MmbmModel& model,
              const std::vector<double>& eps_list) {
    const mmbm::SweepReport report = mmbm::lambda_sweep(model, eps_list);
    mmbm::write_sweep_csv(ctx.path("sweep.csv"), report);
    ctx.wrote("sweep.csv");

    ordered_json doc;
    doc["slope"] = report.has_slope ? ordered_json(report.slope) : ordered_json(nullptr);
    ordered_json pts = ordered_json::array();
    for (const auto& p : report.points) {
        pts.push_back({{"eps", p.eps},
                       {"distance", p.distance},
                       {"mass0", p.mass0},
                       {"massb", p.massb},
                       {"cond_N", p.cond_N}});
    }
    doc["points"] = pts;
    mmbm::write_text_file(ctx.path("sweep.json"), doc.dump(2) + "\n");
    ctx.wrote("sweep.json");
    return 0;
}

int run_simulate(RunContext& ctx, const mmbm::MmbmModel& model, const std::string& mode,
                 double eps, const mmbm::SimConfig& cfg) {
    mmbm::EmpiricalLaw law;
    double ks = 0.0;
    if (mode == "fluid") {
        if (!(eps > 0.0)) {
            throw mmbm::SolverError(mmbm::ErrorCode::BadInput, "--mode fluid requires --eps");
        }
        const mmbm::FluidModel fluid = mmbm::build_fluid_approximation(model, eps);
        law = mmbm::simulate_fluid(fluid, model.b, cfg);
        const mmbm::FiniteBufferSolution sol = mmbm::finite_buffer_solution(fluid, model.b);
        ks = mmbm::ks_distance(
            law, [&](double x) { return mmbm::fluid_cdf_collapsed(sol, x).sum(); });
    } else if (mode == "mmbm") {
        law = mmbm::simulate_mmbm(model, cfg);
        const mmbm::MmbmSolution sol = mmbm::stationary_density(model);
        ks = mmbm::ks_distance(law, [&](double x) { return sol.cdf(x).sum(); });
    } else {
        throw mmbm::SolverError(mmbm::ErrorCode::BadInput, "--mode must be fluid or mmbm");
    }

    mmbm::write_histogram_csv(ctx.path("histogram.csv"), law);
    ctx.wrote("histogram.csv");

    ordered_json summary;
    summary["mode"] = mode;
    if (mode == "fluid") summary["eps"] = eps;
    summary["seed"] = cfg.seed;
    summary["config"] = {{"horizon", cfg.horizon},
                         {"burn_in", cfg.burn_in},
                         {"step", cfg.step},
                         {"sample_dt", cfg.sample_dt},
                         {"grid", cfg.grid}};
    summary["samples"] = law.count;
    summary["ess"] = law.ess;
    summary["boundary0"] = vec_to_json(law.boundary0);
    summary["boundaryb"] = vec_to_json(law.boundaryb);
    summary["local_time_rate_0"] = law.w_rate;
    summary["local_time_rate_b"] = law.m_rate;
    summary["ks_vs_closed_form"] = ks;
    summary["warnings"] = law.warnings;
    mmbm::write_text_file(ctx.path("summary.json"), summary.dump(2) + "\n");
    ctx.wrote("summary.json");

    for (const auto& w : law.warnings) emit_warning(w);
    return 0;
}

int run_compare(RunContext& ctx, const mmbm::MmbmModel& model, const mmbm::SimConfig& cfg) {
    const mmbm::MmbmSolution sol = mmbm::stationary_density(model);

    // closed form vs time-reversed representation
    const double d_reversed = mmbm::cross_check(model);

    // closed form vs CTMC discretization at the cell centers
    const mmbm::DiscretizationResult oracle = mmbm::discretization_oracle(model, 2000);
    double d_oracle = 0.0;
    for (int k = 0; k < oracle.n; ++k) {
        d_oracle = std::max(d_oracle, (sol.density(oracle.centers(k)) -
                                       mmbm::RowVector(oracle.density.row(k)))
                                          .cwiseAbs()
                                          .maxCoeff());
    }

    // closed form vs simulation (KS on the level marginal)
    const mmbm::EmpiricalLaw law = mmbm::simulate_mmbm(model, cfg);
    const double d_sim = mmbm::ks_distance(law, [&](double x) { return sol.cdf(x).sum(); });

    // discretization vs simulation
    std::vector<double> ocdf(oracle.n + 1, 0.0);
    for (int k = 0; k < oracle.n; ++k) {
        ocdf[k + 1] = ocdf[k] + oracle.density.row(k).sum() * oracle.h;
    }
    const double d_oracle_sim = mmbm::ks_distance(law, [&](double x) {
        const double pos = std::clamp(x / oracle.h, 0.0, static_cast<double>(oracle.n));
        const int k = static_cast<int>(pos);
        if (k >= oracle.n) return ocdf[oracle.n];
        return ocdf[k] + (pos - k) * (ocdf[k + 1] - ocdf[k]);
    });

    const double tol_reversed = 1e-6, tol_oracle = 1e-4, tol_sim = 0.02,
                 tol_oracle_sim = 0.02;
    ordered_json checks = ordered_json::array();
    auto add_check = [&](const std::string& name, double value, double tol) {
        checks.push_back(
            {{"name", name}, {"value", value}, {"tolerance", tol}, {"pass", value <= tol}});
    };
    add_check("closed_vs_time_reversed", d_reversed, tol_reversed);
    add_check("closed_vs_discretization", d_oracle, tol_oracle);
    add_check("closed_vs_simulation_ks", d_sim, tol_sim);
    add_check("discretization_vs_simulation_ks", d_oracle_sim, tol_oracle_sim);

    ordered_json report;
    report["checks"] = checks;
    bool all = true;
    for (const auto& c : checks) all = all && c.at("pass").get<bool>();
    report["all_pass"] = all;
    mmbm::write_text_file(ctx.path("report.json"), report.dump(2) + "\n");
    ctx.wrote("report.json");
    std::cout << report.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stationary distributions of two-sided reflected MMBM and "
                 "finite-buffer Markov-modulated fluid queues"};
    app.require_subcommand(1);

    std::string model_path, out_dir = ".", mode = "mmbm", eps_list_text;
    int grid = 1000;
    double eps = 0.0;
    bool check_alt = false;
    mmbm::SimConfig cfg;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("model", model_path, "model JSON file")->required();
        cmd->add_option("--out-dir", out_dir, "output directory");
    };

    CLI::App* solve = app.add_subcommand("solve", "closed-form MMBM stationary density");
    add_common(solve);
    solve->add_option("--grid", grid, "number of density rows");

    CLI::App* fluid = app.add_subcommand("fluid", "finite-buffer fluid solution at eps");
    add_common(fluid);
    fluid->add_option("--eps", eps, "fluid approximation parameter")->required();
    fluid->add_option("--grid", grid, "number of density rows");
    fluid->add_flag("--check-alt", check_alt, "cross-check the two representations");

    CLI::App* sweep = app.add_subcommand("sweep", "convergence sweep over eps");
    add_common(sweep);
    sweep->add_option("--eps-list", eps_list_text, "comma-separated eps values")->required();

    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo oracle");
    add_common(simulate);
    simulate->add_option("--mode", mode, "fluid or mmbm");
    simulate->add_option("--eps", eps, "fluid parameter (mode fluid)");
    simulate->add_option("--seed", cfg.seed, "RNG seed");
    simulate->add_option("--horizon", cfg.horizon, "simulated time");
    simulate->add_option("--burn-in", cfg.burn_in, "discarded prefix");
    simulate->add_option("--step", cfg.step, "Euler step (mmbm)");
    simulate->add_option("--grid", cfg.grid, "histogram bins");

    CLI::App* compare = app.add_subcommand("compare", "closed form vs oracles");
    add_common(compare);
    compare->add_option("--seed", cfg.seed, "RNG seed");
    compare->add_option("--horizon", cfg.horizon, "simulated time");
    compare->add_option("--step", cfg.step, "Euler step");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        nlohmann::ordered_json err;
        err["error"] = "BadInput";
        err["message"] = e.what();
        std::cerr << err.dump() << "\n";
        return 2;
    }

    RunContext ctx;
    ctx.model_path = model_path;
    ctx.out_dir = out_dir;

    try {
        if (grid < 1) {
            throw mmbm::SolverError(mmbm::ErrorCode::BadInput, "--grid must be positive");
        }
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        const mmbm::MmbmModel model = mmbm::load_model_json(model_path);

        int rc = 0;
        if (solve->parsed()) {
            ctx.command = "solve";
            ctx.parameters = {{"grid", grid}};
            rc = run_solve(ctx, model, grid);
        } else if (fluid->parsed()) {
            ctx.command = "fluid";
            ctx.parameters = {{"eps", eps}, {"grid", grid}, {"check_alt", check_alt}};
            rc = run_fluid(ctx, model, eps, grid, check_alt);
        } else if (sweep->parsed()) {
            ctx.command = "sweep";
            ctx.parameters = {{"eps_list", eps_list_text}};
            rc = run_sweep(ctx, model, parse_eps_list(eps_list_text));
        } else if (simulate->parsed()) {
            ctx.command = "simulate";
            ctx.parameters = {{"mode", mode},     {"eps", eps},
                              {"seed", cfg.seed}, {"horizon", cfg.horizon},
                              {"burn_in", cfg.burn_in}, {"step", cfg.step},
                              {"grid", cfg.grid}};
            rc = run_simulate(ctx, model, mode, eps, cfg);
        } else if (compare->parsed()) {
            ctx.command = "compare";
            ctx.parameters = {{"seed", cfg.seed}, {"horizon", cfg.horizon}, {"step", cfg.step}};
            rc = run_compare(ctx, model, cfg);
        }
        ctx.write_manifest();
        return rc;
    } catch (const mmbm::SolverError& e) {
        nlohmann::ordered_json err;
        err["error"] = mmbm::error_code_name(e.code());
        err["message"] = e.what();
        std::cerr << err.dump() << "\n";
        return mmbm::is_input_error(e.code()) ? 2 : 3;
    } catch (const std::exception& e) {
        nlohmann::ordered_json err;
        err["error"] = "Internal";
        err["message"] = e.what();
        std::cerr << err.dump() << "\n";
        return 3;
    }
}
