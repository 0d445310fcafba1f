// Per-mode drivers behind the CLI.  Each writes its artifacts under
// cfg.out_dir and fills a section of the report.

#pragma once

#include <filesystem>

#include "constraints/config.hpp"
#include "constraints/continuation.hpp"
#include "constraints/coupled.hpp"
#include "constraints/io.hpp"
#include "constraints/presets.hpp"
#include "constraints/report.hpp"

namespace constraints {
namespace detail {

inline std::filesystem::path out_path(const RunConfig& cfg, const std::string& name) {
    return std::filesystem::path(cfg.out_dir) / name;
}

inline ConformalSeed build_seed(const RunConfig& cfg, const Grid& g) {
    ConformalSeed seed;
    if (!cfg.preset.empty()) {
        seed = make_preset(cfg.preset, g);
    } else {
        if (!cfg.tau_expr) throw ConfigError("seed: tau literal required without a preset");
        if (!cfg.eta_expr) throw ConfigError("seed: eta literal required without a preset");
        seed.tau = parse_field_literal(g, *cfg.tau_expr);
        seed.eta = parse_field_literal(g, *cfg.eta_expr);
        if (cfg.sigma_file) {
            seed.sigma = load_sym_tensor(*cfg.sigma_file);
        } else if (cfg.sigma_parallel) {
            seed.sigma = parallel_tt_tensor(
                g, detail::parse_double("sigma_parallel", *cfg.sigma_parallel));
        } else if (!cfg.sigma_components.empty()) {
            SymTensorField raw(g);
            for (const auto& [key, expr] : cfg.sigma_components) {
                // key looks like sigma_01
                const int i = key[6] - '0';
                const int j = key[7] - '0';
                if (i < 0 || j < 0 || i >= g.dim || j >= g.dim)
                    throw ConfigError("seed: bad sigma component " + key);
                raw(i, j) = parse_field_literal(g, expr);
            }
            seed.sigma = tt_project(raw, seed.eta);
        } else {
            seed.sigma = SymTensorField(g);
        }
        seed.parity = cfg.parity;
    }
    // Overrides apply on top of presets too.
    if (!cfg.preset.empty()) {
        if (cfg.tau_expr) seed.tau = parse_field_literal(g, *cfg.tau_expr);
        if (cfg.eta_expr) seed.eta = parse_field_literal(g, *cfg.eta_expr);
        if (cfg.raw.count("seed.parity")) seed.parity = cfg.parity;
    }
    seed.p = cfg.p;
    seed.t = cfg.t;
    if (cfg.sigma_scale) seed.sigma = scale_to_l2(seed.sigma, *cfg.sigma_scale);
    return seed;
}

inline CoupledOptions coupled_options(const RunConfig& cfg) {
    CoupledOptions opts;
    opts.fixpoint_tol = cfg.fixpoint_tol;
    opts.lichnerowicz.tol = cfg.tol;
    opts.lichnerowicz.linear.tol = cfg.tol;
    opts.linear.tol = cfg.tol;
    opts.probe_count = cfg.probe_count;
    opts.sobolev_trials = cfg.sobolev_trials;
    return opts;
}

inline void run_fixed_point_mode(const RunConfig& cfg, Json& report) {
    Grid g(cfg.n, cfg.m);
    ConformalSeed seed = build_seed(cfg, g);
    CoupledOptions opts = coupled_options(cfg);

    StabilityReport stab = stability_params(seed, opts);
    report["stability"] = to_json(stab);
    if (!stab.feasible)
        report["warnings"] = Json::array({"stability infeasible: set invariance not enforced"});

    std::optional<StabilityReport> gate;
    if (stab.feasible) gate = stab;
    FixedPointResult fp = run_fixed_point(seed, opts, gate);

    Json iters = Json::array();
    for (const auto& rec : fp.iterations) iters.push_back(to_json(rec));
    report["iterations"] = iters;
    report["converged"] = fp.converged;
    report["kernel_warning"] = fp.kernel_warning;
    report["c"] = fp.split.c;
    report["psi_norm_l2"] = l2_norm(fp.split.psi);
    report["energy_margin"] = fp.final_energy_margin;
    report["cross_term"] = fp.final_cross_term;

    SymTensorField b = momentum_tensor(fp.W, seed);
    report["solvability_identity"] =
        solvability_identity_residual(fp.phi, seed.tau, magnitude(b));
    report["constraints"] = to_json(constraint_residuals(fp.phi, fp.W, seed));

    save_field(out_path(cfg, "phi.cfld").string(), fp.phi);
    save_field(out_path(cfg, "w.cfld").string(), fp.W);
    save_field(out_path(cfg, "sigma.cfld").string(), seed.sigma);
}

inline void run_continuation_mode(const RunConfig& cfg, Json& report) {
    Grid g(cfg.n, cfg.m);
    ConformalSeed seed = build_seed(cfg, g);  // sigma is sigma_tilde here
    ContinuationOptions opts;
    opts.tol = cfg.continuation_tol;
    opts.linear.tol = cfg.tol;
    opts.checkpoints = cfg.lambda_checkpoints;

    ContinuationResult path = run_continuation(seed, cfg.lambda_max, opts);
    report["limit_system"] = Json{{"c0", path.limit.c0},
                                  {"quadratic", to_json(path.limit.quadratic)}};
    Json records = Json::array();
    for (const auto& rec : path.path) records.push_back(to_json(rec));
    report["path"] = records;
    report["lambda_reached"] = path.lambda_reached;
    report["termination"] = path.termination;

    Json cps = Json::array();
    for (const auto& cp : path.checkpoints) {
        ConformalSeed scaled = seed;
        scaled.sigma = cp.sigma;
        Json entry{{"lambda", cp.lambda},
                   {"c", cp.state.c},
                   {"constraints", to_json(constraint_residuals(cp.phi, cp.w, scaled))}};
        cps.push_back(entry);
    }
    report["checkpoints"] = cps;

    if (!path.checkpoints.empty()) {
        const auto& last = path.checkpoints.back();
        save_field(out_path(cfg, "phi.cfld").string(), last.phi);
        save_field(out_path(cfg, "w.cfld").string(), last.w);
        save_field(out_path(cfg, "sigma.cfld").string(), last.sigma);
    }
}

inline void run_lichnerowicz_mode(const RunConfig& cfg, Json& report) {
    Grid g(cfg.n, cfg.m);
    ConformalSeed seed = build_seed(cfg, g);
    LichnerowiczOptions opts;
    opts.tol = cfg.tol;
    opts.linear.tol = cfg.tol;

    ScalarField a = magnitude(seed.sigma);
    LichnerowiczResult res = solve_lichnerowicz(seed.tau, a, opts);
    report["bracket"] = to_json(res.bracket);
    report["residual_norm"] = res.residual_norm;
    report["residual_scale"] = res.residual_scale;
    report["newton_iterations"] = res.newton_iterations;
    report["used_fallback"] = res.used_fallback;
    report["solvability_identity"] = solvability_identity_residual(res.phi, seed.tau, a);
    report["phi_min"] = min_value(res.phi);
    report["phi_max"] = max_value(res.phi);
    save_field(out_path(cfg, "phi.cfld").string(), res.phi);
}

inline void run_vector_mode(const RunConfig& cfg, Json& report) {
    Grid g(cfg.n, cfg.m);
    ConformalSeed seed = build_seed(cfg, g);
    LinearSolveOptions opts;
    opts.tol = cfg.tol;

    // xi = ((n-1)/n) u grad tau with u == 1 unless a literal is given.
    ScalarField u = cfg.raw.count("seed.u") ? parse_field_literal(g, cfg.raw.at("seed.u"))
                                            : ScalarField(g, 1.0);
    VectorField grad_tau = gradient(seed.tau);
    const double beta = (g.dim - 1.0) / g.dim;
    VectorField xi(g);
    for (int a = 0; a < g.dim; ++a) xi[a] = beta * multiply(u, grad_tau[a]);

    VectorSolveResult res = solve_vector(xi, seed.eta, opts);
    report["obstruction"] = res.obstruction;
    double obs_max = 0.0;
    for (double o : res.obstruction) obs_max = std::max(obs_max, std::fabs(o));
    report["obstruction_max"] = obs_max;
    VectorField projected = xi;
    for (int a = 0; a < g.dim; ++a) projected[a] += -res.obstruction[a];
    VectorField residual = vector_laplacian_apply(res.W, seed.eta) - projected;
    report["residual_norm"] = l2_norm(residual);
    save_field(out_path(cfg, "w.cfld").string(), res.W);
}

inline void run_make_tt_mode(const RunConfig& cfg, Json& report) {
    Grid g(cfg.n, cfg.m);
    if (!cfg.eta_expr) throw ConfigError("make-tt: eta literal required");
    ScalarField eta = parse_field_literal(g, *cfg.eta_expr);
    SymTensorField raw(g);
    if (cfg.sigma_components.empty())
        throw ConfigError("make-tt: provide sigma_ij component literals");
    for (const auto& [key, expr] : cfg.sigma_components) {
        const int i = key[6] - '0';
        const int j = key[7] - '0';
        if (i < 0 || j < 0 || i >= g.dim || j >= g.dim)
            throw ConfigError("make-tt: bad sigma component " + key);
        raw(i, j) = parse_field_literal(g, expr);
    }
    LinearSolveOptions opts;
    opts.tol = cfg.tol;
    SymTensorField sigma = tt_project(raw, eta, opts);
    if (cfg.sigma_scale) sigma = scale_to_l2(sigma, *cfg.sigma_scale);
    report["trace_linf"] = linf_norm(trace(sigma));
    report["divergence_l2"] = l2_norm(divergence(sigma));
    report["sigma_l2"] = l2_norm(sigma);
    save_field(out_path(cfg, "sigma.cfld").string(), sigma);
}

inline void run_check_mode(const RunConfig& cfg, Json& report) {
    Grid g(cfg.n, cfg.m);
    ConformalSeed seed = build_seed(cfg, g);
    if (!cfg.phi_file) throw ConfigError("check: phi_file required");
    ScalarField phi = load_scalar(*cfg.phi_file);
    VectorField w = cfg.w_file ? load_vector(*cfg.w_file) : VectorField(g);
    if (!(phi.grid() == g)) throw ConfigError("check: phi grid mismatch");

    ConstraintResiduals res = constraint_residuals(phi, w, seed);
    const double energy = energy_identity_residual(phi, w, seed);
    SymTensorField b = momentum_tensor(w, seed);
    const double solv = solvability_identity_residual(phi, seed.tau, magnitude(b));

    Json check;
    check["constraints"] = to_json(res);
    check["energy_margin"] = energy;
    check["solvability_identity"] = solv;
    check["threshold"] = cfg.check_tol;
    check["passed"] = res.hamiltonian_norm <= cfg.check_tol &&
                      res.momentum_norm <= cfg.check_tol &&
                      std::fabs(energy) <= cfg.check_tol &&
                      std::fabs(solv) <= cfg.check_tol;
    report["check"] = check;
}

inline void run_stability_mode(const RunConfig& cfg, Json& report) {
    Grid g(cfg.n, cfg.m);
    ConformalSeed seed = build_seed(cfg, g);
    StabilityReport stab = stability_params(seed, coupled_options(cfg));
    report["stability"] = to_json(stab);
}

inline void run_bootstrap_mode(const RunConfig& cfg, Json& report) {
    BootstrapTable table = bootstrap_exponents(cfg.n, cfg.p, cfg.t, cfg.q0, cfg.i_max);
    report["bootstrap"] = to_json(table);
}

inline void dispatch_mode(const RunConfig& cfg, Json& report) {
    if (cfg.mode == "fixed-point") run_fixed_point_mode(cfg, report);
    else if (cfg.mode == "continuation") run_continuation_mode(cfg, report);
    else if (cfg.mode == "lichnerowicz") run_lichnerowicz_mode(cfg, report);
    else if (cfg.mode == "vector") run_vector_mode(cfg, report);
    else if (cfg.mode == "make-tt") run_make_tt_mode(cfg, report);
    else if (cfg.mode == "check") run_check_mode(cfg, report);
    else if (cfg.mode == "stability") run_stability_mode(cfg, report);
    else if (cfg.mode == "bootstrap") run_bootstrap_mode(cfg, report);
    else throw ConfigError("unknown mode: " + cfg.mode);
}

}  // namespace detail
}  // namespace constraints
