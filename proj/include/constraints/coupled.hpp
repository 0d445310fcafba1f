// The small-TT fixed point: the map Psi (vector solve, Lichnerowicz
// solve, tau-weighted split of phi^N), the admissible set C0, the
// stability constants that make C0 invariant for small ||sigma||_L2,
// and the bootstrap exponent arithmetic.

#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "constraints/diagnostics.hpp"
#include "constraints/expectation.hpp"
#include "constraints/lichnerowicz.hpp"
#include "constraints/parallel.hpp"
#include "constraints/seed.hpp"

namespace constraints {

struct CoupledOptions {
    double fixpoint_tol = 1e-11;  // L^{p0-proxy} distance between iterates
    int max_iterations = 200;
    LichnerowiczOptions lichnerowicz{};
    LinearSolveOptions linear{};
    int probe_count = 64;        // random probes for the Lambda' estimate
    int sobolev_trials = 256;
    double safety_factor = 2.0;  // multiplies empirical operator norms
    double stability_margin = 0.25;  // slack when solving the stability system
    std::uint64_t rng_seed = 7777;
};

// Membership is exactly: u >= 0, E_tau[u] <= c_max,
// ||u - E_tau[u]||_{L^{N/2+1}} <= r.
struct AdmissibleSet {
    double c_max = 0.0;
    double r = 0.0;

    bool contains(const ScalarField& u, const ScalarField& tau) const {
        if (min_value(u) < 0.0) return false;
        TauDecomposition d = decompose(u, tau);
        const double N = critical_exponent(u.grid().dim);
        return d.c <= c_max * (1.0 + 1e-12) &&
               lp_norm(d.psi, N / 2.0 + 1.0) <= r * (1.0 + 1e-12);
    }
};

// The exponent t0 = 2n(n-1)/(3n-2) below which the bootstrap stalls.
inline double bootstrap_threshold(int n) {
    return 2.0 * n * (n - 1.0) / (3.0 * n - 2.0);
}

// 1/p0 = 2/p - 1/t; +inf when the right hand side is <= 0.
inline double lebesgue_p0(double p, double t) {
    const double inv = 2.0 / p - 1.0 / t;
    return inv > 0.0 ? 1.0 / inv : std::numeric_limits<double>::infinity();
}

inline double clamp_p0(double p0) { return std::min(std::max(p0, 2.0), 64.0); }

struct StabilityReport {
    double x = 0.0;             // ||sigma||_L2
    double A0 = 0.0;            // sqrt((n-1)/n int tau^2)
    double A1 = 0.0;            // ||L Wbar/(2 eta)||_L2
    double lambda_prime = 0.0;  // empirical operator-norm estimate
    double lambda_pp = 0.0;     // Lambda'' = Lambda' ||grad tau||_{t0}
    double grad_tau_t0 = 0.0;
    double sobolev = 0.0;       // empirical s
    double c1 = 0.0;
    double c2 = 0.0;
    double a0 = 0.0;            // 1/(A0 - A1)
    double b0 = 0.0;            // c2 (1 + a0 A1)^{n/(n-1)}
    double a = 0.0;             // solved coefficients, c_max = a x
    double b = 0.0;             // r = b x^{n/(n-1)}
    double c_max = 0.0;
    double r = 0.0;
    double p0 = 0.0;            // raw 1/p0 = 2/p - 1/t (inf allowed)
    double p0_clamped = 2.0;    // quadrature proxy exponent in [2, 64]
    double t0 = 0.0;
    bool feasible = false;
    std::string reason;         // set when infeasible

    AdmissibleSet admissible() const { return AdmissibleSet{c_max, r}; }

    // f(x, c_max, r) = x^2 + 2 c_max x A1 + c_max^2 A1^2
    //                  + Lambda'' r (2x + 2 c_max A1 + Lambda'' r),
    // which collapses to (x + c_max A1 + Lambda'' r)^2.
    double f_bound(double x_, double cmax_, double r_) const {
        const double s = x_ + cmax_ * A1 + lambda_pp * r_;
        return s * s;
    }
};

namespace detail {

inline double psi_deviation_bound(const StabilityReport& rep, int n, double cmax_, double f_val) {
    return rep.c1 * std::pow(cmax_, 1.0 / n) * std::sqrt(f_val) +
           rep.c2 * std::pow(f_val, n / (2.0 * (n - 1.0)));
}

}  // namespace detail

inline StabilityReport stability_params(const ConformalSeed& seed,
                                        const CoupledOptions& opts = {}) {
    seed.validate();
    if (linf_norm(seed.tau) == 0.0) throw DegenerateData("stability_params: tau == 0");
    const Grid& g = seed.grid();
    const int n = g.dim;
    const double N = critical_exponent(n);
    const double beta = (n - 1.0) / n;
    const double alpha = n / (n - 1.0);
    const double gamma = 2.0 * (n - 1.0) / n;

    StabilityReport rep;
    rep.t0 = bootstrap_threshold(n);
    rep.p0 = lebesgue_p0(seed.p, seed.t);
    rep.p0_clamped = clamp_p0(rep.p0);
    rep.x = l2_norm(seed.sigma);
    ScalarField tau2 = multiply(seed.tau, seed.tau);
    rep.A0 = std::sqrt(beta * integrate(tau2));

    VectorField grad_tau = gradient(seed.tau);
    ScalarField grad_tau_mag = magnitude(grad_tau);
    rep.grad_tau_t0 = lp_norm(grad_tau_mag, rep.t0);
    ScalarField half_inv_eta = map(seed.eta, [](double e) { return 0.5 / e; });

    if (rep.grad_tau_t0 > 0.0) {
        VectorField xi = grad_tau;
        xi *= beta;
        VectorSolveResult wbar = solve_vector(xi, seed.eta, opts.linear);
        rep.A1 = l2_norm(scale(conformal_killing(wbar.W), half_inv_eta));

        // Lambda': empirical maximum of
        //   ||L W_psi/(2 eta)|| / (||psi||_{N/2+1} ||grad tau||_{t0})
        // over random zero-E_tau probes, times the safety factor.
        const int band = std::min(3, g.points / 2 - 1);
        std::mt19937_64 rng(opts.rng_seed);
        std::vector<ScalarField> probes;
        probes.reserve(opts.probe_count);
        for (int i = 0; i < opts.probe_count; ++i)
            probes.push_back(spectral::random_band_limited(g, band, rng, false, true));
        std::vector<double> ratios(opts.probe_count, 0.0);
        LinearSolveOptions probe_opts = opts.linear;
        probe_opts.tol = std::max(probe_opts.tol, 1e-9);  // ratios need ~3 digits
        parallel_for(opts.probe_count, [&](int i) {
            ScalarField psi = probes[i];
            psi += -tau_expectation(psi, seed.tau);
            const double psi_norm = lp_norm(psi, N / 2.0 + 1.0);
            if (psi_norm <= 1e-14) return;
            VectorField rhs(g);
            for (int a = 0; a < g.dim; ++a) rhs[a] = beta * multiply(psi, grad_tau[a]);
            VectorSolveResult wp = solve_vector(rhs, seed.eta, probe_opts);
            const double num = l2_norm(scale(conformal_killing(wp.W), half_inv_eta));
            ratios[i] = num / (psi_norm * rep.grad_tau_t0);
        });
        double best = 0.0;
        for (double r : ratios) best = std::max(best, r);
        rep.lambda_prime = opts.safety_factor * best;
        rep.lambda_pp = rep.lambda_prime * rep.grad_tau_t0;
    }

    rep.sobolev = estimate_sobolev_constant(seed.tau, opts.sobolev_trials, opts.rng_seed + 1);
    const double s_prime = rep.sobolev * (n - 1.0) / (3.0 * n - 2.0);
    const double tau_ratio = lp_norm(seed.tau, 2.0 * gamma) / lp_norm(seed.tau, 2.0);
    rep.c1 = alpha * (1.0 + std::pow(tau_ratio, 2.0 / alpha)) * std::sqrt(s_prime);
    rep.c2 = (1.0 + tau_ratio * tau_ratio) * std::pow(s_prime, n / (2.0 * (n - 1.0)));

    if (rep.A0 <= rep.A1) {
        rep.feasible = false;
        rep.reason = "A0 <= A1: the integral condition on tau fails";
        return rep;
    }
    rep.a0 = 1.0 / (rep.A0 - rep.A1);
    rep.b0 = rep.c2 * std::pow(1.0 + rep.a0 * rep.A1, n / (n - 1.0));

    if (rep.x == 0.0) {
        rep.feasible = false;
        rep.reason = "sigma == 0 is excluded";
        return rep;
    }

    // Solve the stability system near (a0, b0) by a damped fixed point
    // with a multiplicative margin, then verify both inequalities.
    const double mu = opts.stability_margin;
    const double x = rep.x;
    const double x_pow = std::pow(x, n / (n - 1.0));
    double a = rep.a0, b = rep.b0;
    bool converged = false;
    for (int it = 0; it < 500; ++it) {
        const double F = x * (1.0 + a * rep.A1) + rep.lambda_pp * b * x_pow;
        const double a_next = (1.0 + mu) * (F / x) / rep.A0;
        const double b_next =
            (1.0 + mu) * (rep.c1 * std::pow(a * x, 1.0 / n) * F +
                          rep.c2 * std::pow(F, n / (n - 1.0))) / x_pow;
        if (!std::isfinite(a_next) || !std::isfinite(b_next) || a_next > 1e12 || b_next > 1e12)
            break;
        const double move = std::fabs(a_next - a) / a + std::fabs(b_next - b) / std::max(b, 1e-300);
        a = a_next;
        b = b_next;
        if (move < 1e-12) {
            converged = true;
            break;
        }
    }
    rep.a = a;
    rep.b = b;
    rep.c_max = a * x;
    rep.r = b * x_pow;
    if (!converged) {
        rep.feasible = false;
        rep.reason = "stability fixed point did not settle";
        return rep;
    }
    const double f_val = rep.f_bound(x, rep.c_max, rep.r);
    const bool ok_c = rep.A0 * rep.A0 * rep.c_max * rep.c_max >= f_val;
    const bool ok_r = rep.r >= detail::psi_deviation_bound(rep, n, rep.c_max, f_val);
    rep.feasible = ok_c && ok_r;
    if (!rep.feasible) rep.reason = "solved pair violates the stability inequalities";
    return rep;
}

struct PsiMapResult {
    ScalarField u_next;   // phi^N
    VectorField W;
    TauDecomposition split;  // c' + psi'
    ScalarField phi;
    double obstruction_max = 0.0;
    bool kernel_warning = false;  // obstruction > 1e-8 outside parity mode
    double energy_margin = 0.0;   // integrated energy identity residual
    double energy_scale = 0.0;
    double cross_term = 0.0;      // int tau^2 c' psi'
    double lichnerowicz_residual = 0.0;
    double lichnerowicz_scale = 0.0;
    double rhs_energy = 0.0;      // int |sigma + LW/(2 eta)|^2
};

// One application of the map: solve DeltaL W = ((n-1)/n) u grad tau,
// then the Lichnerowicz equation with A = |sigma + LW/(2 eta)|, then
// split phi^N = c' + psi'.
inline PsiMapResult psi_map(const ScalarField& u, const ConformalSeed& seed,
                            const CoupledOptions& opts = {},
                            const ScalarField* phi_guess = nullptr,
                            const VectorField* w_guess = nullptr) {
    const Grid& g = seed.grid();
    const int n = g.dim;
    const double N = critical_exponent(n);
    const double beta = (n - 1.0) / n;
    if (min_value(u) < 0.0) throw std::invalid_argument("psi_map: u must be nonnegative");
    if (linf_norm(seed.tau) == 0.0) throw DegenerateData("psi_map: tau == 0");

    PsiMapResult out;
    VectorField grad_tau = gradient(seed.tau);
    if (linf_norm(grad_tau) == 0.0 || linf_norm(u) == 0.0) {
        out.W = VectorField(g);  // CMC branch or vanishing source: W = 0
    } else {
        VectorField rhs(g);
        for (int a = 0; a < g.dim; ++a) rhs[a] = beta * multiply(u, grad_tau[a]);
        VectorSolveResult sol = solve_vector(rhs, seed.eta, opts.linear, w_guess);
        out.W = std::move(sol.W);
        for (double o : sol.obstruction)
            out.obstruction_max = std::max(out.obstruction_max, std::fabs(o));
        if (!seed.parity && out.obstruction_max > 1e-8) out.kernel_warning = true;
    }

    SymTensorField b = momentum_tensor(out.W, seed);
    ScalarField a_field = magnitude(b);

    LichnerowiczOptions lopts = opts.lichnerowicz;
    if (phi_guess) lopts.initial_guess = *phi_guess;
    LichnerowiczResult lich = solve_lichnerowicz(seed.tau, a_field, lopts);
    out.lichnerowicz_residual = lich.residual_norm;
    out.lichnerowicz_scale = lich.residual_scale;
    out.phi = std::move(lich.phi);
    out.u_next = pow_field(out.phi, N);
    out.split = decompose(out.u_next, seed.tau);

    // Identity bookkeeping asserted by the driver each iteration.
    ScalarField tau2 = multiply(seed.tau, seed.tau);
    VectorField dhalf = gradient(pow_field(out.phi, N / 2.0 + 1.0));
    const double grad_term = (3.0 * n - 2.0) / (n - 1.0) * integrate_dot(dhalf, dhalf);
    const double tau_term = beta * integrate(multiply(tau2, multiply(out.u_next, out.u_next)));
    out.rhs_energy = integrate(contract(b, b));
    out.energy_margin = grad_term + tau_term - out.rhs_energy;
    out.energy_scale = grad_term + tau_term + out.rhs_energy;
    out.cross_term = out.split.c * integrate(multiply(tau2, out.split.psi));
    return out;
}

struct FixedPointIterationRecord {
    int iteration = 0;
    double diff_norm = 0.0;   // || u_{k+1} - u_k ||_{L^{p0 proxy}}
    double c = 0.0;
    double psi_norm = 0.0;    // L^{N/2+1}
    double obstruction_max = 0.0;
    double energy_margin = 0.0;
    double energy_gate = 0.0;  // allowance the margin was asserted against
    double cross_term = 0.0;
    double cross_scale = 0.0;
    bool in_set = true;
};

struct FixedPointResult {
    ScalarField phi;
    VectorField W;
    ScalarField u;
    TauDecomposition split;
    std::vector<FixedPointIterationRecord> iterations;
    bool converged = false;
    bool kernel_warning = false;
    double p0_proxy = 2.0;
    double final_energy_margin = 0.0;
    double final_cross_term = 0.0;
};

// Picard iteration of Psi from the balanced constant u0 = x/A0.  When a
// feasible stability report is supplied, every iterate is checked
// against C0 and the integrated estimate chain; a violation is a
// falsification event and raises SetEscape.
inline FixedPointResult run_fixed_point(const ConformalSeed& seed, const CoupledOptions& opts = {},
                                        const std::optional<StabilityReport>& stability = {}) {
    seed.validate();
    seed.require_nondegenerate();
    const Grid& g = seed.grid();
    const int n = g.dim;
    const double N = critical_exponent(n);
    const double beta = (n - 1.0) / n;

    const double x = l2_norm(seed.sigma);
    ScalarField tau2 = multiply(seed.tau, seed.tau);
    const double a0_norm = std::sqrt(beta * integrate(tau2));
    FixedPointResult result;
    result.p0_proxy = stability ? stability->p0_clamped : clamp_p0(lebesgue_p0(seed.p, seed.t));

    const bool enforce_set = stability && stability->feasible;
    AdmissibleSet set = enforce_set ? stability->admissible() : AdmissibleSet{};

    ScalarField u(g, x / a0_norm);
    // Start the first Lichnerowicz solve at the balanced constant scale
    // u0^{1/N}; later iterations warm-start from the previous solution.
    ScalarField prev_phi(g, std::pow(x / a0_norm, 1.0 / N));
    VectorField prev_w;
    const ScalarField* phi_guess = &prev_phi;
    const VectorField* w_guess = nullptr;

    for (int it = 0; it < opts.max_iterations; ++it) {
        PsiMapResult step = psi_map(u, seed, opts, phi_guess, w_guess);
        result.kernel_warning = result.kernel_warning || step.kernel_warning;

        FixedPointIterationRecord rec;
        rec.iteration = it;
        rec.diff_norm = lp_norm(step.u_next - u, result.p0_proxy);
        rec.c = step.split.c;
        rec.psi_norm = lp_norm(step.split.psi, N / 2.0 + 1.0);
        rec.obstruction_max = step.obstruction_max;
        rec.energy_margin = step.energy_margin;
        rec.cross_term = step.cross_term;

        // The integrated energy identity must close to solver accuracy
        // (achieved residual paired with the test-function norm, plus a
        // quadrature allowance).
        const double energy_gate =
            100.0 * (step.lichnerowicz_residual *
                         std::max(1.0, lp_norm(pow_field(step.phi, N + 1.0), 2.0)) +
                     1e-13 * step.energy_scale);
        rec.energy_gate = energy_gate;
        if (std::fabs(step.energy_margin) > energy_gate)
            throw SolverError("run_fixed_point: energy identity violated: margin " +
                              std::to_string(step.energy_margin));
        const double cross_scale =
            std::fabs(step.split.c) * integrate(multiply(tau2, map(step.u_next, [](double v) {
                                                             return std::fabs(v);
                                                         }))) + 1e-300;
        rec.cross_scale = cross_scale;
        if (std::fabs(step.cross_term) > 1e-12 * cross_scale)
            throw SolverError("run_fixed_point: cross-term cancellation violated");

        if (enforce_set) {
            rec.in_set = set.contains(step.u_next, seed.tau);
            const double f_val = stability->f_bound(stability->x, set.c_max, set.r);
            const bool chain_c =
                a0_norm * a0_norm * step.split.c * step.split.c <= f_val * (1.0 + 1e-9);
            const bool chain_psi =
                rec.psi_norm <=
                detail::psi_deviation_bound(*stability, n, set.c_max, f_val) * (1.0 + 1e-9);
            if (!rec.in_set || !chain_c || !chain_psi)
                throw SetEscape("run_fixed_point: iterate left the admissible set at iteration " +
                                std::to_string(it));
        }
        result.iterations.push_back(rec);

        prev_phi = step.phi;
        prev_w = step.W;
        phi_guess = &prev_phi;
        w_guess = &prev_w;
        const bool done = rec.diff_norm <= opts.fixpoint_tol;
        u = std::move(step.u_next);
        result.final_energy_margin = step.energy_margin;
        result.final_cross_term = step.cross_term;
        if (done) {
            result.converged = true;
            result.phi = std::move(step.phi);
            result.W = std::move(step.W);
            result.u = std::move(u);
            result.split = decompose(result.u, seed.tau);
            return result;
        }
    }
    throw NoConvergence("run_fixed_point: no fixed point within the iteration cap");
}

struct BootstrapRow {
    int i = 0;
    double q = 0.0;
    double k = 0.0;
    double c = 0.0;  // 1/c = 1/q + 1/t
    double r = 0.0;  // 1/r = 1/q + 1/t - 1/n  (inf when the rhs is <= 0)
};

struct BootstrapTable {
    double t = 0.0;
    double t0 = 0.0;
    double qbar = 0.0;   // fixed point of the recursion (NaN if none)
    double ratio = 0.0;  // N - 1 - N/t
    double p0 = 0.0;
    bool escaping = false;
    std::optional<int> escape_index;  // first i with q_{i+1} > max(p0, N)
    std::vector<BootstrapRow> rows;

    void require_escaping() const {
        if (!escaping)
            throw NonEscaping("bootstrap: q_i does not diverge for t <= t0");
    }
};

inline BootstrapTable bootstrap_exponents(int n, double p, double t, double q0 = -1.0,
                                          int i_max = 24) {
    if (t <= 1.0) throw std::invalid_argument("bootstrap_exponents: t must be > 1");
    const double N = critical_exponent(n);
    if (q0 <= 0.0) q0 = N / 2.0 + 1.0;

    BootstrapTable table;
    table.t = t;
    table.t0 = bootstrap_threshold(n);
    table.ratio = N - 1.0 - N / t;
    const double denom = (N - 2.0) * t - N;
    table.qbar = denom > 0.0 ? (2.0 / (n - 2.0)) * t / denom
                             : std::numeric_limits<double>::quiet_NaN();
    table.p0 = lebesgue_p0(p, t);
    table.escaping = table.ratio > 1.0 && std::isfinite(table.qbar) && q0 > table.qbar;

    const double threshold = std::max(table.p0, N);
    double q = q0;
    for (int i = 0; i <= i_max && std::isfinite(q) && q < 1e9; ++i) {
        BootstrapRow row;
        row.i = i;
        row.q = q;
        row.k = (N - 1.0) * q - N * (q / t + 1.0);
        row.c = 1.0 / (1.0 / q + 1.0 / t);
        const double inv_r = 1.0 / q + 1.0 / t - 1.0 / n;
        row.r = inv_r > 0.0 ? 1.0 / inv_r : std::numeric_limits<double>::infinity();
        table.rows.push_back(row);
        const double q_next = table.ratio * q - 2.0 / (n - 2.0);
        if (!table.escape_index && q_next > threshold) table.escape_index = i;
        q = q_next;
    }
    return table;
}

}  // namespace constraints
