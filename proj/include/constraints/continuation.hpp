// Lambda-continuation: the rescaled system for (c, psi, Wtilde) with
// sigma = lambda^N sigma_tilde, phi = lambda phi_tilde,
// W = lambda^N Wtilde and phi_tilde = c + lambda^{N-2} psi (phi_0 == 1).
//
//   row 1 (projected):  -kappa Lap psi  =  Pi(rhs)
//   row 2 (scalar):     mean of rhs must vanish (orthogonality to phi_0)
//   row 3 (vector):     DeltaL Wtilde = ((n-1)/n) phi_tilde^N grad tau
// with rhs = -((n-1)/n) tau^2 phi_tilde^{N-1}
//           + |sigma_tilde + L Wtilde/(2 eta)|^2 phi_tilde^{-N-1}.
//
// The lambda = 0 limit decouples: Wbar solves the unit-source vector
// equation, c_0^N is the unique positive root of a quadratic (Descartes
// sign rule), and psi_0 comes from one projected solve.  For lambda > 0
// a predictor/corrector marches the full nonlinear system; the
// corrector eliminates the Newton blocks in the order vector row ->
// scalar row -> projected row, with the scalar pivot proportional to
// the derivative of the quadratic at its root (double roots are the
// genuine degeneracy).

#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "constraints/elliptic.hpp"
#include "constraints/errors.hpp"
#include "constraints/seed.hpp"
#include "constraints/spectral.hpp"

namespace constraints {

struct ScaledState {
    double lambda = 0.0;
    double c = 0.0;
    ScalarField psi;       // zero mean
    VectorField Wtilde;

    ScalarField phi_tilde(int n) const {
        const double N = critical_exponent(n);
        ScalarField f = std::pow(lambda, N - 2.0) * psi;
        f += c;
        return f;
    }
};

struct QuadraticC0 {
    // a2 y^2 - a1 y - a0 = 0 in y = c_0^N
    double a2 = 0.0;  // (n-1)/n int tau^2 - int |L Wbar/(2 eta)|^2
    double a1 = 0.0;  // int <sigma_tilde, L Wbar>/eta
    double a0 = 0.0;  // int |sigma_tilde|^2
    std::vector<double> positive_roots;
    bool unique_positive = false;
    bool two_positive = false;

    static QuadraticC0 analyze(double a2, double a1, double a0) {
        QuadraticC0 q{a2, a1, a0, {}, false, false};
        // Descartes configuration on (a2, -a1, -a0) with a0 > 0: exactly
        // one sign change iff a2 > 0.
        q.unique_positive = a2 > 0.0;
        const double disc = a1 * a1 + 4.0 * a2 * a0;
        if (a2 > 0.0) {
            // cancellation-free branch of (a1 + sqrt(disc))/(2 a2)
            const double s = std::sqrt(disc);
            q.positive_roots.push_back(a1 >= 0.0 ? (a1 + s) / (2.0 * a2)
                                                 : 2.0 * a0 / (s - a1));
        } else if (a2 < 0.0 && a1 < 0.0 && disc > 0.0) {
            const double r1 = (a1 + std::sqrt(disc)) / (2.0 * a2);
            const double r2 = (a1 - std::sqrt(disc)) / (2.0 * a2);
            if (r1 > 0.0 && r2 > 0.0) {
                q.positive_roots = {std::min(r1, r2), std::max(r1, r2)};
                q.two_positive = true;
            }
        } else if (a2 == 0.0 && a1 < 0.0) {
            q.positive_roots.push_back(-a0 / a1);
        }
        return q;
    }
};

struct LimitSystem {
    double c0 = 0.0;
    ScalarField psi0;
    VectorField Wbar;     // DeltaL Wbar = ((n-1)/n) grad tau
    VectorField Wtilde0;  // c_0^N Wbar
    QuadraticC0 quadratic;
};

struct ResidualTriple {
    ScalarField r_psi;   // projected Lichnerowicz row (zero mean)
    double r_ortho = 0.0;
    VectorField r_w;

    double combined_norm() const {
        return std::sqrt(integrate_product(r_psi, r_psi) + r_ortho * r_ortho +
                         integrate_dot(r_w, r_w));
    }
};

struct ContinuationOptions {
    double tol = 1e-10;        // corrector residual target (relative to row scales)
    int max_newton = 30;
    double initial_step = 1e-2;
    double min_step = 1e-10;
    double growth = 1.5;
    LinearSolveOptions linear{};
    std::vector<double> checkpoints;  // lambdas that must be landed on exactly
    bool select_largest_root = false; // under TwoPositiveRoots ambiguity
};

namespace detail {

struct ScaledTerms {
    ScalarField phi_tilde;
    SymTensorField s;    // sigma_tilde + L Wtilde/(2 eta)
    ScalarField q;       // |s|^2
    ScalarField f_lam;   // scalar second-derivative coefficient
    VectorField grad_tau;
};

inline ScaledTerms scaled_terms(const ScaledState& st, const ConformalSeed& seed) {
    const Grid& g = seed.grid();
    const double N = critical_exponent(g.dim);
    ScaledTerms t;
    t.phi_tilde = st.phi_tilde(g.dim);
    if (min_value(t.phi_tilde) <= 0.0)
        throw PositivityLoss("continuation: phi_tilde lost positivity");
    ScalarField half_inv_eta = map(seed.eta, [](double e) { return 0.5 / e; });
    t.s = seed.sigma + scale(conformal_killing(st.Wtilde), half_inv_eta);
    t.q = contract(t.s, t.s);
    const double beta = (g.dim - 1.0) / g.dim;
    t.f_lam = ScalarField(g);
    for (std::size_t i = 0; i < t.f_lam.size(); ++i) {
        const double p = t.phi_tilde[i];
        const double tau = seed.tau[i];
        t.f_lam[i] = beta * (N - 1.0) * tau * tau * std::pow(p, N - 2.0) +
                     (N + 1.0) * t.q[i] * std::pow(p, -N - 2.0);
    }
    t.grad_tau = gradient(seed.tau);
    return t;
}

// l_lambda(V) = -2 phi_tilde^{-N-1} <s, L V/(2 eta)>
inline ScalarField ell_of(const ScaledTerms& t, const ConformalSeed& seed, const VectorField& v) {
    const double N = critical_exponent(seed.grid().dim);
    ScalarField half_inv_eta = map(seed.eta, [](double e) { return 0.5 / e; });
    ScalarField inner = contract(t.s, scale(conformal_killing(v), half_inv_eta));
    ScalarField out(seed.grid());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = -2.0 * std::pow(t.phi_tilde[i], -N - 1.0) * inner[i];
    return out;
}

}  // namespace detail

// Evaluates the three rows of the rescaled system exactly as written.
inline ResidualTriple phi_lambda_residual(const ScaledState& st, const ConformalSeed& seed) {
    const Grid& g = seed.grid();
    const double N = critical_exponent(g.dim);
    const double beta = (g.dim - 1.0) / g.dim;
    detail::ScaledTerms t = detail::scaled_terms(st, seed);

    ScalarField full = laplacian(st.psi);
    full *= -conformal_coefficient(g.dim);
    for (std::size_t i = 0; i < full.size(); ++i) {
        const double p = t.phi_tilde[i];
        const double tau = seed.tau[i];
        full[i] += beta * tau * tau * std::pow(p, N - 1.0) - t.q[i] * std::pow(p, -N - 1.0);
    }
    ResidualTriple r;
    r.r_ortho = integrate(full);
    r.r_psi = full - r.r_ortho;

    r.r_w = vector_laplacian_apply(st.Wtilde, seed.eta);
    ScalarField phi_n = pow_field(t.phi_tilde, N);
    for (int a = 0; a < g.dim; ++a) r.r_w[a] -= beta * multiply(phi_n, t.grad_tau[a]);
    return r;
}

// Full directional derivative of the three rows at a state, including
// the lambda^{N-2} couplings; reduces to the printed block matrix at
// lambda = 0.  Used for finite-difference verification.
inline ResidualTriple phi_lambda_directional(const ScaledState& st, const ConformalSeed& seed,
                                             double dc, const ScalarField& dpsi,
                                             const VectorField& dw) {
    const Grid& g = seed.grid();
    const double N = critical_exponent(g.dim);
    const double beta = (g.dim - 1.0) / g.dim;
    detail::ScaledTerms t = detail::scaled_terms(st, seed);
    const double lam_pow = std::pow(st.lambda, N - 2.0);

    ScalarField dphi = lam_pow * dpsi;
    dphi += dc;

    ScalarField full = laplacian(dpsi);
    full *= -conformal_coefficient(g.dim);
    ScalarField ell = detail::ell_of(t, seed, dw);
    for (std::size_t i = 0; i < full.size(); ++i)
        full[i] += t.f_lam[i] * dphi[i] + ell[i];

    ResidualTriple out;
    out.r_ortho = integrate(full);
    out.r_psi = full - out.r_ortho;

    out.r_w = vector_laplacian_apply(dw, seed.eta);
    ScalarField phi_nm1 = pow_field(t.phi_tilde, N - 1.0);
    for (int a = 0; a < g.dim; ++a)
        out.r_w[a] -= N * beta * multiply(multiply(phi_nm1, dphi), t.grad_tau[a]);
    return out;
}

// DeltaL Wbar = ((n-1)/n) grad tau; the right hand side is an exact
// gradient, so no kernel obstruction arises.
inline VectorField solve_wbar(const ConformalSeed& seed, const LinearSolveOptions& opts = {}) {
    const Grid& g = seed.grid();
    VectorField xi = gradient(seed.tau);
    xi *= (g.dim - 1.0) / g.dim;
    if (linf_norm(xi) == 0.0) return VectorField(g);
    return solve_vector(xi, seed.eta, opts).W;
}

inline QuadraticC0 limit_quadratic(const ConformalSeed& seed, const VectorField& wbar) {
    const Grid& g = seed.grid();
    const double beta = (g.dim - 1.0) / g.dim;
    ScalarField half_inv_eta = map(seed.eta, [](double e) { return 0.5 / e; });
    SymTensorField lw = scale(conformal_killing(wbar), half_inv_eta);
    const double a2 = beta * integrate(multiply(seed.tau, seed.tau)) - integrate(contract(lw, lw));
    const double a1 = 2.0 * integrate(contract(seed.sigma, lw));
    const double a0 = integrate(contract(seed.sigma, seed.sigma));
    return QuadraticC0::analyze(a2, a1, a0);
}

// Solves the lambda = 0 system bottom to top.  Raises ConditionViolated
// when the gating inequality fails without a usable root pair; under the
// two-positive-roots ambiguity both roots are reported and the smallest
// (largest with select_largest_root) is taken.
inline LimitSystem solve_limit_system(const ConformalSeed& seed,
                                      const ContinuationOptions& opts = {}) {
    seed.validate();
    seed.require_nondegenerate();
    const Grid& g = seed.grid();
    const double N = critical_exponent(g.dim);
    const double beta = (g.dim - 1.0) / g.dim;

    LimitSystem out;
    out.Wbar = solve_wbar(seed, opts.linear);
    out.quadratic = limit_quadratic(seed, out.Wbar);
    if (out.quadratic.positive_roots.empty())
        throw ConditionViolated(
            "limit system: (n-1)/n int tau^2 <= int |L Wbar/(2 eta)|^2 and no positive root");
    const double y = opts.select_largest_root ? out.quadratic.positive_roots.back()
                                              : out.quadratic.positive_roots.front();
    out.c0 = std::pow(y, 1.0 / N);
    out.Wtilde0 = y * out.Wbar;

    ScalarField half_inv_eta = map(seed.eta, [](double e) { return 0.5 / e; });
    SymTensorField s = seed.sigma + scale(conformal_killing(out.Wtilde0), half_inv_eta);
    ScalarField q = contract(s, s);
    ScalarField rhs(g);
    for (std::size_t i = 0; i < rhs.size(); ++i) {
        const double tau = seed.tau[i];
        rhs[i] = -beta * tau * tau * std::pow(out.c0, N - 1.0) +
                 q[i] * std::pow(out.c0, -N - 1.0);
    }
    // The root choice makes the mean vanish; the projected solve is the
    // remaining row.
    out.psi0 = solve_scalar_projected(rhs, opts.linear);
    return out;
}

struct NewtonStepInfo {
    double pivot = 0.0;
    double pivot_scale = 0.0;
    double residual_before = 0.0;
    double residual_after = 0.0;
    bool accepted = false;
};

// One damped Newton step via the block elimination: vector row gives
// dW = N dc Wbar_phi + DeltaL^{-1}(-r_w), the scalar row yields dc, the
// projected row then dpsi.  The lambda^{N-2} psi-couplings in rows two
// and three are dropped (exact at lambda = 0); damping absorbs the
// difference for lambda > 0.
inline NewtonStepInfo newton_step(ScaledState& st, const ConformalSeed& seed,
                                  const ContinuationOptions& opts = {}) {
    const Grid& g = seed.grid();
    const double N = critical_exponent(g.dim);
    const double beta = (g.dim - 1.0) / g.dim;

    ResidualTriple res = phi_lambda_residual(st, seed);
    detail::ScaledTerms t = detail::scaled_terms(st, seed);

    NewtonStepInfo info;
    info.residual_before = res.combined_norm();

    // Vector row pieces.
    VectorField xi_c(g);
    ScalarField phi_nm1 = pow_field(t.phi_tilde, N - 1.0);
    for (int a = 0; a < g.dim; ++a) xi_c[a] = N * beta * multiply(phi_nm1, t.grad_tau[a]);
    VectorField wbar_phi(g);
    if (linf_norm(xi_c) > 0.0) wbar_phi = solve_vector(xi_c, seed.eta, opts.linear).W;
    VectorField neg_rw = -1.0 * res.r_w;
    VectorField u = solve_vector(neg_rw, seed.eta, opts.linear).W;

    // Scalar pivot: int F + int l(dW/dc); vanishes exactly at a double
    // root of the limit quadratic.
    const double int_f = integrate(t.f_lam);
    const double int_ell_wbar = integrate(detail::ell_of(t, seed, wbar_phi));
    info.pivot = int_f + int_ell_wbar;
    info.pivot_scale = std::fabs(int_f) + std::fabs(int_ell_wbar);
    if (std::fabs(info.pivot) < 1e-12 * info.pivot_scale)
        throw DoubleRootDegeneracy("newton_step: scalar pivot vanished (double root)");

    const double dc = (-res.r_ortho - integrate(detail::ell_of(t, seed, u))) / info.pivot;
    VectorField dw = u;
    VectorField scaled_wbar = wbar_phi;
    scaled_wbar *= N * dc;
    dw += scaled_wbar;

    ScalarField row1_coupling = detail::ell_of(t, seed, dw);
    for (std::size_t i = 0; i < row1_coupling.size(); ++i)
        row1_coupling[i] += t.f_lam[i] * dc;
    ScalarField rhs_psi = -1.0 * res.r_psi - (row1_coupling - integrate(row1_coupling));
    ScalarField dpsi = solve_scalar_projected(rhs_psi, opts.linear);

    // Damped update with positivity guard.
    double alpha = 1.0;
    for (int halving = 0; halving < 30; ++halving) {
        ScaledState cand = st;
        cand.c += alpha * dc;
        cand.psi += alpha * dpsi;
        VectorField dwa = dw;
        dwa *= alpha;
        cand.Wtilde += dwa;
        if (min_value(cand.phi_tilde(g.dim)) <= 0.0) {
            alpha *= 0.5;
            continue;
        }
        ResidualTriple cand_res = phi_lambda_residual(cand, seed);
        const double cn = cand_res.combined_norm();
        if (cn < info.residual_before) {
            st = std::move(cand);
            info.residual_after = cn;
            info.accepted = true;
            return info;
        }
        alpha *= 0.5;
    }
    info.residual_after = info.residual_before;
    return info;
}

namespace detail {

inline double residual_scale(const ScaledState& st, const ConformalSeed& seed) {
    const Grid& g = seed.grid();
    const double N = critical_exponent(g.dim);
    const double beta = (g.dim - 1.0) / g.dim;
    ScaledTerms t = scaled_terms(st, seed);
    ScalarField t1(g), t2(g);
    for (std::size_t i = 0; i < t1.size(); ++i) {
        const double p = t.phi_tilde[i];
        const double tau = seed.tau[i];
        t1[i] = beta * tau * tau * std::pow(p, N - 1.0);
        t2[i] = t.q[i] * std::pow(p, -N - 1.0);
    }
    return l2_norm(t1) + l2_norm(t2) + 1.0;
}

}  // namespace detail

// Corrector at fixed lambda; returns the Newton step count on success,
// -1 on failure.
inline int continuation_correct(ScaledState& st, const ConformalSeed& seed,
                                const ContinuationOptions& opts) {
    const double scale = detail::residual_scale(st, seed);
    for (int it = 0; it < opts.max_newton; ++it) {
        ResidualTriple res = phi_lambda_residual(st, seed);
        if (res.combined_norm() <= opts.tol * scale) return it;
        NewtonStepInfo info = newton_step(st, seed, opts);
        if (!info.accepted) {
            // Stagnation slightly above target still counts if close.
            return phi_lambda_residual(st, seed).combined_norm() <= 10.0 * opts.tol * scale
                       ? it
                       : -1;
        }
    }
    return phi_lambda_residual(st, seed).combined_norm() <= opts.tol * scale ? opts.max_newton
                                                                             : -1;
}

struct ContinuationRecord {
    double lambda = 0.0;
    double c = 0.0;
    double psi_norm = 0.0;
    double residual = 0.0;
    int newton_steps = 0;
};

struct ContinuationCheckpoint {
    double lambda = 0.0;
    ScalarField phi;   // unscaled: lambda * phi_tilde
    VectorField w;     // unscaled: lambda^N Wtilde
    SymTensorField sigma;  // lambda^N sigma_tilde
    ScaledState state;
};

struct ContinuationResult {
    LimitSystem limit;
    std::vector<ContinuationRecord> path;
    std::vector<ContinuationCheckpoint> checkpoints;
    ScaledState final_state;
    double lambda_reached = 0.0;  // empirical lambda_0
    std::string termination;      // "lambda_max", "positivity", "double-root", "step-underflow"
};

inline ContinuationResult run_continuation(const ConformalSeed& seed, double lambda_max,
                                           const ContinuationOptions& opts = {}) {
    const Grid& g = seed.grid();
    const double N = critical_exponent(g.dim);

    ContinuationResult out;
    out.limit = solve_limit_system(seed, opts);
    ScaledState st;
    st.lambda = 0.0;
    st.c = out.limit.c0;
    st.psi = out.limit.psi0;
    st.Wtilde = out.limit.Wtilde0;
    out.path.push_back({0.0, st.c, l2_norm(st.psi),
                        phi_lambda_residual(st, seed).combined_norm(), 0});

    std::vector<double> marks = opts.checkpoints;
    std::sort(marks.begin(), marks.end());
    auto record_checkpoint = [&](const ScaledState& s) {
        ContinuationCheckpoint cp;
        cp.lambda = s.lambda;
        cp.state = s;
        const double lam_n = std::pow(s.lambda, N);
        cp.phi = s.lambda * s.phi_tilde(g.dim);
        cp.w = lam_n * s.Wtilde;
        cp.sigma = lam_n * seed.sigma;
        out.checkpoints.push_back(std::move(cp));
    };

    double step = opts.initial_step;
    std::size_t next_mark = 0;
    out.termination = "lambda_max";
    while (st.lambda < lambda_max - 1e-15) {
        double target = std::min(st.lambda + step, lambda_max);
        if (next_mark < marks.size()) target = std::min(target, marks[next_mark]);

        ScaledState trial = st;
        trial.lambda = target;
        int steps = -1;
        std::string failure;
        try {
            steps = continuation_correct(trial, seed, opts);
        } catch (const PositivityLoss&) {
            failure = "positivity";
        } catch (const DoubleRootDegeneracy&) {
            failure = "double-root";
        }
        if (steps >= 0) {
            st = std::move(trial);
            out.path.push_back({st.lambda, st.c, l2_norm(st.psi),
                                phi_lambda_residual(st, seed).combined_norm(), steps});
            if (next_mark < marks.size() && st.lambda >= marks[next_mark] - 1e-15) {
                record_checkpoint(st);
                ++next_mark;
            }
            if (steps <= 3) step *= opts.growth;
        } else {
            step *= 0.5;
            if (step < opts.min_step) {
                out.termination = failure.empty() ? "step-underflow" : failure;
                break;
            }
        }
    }
    out.final_state = st;
    out.lambda_reached = st.lambda;
    if (st.lambda > 0.0 &&
        (out.checkpoints.empty() || out.checkpoints.back().lambda < st.lambda))
        record_checkpoint(st);
    return out;
}

}  // namespace constraints
