// Linear elliptic solves on the torus:
//   scalar:  -(4(n-1)/(n-2)) Lap u + m(x) u = f
//   vector:  DeltaL W = xi
// Both use conjugate gradients preconditioned by the exact inverse of
// the constant-coefficient part in Fourier space.  The contract is the
// residual tolerance, not the algorithm.
//
// Kernel policy.  With m == 0 the scalar operator has the constant
// functions as kernel (Scal == 0 on the flat background, phi_0 == 1),
// so the solve is the L^2-projected equation with a zero-mean solution;
// a right hand side whose mean exceeds 1e-10 is rejected.  The vector
// operator always has the translations as kernel: the solver reports
// the kernel component of xi per direction ("obstruction"), removes it,
// and returns the zero-mean representative.

#pragma once

#include <cmath>
#include <string>

#include "constraints/errors.hpp"
#include "constraints/fields.hpp"
#include "constraints/geometry.hpp"
#include "constraints/spectral.hpp"

namespace constraints {

struct LinearSolveOptions {
    double tol = 1e-11;   // relative residual target
    int max_iter = 10000;

    void validate() const {
        if (tol <= 0) throw std::invalid_argument("LinearSolveOptions: tol must be > 0");
        if (max_iter < 1) throw std::invalid_argument("LinearSolveOptions: max_iter >= 1");
    }
};

// Coefficient of the conformal Laplacian.
inline double conformal_coefficient(int n) {
    return 4.0 * (n - 1) / static_cast<double>(n - 2);
}

inline double critical_exponent(int n) { return 2.0 * n / (n - 2.0); }  // N

namespace detail {

inline double inner(const ScalarField& a, const ScalarField& b) { return integrate_product(a, b); }
inline double inner(const VectorField& a, const VectorField& b) { return integrate_dot(a, b); }

template <class Vec, class Apply, class Precond>
Vec pcg(const Vec& b, Apply&& apply, Precond&& precond, const LinearSolveOptions& opts,
        const std::string& what, const Vec* warm_start = nullptr) {
    opts.validate();
    const double nb = std::sqrt(std::max(0.0, inner(b, b)));
    Vec x = 0.0 * b;
    if (nb == 0.0) return x;
    Vec r = b;
    if (warm_start) {
        x = *warm_start;
        r -= apply(x);
    }
    Vec z = precond(r);
    Vec p = z;
    double rz = inner(r, z);
    for (int it = 0; it < opts.max_iter; ++it) {
        Vec q = apply(p);
        const double pq = inner(p, q);
        if (pq <= 0.0) throw NoConvergence(what + ": operator lost positivity (pq <= 0)");
        const double alpha = rz / pq;
        x += alpha * p;
        r -= alpha * q;
        if (std::sqrt(std::max(0.0, inner(r, r))) <= opts.tol * nb) return x;
        z = precond(r);
        const double rz_next = inner(r, z);
        p = z + (rz_next / rz) * p;
        rz = rz_next;
    }
    throw NoConvergence(what + ": iteration cap reached");
}

// Inverse of the constant-coefficient vector symbol
// c0 (|w|^2 I + gamma w w^T) via Sherman-Morrison; annihilates the
// constant mode and Nyquist planes.
inline VectorField vector_symbol_inverse(const VectorField& r, double c0, double gamma) {
    const Grid& g = r.grid();
    std::vector<spectral::Spectrum> spec(g.dim);
    for (int a = 0; a < g.dim; ++a) spec[a] = spectral::analyze(r[a]);

    std::vector<int> idx(g.dim, 0);
    std::vector<double> w(g.dim, 0.0);
    std::size_t flat = 0;
    do {
        double w2 = 0.0;
        for (int a = 0; a < g.dim; ++a) {
            w[a] = spectral::derivative_weight(g, idx[a]);
            w2 += w[a] * w[a];
        }
        if (w2 == 0.0) {
            for (int a = 0; a < g.dim; ++a) spec[a][flat] = 0.0;
        } else {
            std::complex<double> wdot(0.0, 0.0);
            for (int a = 0; a < g.dim; ++a) wdot += w[a] * spec[a][flat];
            const double corr = gamma / (w2 * (1.0 + gamma));
            for (int a = 0; a < g.dim; ++a)
                spec[a][flat] = (spec[a][flat] - corr * w[a] * wdot) / (c0 * w2);
        }
        ++flat;
    } while (advance_multi_index(g, idx));

    VectorField out(g);
    for (int a = 0; a < g.dim; ++a) out[a] = spectral::synthesize(g, spec[a]);
    return out;
}

}  // namespace detail

// Projected scalar solve for the m == 0 case; input mean must vanish to
// 1e-10, the returned solution has zero mean.  Exact (single transform).
inline ScalarField solve_scalar_projected(const ScalarField& f, const LinearSolveOptions& opts = {}) {
    opts.validate();
    const double mean = integrate(f);
    if (std::fabs(mean) > 1e-10)
        throw SolvabilityViolation("solve_scalar: rhs mean " + std::to_string(mean) +
                                   " exceeds the 1e-10 solvability gate");
    return spectral::poisson_zero_mean(f - mean, conformal_coefficient(f.grid().dim));
}

// -(4(n-1)/(n-2)) Lap u + m u = f.  Requires m >= 0; m == 0 switches to
// the projected solve.
inline ScalarField solve_scalar(const ScalarField& m, const ScalarField& f,
                                const LinearSolveOptions& opts = {}) {
    if (!(m.grid() == f.grid())) throw std::invalid_argument("solve_scalar: grid mismatch");
    if (min_value(m) < 0.0)
        throw std::invalid_argument("solve_scalar: coefficient m must be >= 0");
    if (max_value(m) == 0.0) return solve_scalar_projected(f, opts);

    const double kappa = conformal_coefficient(f.grid().dim);
    const double shift = integrate(m);
    auto apply = [&](const ScalarField& u) {
        ScalarField lu = laplacian(u);
        lu *= -kappa;
        return lu + multiply(m, u);
    };
    auto precond = [&](const ScalarField& r) {
        return spectral::helmholtz_inverse(r, kappa, shift);
    };
    return detail::pcg(f, apply, precond, opts, "solve_scalar");
}

struct VectorSolveResult {
    VectorField W;                   // zero-mean representative
    std::vector<double> obstruction; // kernel component of xi per direction
};

// DeltaL W = xi - (kernel part of xi).  When the obstruction vanishes
// this is the vector equation itself.  Corner-mode content of xi
// (frequencies all 0 or Nyquist, invisible to first derivatives) is
// projected out as well; it is rounding-level for resolved data.
inline VectorSolveResult solve_vector(const VectorField& xi, const ScalarField& eta,
                                      const LinearSolveOptions& opts = {},
                                      const VectorField* warm_start = nullptr) {
    require_positive(eta);
    const Grid& g = xi.grid();
    VectorSolveResult result{VectorField(g), std::vector<double>(g.dim, 0.0)};

    VectorField rhs(g);
    for (int a = 0; a < g.dim; ++a) {
        result.obstruction[a] = integrate(xi[a]);
        rhs[a] = spectral::drop_derivative_null_modes(xi[a]);
    }

    const double c0 = integrate(map(eta, [](double e) { return 0.5 / e; }));
    const double gamma = 1.0 - 2.0 / g.dim;
    auto apply = [&](const VectorField& w) {
        VectorField aw = vector_laplacian_apply(w, eta);
        aw *= -1.0;
        return aw;
    };
    auto precond = [&](const VectorField& r) {
        return detail::vector_symbol_inverse(r, c0, gamma);
    };
    rhs *= -1.0;  // pass -xi' so the system matrix -DeltaL is positive definite
    VectorField warm;
    if (warm_start) warm = mean_free(*warm_start);
    result.W = detail::pcg(rhs, apply, precond, opts, "solve_vector",
                           warm_start ? &warm : nullptr);
    return result;
}

}  // namespace constraints
