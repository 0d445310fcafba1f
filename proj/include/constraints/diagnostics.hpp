// Independent verification: reconstruction of the physical initial data
// (ghat, Khat), constraint residuals in conformal form, the integrated
// energy identity, and oracles for the pointwise/moment inequalities
// and the tau-weighted Sobolev constant.

#pragma once

#include <random>
#include <utility>

#include "constraints/expectation.hpp"
#include "constraints/parallel.hpp"
#include "constraints/seed.hpp"
#include "constraints/spectral.hpp"

namespace constraints {

// sigma + L W / (2 eta): the full extrinsic curvature deviator.
inline SymTensorField momentum_tensor(const VectorField& w, const ConformalSeed& seed) {
    ScalarField half_inv_eta = map(seed.eta, [](double e) { return 0.5 / e; });
    return seed.sigma + scale(conformal_killing(w), half_inv_eta);
}

struct InitialData {
    SymTensorField ghat;  // phi^{N-2} delta_ij
    SymTensorField khat;  // (tau/n) ghat + phi^{-2} (sigma + LW/(2 eta))
};

inline InitialData reconstruct_initial_data(const ScalarField& phi, const VectorField& w,
                                            const ConformalSeed& seed) {
    if (min_value(phi) <= 0.0) throw PositivityLoss("reconstruct_initial_data: phi <= 0");
    const Grid& g = phi.grid();
    const double N = critical_exponent(g.dim);

    InitialData data{SymTensorField(g), SymTensorField(g)};
    ScalarField conf = pow_field(phi, N - 2.0);
    for (int i = 0; i < g.dim; ++i) data.ghat(i, i) = conf;

    SymTensorField b = momentum_tensor(w, seed);
    ScalarField inv2 = map(phi, [](double p) { return 1.0 / (p * p); });
    data.khat = scale(b, inv2);
    ScalarField tau_over_n = (1.0 / g.dim) * seed.tau;
    for (int i = 0; i < g.dim; ++i)
        for (int j = i; j < g.dim; ++j)
            if (i == j) data.khat(i, j) += multiply(tau_over_n, data.ghat(i, j));
    return data;
}

struct ConstraintResiduals {
    double hamiltonian_norm = 0.0;
    double momentum_norm = 0.0;
    bool conformal_form = true;
};

// Hamiltonian residual via the conformal transformation of scalar
// curvature, Scal_ghat = phi^{1-N}(-kappa Lap phi); spectrally exact and
// free of Christoffel differencing.  Momentum residual in the conformal
// variables: div(sigma + LW/(2 eta)) - ((n-1)/n) phi^N grad(tau).
inline ConstraintResiduals constraint_residuals(const ScalarField& phi, const VectorField& w,
                                                const ConformalSeed& seed) {
    if (min_value(phi) <= 0.0) throw PositivityLoss("constraint_residuals: phi <= 0");
    const Grid& g = phi.grid();
    const double N = critical_exponent(g.dim);
    const double kappa = conformal_coefficient(g.dim);
    const double beta = (g.dim - 1.0) / g.dim;

    SymTensorField b = momentum_tensor(w, seed);
    ScalarField b2 = contract(b, b);

    ScalarField lich = laplacian(phi);
    lich *= -kappa;
    for (std::size_t i = 0; i < lich.size(); ++i) {
        const double p = phi[i];
        const double t = seed.tau[i];
        lich[i] += beta * t * t * std::pow(p, N - 1.0) - b2[i] * std::pow(p, -N - 1.0);
        lich[i] *= std::pow(p, 1.0 - N);
    }

    VectorField mom = divergence(b);
    VectorField grad_tau = gradient(seed.tau);
    ScalarField phi_n = pow_field(phi, N);
    for (int a = 0; a < g.dim; ++a) mom[a] -= beta * multiply(phi_n, grad_tau[a]);

    return ConstraintResiduals{l2_norm(lich), l2_norm(mom), true};
}

// ((3n-2)/(n-1)) int |d(phi^{N/2+1})|^2 + ((n-1)/n) int tau^2 phi^{2N}
//   - int |sigma + LW/(2 eta)|^2
inline double energy_identity_residual(const ScalarField& phi, const VectorField& w,
                                       const ConformalSeed& seed) {
    if (min_value(phi) <= 0.0) throw PositivityLoss("energy_identity_residual: phi <= 0");
    const Grid& g = phi.grid();
    const int n = g.dim;
    const double N = critical_exponent(n);
    const double beta = (n - 1.0) / n;

    VectorField dhalf = gradient(pow_field(phi, N / 2.0 + 1.0));
    const double grad_term = (3.0 * n - 2.0) / (n - 1.0) * integrate_dot(dhalf, dhalf);
    ScalarField tau2 = multiply(seed.tau, seed.tau);
    const double tau_term = beta * integrate(multiply(tau2, pow_field(phi, 2.0 * N)));
    SymTensorField b = momentum_tensor(w, seed);
    const double rhs = integrate(contract(b, b));
    return grad_term + tau_term - rhs;
}

// Raw residual fields of the unscaled system: the Lichnerowicz row and
// the vector row evaluated as written.
struct SystemResidual {
    ScalarField lichnerowicz;
    VectorField vector;
};

inline SystemResidual system_residual(const ScalarField& phi, const VectorField& w,
                                      const ConformalSeed& seed) {
    const Grid& g = phi.grid();
    const double N = critical_exponent(g.dim);
    const double kappa = conformal_coefficient(g.dim);
    const double beta = (g.dim - 1.0) / g.dim;

    SymTensorField b = momentum_tensor(w, seed);
    ScalarField b2 = contract(b, b);
    ScalarField lich = laplacian(phi);
    lich *= -kappa;
    for (std::size_t i = 0; i < lich.size(); ++i) {
        const double p = phi[i];
        const double t = seed.tau[i];
        lich[i] += beta * t * t * std::pow(p, N - 1.0) - b2[i] * std::pow(p, -N - 1.0);
    }

    ScalarField half_inv_eta = map(seed.eta, [](double e) { return 0.5 / e; });
    VectorField vec = divergence(scale(conformal_killing(w), half_inv_eta));
    VectorField grad_tau = gradient(seed.tau);
    ScalarField phi_n = pow_field(phi, N);
    for (int a = 0; a < g.dim; ++a) vec[a] -= beta * multiply(phi_n, grad_tau[a]);
    return SystemResidual{std::move(lich), std::move(vec)};
}

struct InequalityMargins {
    double min_margin = 0.0;
    std::size_t samples = 0;
};

// |x^alpha - 1| <= alpha |x-1| + |x-1|^alpha for x >= 0, alpha in (1,2),
// plus the homogeneous form |a^alpha - b^alpha| <= alpha b^{alpha-1}|a-b|
// + |a-b|^alpha.  Returns the minimum margin (rhs - lhs) over the sample
// set; it must never go negative.
inline InequalityMargins check_pointwise_inequality(std::size_t samples, std::uint64_t rng_seed = 2024) {
    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> alpha_dist(1.0 + 1e-9, 2.0 - 1e-9);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double min_margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < samples; ++i) {
        const double alpha = alpha_dist(rng);
        // x spans several scales, including 0 and near-1 values
        double x;
        const double mode = unit(rng);
        if (mode < 0.1) x = 0.0;
        else if (mode < 0.5) x = 1.0 + 3.0 * (unit(rng) - 0.5);  // near 1 (can be < 0: clamp)
        else x = std::exp(8.0 * (unit(rng) - 0.5));
        x = std::max(0.0, x);
        const double lhs = std::fabs(std::pow(x, alpha) - 1.0);
        const double rhs = alpha * std::fabs(x - 1.0) + std::pow(std::fabs(x - 1.0), alpha);
        min_margin = std::min(min_margin, rhs - lhs);

        const double b = std::exp(4.0 * (unit(rng) - 0.5));
        const double a = std::exp(4.0 * (unit(rng) - 0.5));
        const double lhs2 = std::fabs(std::pow(a, alpha) - std::pow(b, alpha));
        const double rhs2 = alpha * std::pow(b, alpha - 1.0) * std::fabs(a - b) +
                            std::pow(std::fabs(a - b), alpha);
        min_margin = std::min(min_margin, rhs2 - lhs2);
    }
    return InequalityMargins{min_margin, 2 * samples};
}

// Moment inequality for positive f, beta > 1, alpha in (1,2):
//   ||f^a - E_t[f^a]||_b <= a E_t[f^a]^{(a-1)/a} (1 + R^{2/a}) ||f - E_t[f]||_{ab}
//                           + (1 + R^2) ||f - E_t[f]||_{ab}^a
// with R = ||tau||_{2 gamma} / ||tau||_2 and 1/beta + 1/gamma = 1.
// Returns rhs - lhs with quadrature norms.
inline double check_moment_lemma(const ScalarField& f, const ScalarField& tau, double alpha,
                                 double beta) {
    if (min_value(f) <= 0.0) throw std::invalid_argument("check_moment_lemma: f must be positive");
    if (!(alpha > 1.0 && alpha < 2.0)) throw std::invalid_argument("alpha must be in (1,2)");
    if (!(beta > 1.0)) throw std::invalid_argument("beta must be > 1");
    const double gamma = beta / (beta - 1.0);

    ScalarField fa = pow_field(f, alpha);
    const double efa = tau_expectation(fa, tau);
    const double lhs = lp_norm(fa - efa, beta);

    const double ef = tau_expectation(f, tau);
    const double dev = lp_norm(f - ef, alpha * beta);
    const double ratio = lp_norm(tau, 2.0 * gamma) / lp_norm(tau, 2.0);
    const double rhs = alpha * std::pow(efa, (alpha - 1.0) / alpha) *
                           (1.0 + std::pow(ratio, 2.0 / alpha)) * dev +
                       (1.0 + ratio * ratio) * std::pow(dev, alpha);
    return rhs - lhs;
}

// Empirical surrogate for the constant in
//   ||f - E_tau[f]||_{L^N}^2 <= s ||df||_{L^2}^2 :
// max of the Rayleigh-style ratio over random band-limited probes, times
// a safety factor of two.  A lower bound with margin, not a certificate.
inline double estimate_sobolev_constant(const ScalarField& tau, int trials,
                                        std::uint64_t rng_seed = 515151) {
    if (linf_norm(tau) == 0.0) throw DegenerateData("estimate_sobolev_constant: tau == 0");
    const Grid& g = tau.grid();
    const double N = critical_exponent(g.dim);
    const int band = std::min(3, g.points / 2 - 1);

    // Pre-draw the probes sequentially so the sampling is deterministic,
    // then evaluate ratios in parallel.
    std::mt19937_64 rng(rng_seed);
    std::vector<ScalarField> probes;
    probes.reserve(trials);
    for (int i = 0; i < trials; ++i)
        probes.push_back(spectral::random_band_limited(g, band, rng, false, true));

    std::vector<double> ratios(trials, 0.0);
    parallel_for(trials, [&](int i) {
        const ScalarField& f = probes[i];
        VectorField df = gradient(f);
        const double denom = integrate_dot(df, df);
        if (denom <= 1e-14) return;  // sampler never emits constants, but guard anyway
        const double mean = tau_expectation(f, tau);
        const double num = lp_norm(f - mean, N);
        ratios[i] = num * num / denom;
    });
    double best = 0.0;
    for (double r : ratios) best = std::max(best, r);
    return 2.0 * best;
}

}  // namespace constraints
