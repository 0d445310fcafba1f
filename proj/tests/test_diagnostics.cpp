#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "constraints/coupled.hpp"
#include "constraints/diagnostics.hpp"
#include "constraints/presets.hpp"
#include "helpers.hpp"

using namespace constraints;
using namespace testutil;

TEST_CASE("reconstruct_initial_data") {
    Grid g(3, 8);

    SECTION("identity data") {
        ConformalSeed seed = preset_constant(g, 0.2);
        seed.tau = ScalarField(g, 0.0);  // only reconstruction is exercised
        InitialData data = reconstruct_initial_data(ScalarField(g, 1.0), VectorField(g), seed);
        for (int i = 0; i < 3; ++i)
            for (int j = i; j < 3; ++j) {
                ScalarField want(g, i == j ? 1.0 : 0.0);
                CHECK(max_abs_diff(data.ghat(i, j), want) < 1e-14);
                CHECK(max_abs_diff(data.khat(i, j), seed.sigma(i, j)) < 1e-14);
            }
    }

    SECTION("trace of khat recovers tau; the deviator is ghat-trace-free") {
        std::mt19937_64 rng(11);
        ConformalSeed seed = preset_parity_smooth(g, 0.1);
        ScalarField phi = spectral::random_band_limited(g, 2, rng);
        phi = map(phi, [](double x) { return 1.0 + 0.3 * std::tanh(x); });
        VectorField w(g);
        for (int a = 0; a < 3; ++a) w[a] = spectral::random_band_limited(g, 2, rng);

        InitialData data = reconstruct_initial_data(phi, w, seed);
        // tr_ghat khat = ghat^{ij} khat_ij with ghat^{ij} = phi^{2-N} delta
        ScalarField tr(g);
        for (std::size_t k = 0; k < tr.size(); ++k) {
            double s = 0.0;
            for (int i = 0; i < 3; ++i) s += data.khat(i, i)[k];
            tr[k] = s / data.ghat(0, 0)[k];
        }
        CHECK(max_abs_diff(tr, seed.tau) < 1e-12);

        // khat - (tau/n) ghat should be ghat-trace-free
        ScalarField dev_trace(g);
        for (std::size_t k = 0; k < tr.size(); ++k) {
            double s = 0.0;
            for (int i = 0; i < 3; ++i)
                s += data.khat(i, i)[k] - seed.tau[k] / 3.0 * data.ghat(i, i)[k];
            dev_trace[k] = s / data.ghat(0, 0)[k];
        }
        CHECK(linf_norm(dev_trace) < 1e-12);
    }

    SECTION("positivity is enforced") {
        ConformalSeed seed = preset_constant(g, 0.2);
        CHECK_THROWS_AS(reconstruct_initial_data(ScalarField(g, 0.0), VectorField(g), seed),
                        PositivityLoss);
    }
}

TEST_CASE("constraint residuals") {
    Grid g(3, 8);
    const double s0 = 0.2;
    ConformalSeed seed = preset_constant(g, s0);
    const double phi_c = std::pow(1.5 * s0 * s0, 1.0 / 12.0);
    ScalarField phi(g, phi_c);
    VectorField w(g);

    SECTION("exact constant solution") {
        ConstraintResiduals res = constraint_residuals(phi, w, seed);
        CHECK(res.hamiltonian_norm < 1e-10);
        CHECK(res.momentum_norm < 1e-10);
        CHECK(res.conformal_form);
    }

    SECTION("one percent perturbation is visible") {
        ConstraintResiduals res = constraint_residuals(1.01 * phi, w, seed);
        CHECK(res.hamiltonian_norm > 1e-4);
    }

    SECTION("kernel shifts of W do not move the momentum residual") {
        ConstraintResiduals base = constraint_residuals(phi, w, seed);
        VectorField shifted = w;
        shifted[0] += 3.7;
        shifted[2] += -1.2;
        ConstraintResiduals moved = constraint_residuals(phi, shifted, seed);
        CHECK(std::fabs(base.momentum_norm - moved.momentum_norm) < 1e-13);
    }

    SECTION("hamiltonian agrees with the reconstructed-data algebra") {
        // Independent route: Scal_ghat + (tr khat)^2 - |khat|^2 with all
        // traces and contractions taken with ghat explicitly.
        std::mt19937_64 rng(13);
        ConformalSeed ps = preset_parity_smooth(g, 0.1);
        ScalarField phi2 = spectral::random_band_limited(g, 2, rng);
        phi2 = map(phi2, [](double x) { return 1.0 + 0.2 * std::tanh(x); });
        VectorField w2(g);
        for (int a = 0; a < 3; ++a) w2[a] = spectral::random_band_limited(g, 2, rng);

        InitialData data = reconstruct_initial_data(phi2, w2, ps);
        const double N = critical_exponent(3);
        ScalarField scal_ghat = laplacian(phi2);
        scal_ghat *= -conformal_coefficient(3);
        for (std::size_t k = 0; k < scal_ghat.size(); ++k)
            scal_ghat[k] *= std::pow(phi2[k], 1.0 - N);

        ScalarField ham(g);
        for (std::size_t k = 0; k < ham.size(); ++k) {
            const double ginv = 1.0 / data.ghat(0, 0)[k];  // conformally flat
            double tr = 0.0;
            double k2 = 0.0;
            for (int i = 0; i < 3; ++i) {
                tr += ginv * data.khat(i, i)[k];
                for (int j = 0; j < 3; ++j)
                    k2 += ginv * ginv * data.khat(i, j)[k] * data.khat(i, j)[k];
            }
            ham[k] = scal_ghat[k] + tr * tr - k2;
        }
        ConstraintResiduals res = constraint_residuals(phi2, w2, ps);
        CHECK(rel_err(l2_norm(ham), res.hamiltonian_norm) < 1e-10);

        // and the momentum residual is the vector row of the system
        SystemResidual sys = system_residual(phi2, w2, ps);
        CHECK(rel_err(l2_norm(sys.vector), res.momentum_norm) < 1e-12);
    }
}

TEST_CASE("energy identity residual") {
    Grid g(3, 8);
    const double s0 = 0.2;
    ConformalSeed seed = preset_constant(g, s0);
    ScalarField phi(g, std::pow(1.5 * s0 * s0, 1.0 / 12.0));

    SECTION("closes at the constant solution") {
        CHECK(std::fabs(energy_identity_residual(phi, VectorField(g), seed)) < 1e-14);
    }

    SECTION("converged iterate stays within the solver allowance") {
        Grid g2(3, 8);
        ConformalSeed ps = preset_parity_smooth(g2, 0.03);
        CoupledOptions opts;
        opts.probe_count = 8;
        opts.sobolev_trials = 32;
        FixedPointResult fp = run_fixed_point(ps, opts);
        const double margin = energy_identity_residual(fp.phi, fp.W, ps);
        CHECK(std::fabs(margin) < 1e-9);
    }

    SECTION("generic non-solutions violate it") {
        ScalarField wrong = phi + 0.3;
        CHECK(std::fabs(energy_identity_residual(wrong, VectorField(g), seed)) > 1e-3);
    }
}

TEST_CASE("pointwise inequality margins") {
    SECTION("hand values") {
        // x = 1: equality.  x = 0, alpha = 1.5: lhs 1, rhs 2.5.
        const double alpha = 1.5;
        CHECK(std::fabs((alpha * 0.0 + 0.0) - 0.0) == 0.0);
        const double lhs = std::fabs(std::pow(0.0, alpha) - 1.0);
        const double rhs = alpha * 1.0 + 1.0;
        CHECK(lhs == 1.0);
        CHECK(rhs == 2.5);
    }

    SECTION("large random sweep stays nonnegative") {
        InequalityMargins m = check_pointwise_inequality(100000);
        CHECK(m.min_margin >= 0.0);
        CHECK(m.samples == 200000);
    }
}

TEST_CASE("moment lemma margins") {
    Grid g(3, 8);

    SECTION("constant f gives zero margin") {
        ScalarField tau = cos_axis(g, 0) + 1.2;
        const double margin = check_moment_lemma(ScalarField(g, 2.4), tau, 1.5, 4.0);
        CHECK(std::fabs(margin) < 1e-12);
    }

    SECTION("printed example field") {
        ScalarField f = 0.3 * sin_axis(g, 0) + 1.0;
        const double margin = check_moment_lemma(f, ScalarField(g, 1.0), 1.5, 4.0);
        CHECK(margin >= 0.0);
    }

    SECTION("random positive fields, textbook exponents") {
        std::mt19937_64 rng(17);
        ScalarField tau = cos_axis(g, 1) + 1.4;
        const double alpha = 3.0 / 2.0;  // n/(n-1)
        const double beta = 4.0;         // N/2 + 1
        for (int trial = 0; trial < 200; ++trial) {
            ScalarField f = spectral::random_band_limited(g, 2, rng);
            f = map(f, [](double x) { return 0.5 + 1.5 / (1.0 + x * x); });
            CHECK(check_moment_lemma(f, tau, alpha, beta) >= -1e-12);
        }
    }

    SECTION("rejects bad arguments") {
        ScalarField tau(g, 1.0);
        CHECK_THROWS_AS(check_moment_lemma(ScalarField(g, -1.0), tau, 1.5, 4.0),
                        std::invalid_argument);
        CHECK_THROWS_AS(check_moment_lemma(ScalarField(g, 1.0), tau, 2.5, 4.0),
                        std::invalid_argument);
        CHECK_THROWS_AS(check_moment_lemma(ScalarField(g, 1.0), tau, 1.5, 0.5),
                        std::invalid_argument);
    }
}

TEST_CASE("Sobolev constant estimate") {
    Grid g(3, 8);
    ScalarField one(g, 1.0);

    SECTION("single-mode ratio from closed-form norms") {
        // f = sin(2 pi x1), tau == 1: ratio = ||sin||^2_{L^6} / (4 pi^2 ||cos||^2_{L^2})
        ScalarField f = sin_axis(g, 0);
        VectorField df = gradient(f);
        const double mean = tau_expectation(f, one);
        const double num = lp_norm(f - mean, 6.0);
        const double ratio = num * num / integrate_dot(df, df);
        const double want = std::pow(5.0 / 16.0, 1.0 / 3.0) / (4.0 * M_PI * M_PI * 0.5);
        CHECK(rel_err(ratio, want) < 1e-12);
    }

    SECTION("estimate dominates the single-mode ratio and is stable") {
        ScalarField tau = cos_axis(g, 0) + 1.3;
        const double s1 = estimate_sobolev_constant(tau, 256, 1001);
        const double s2 = estimate_sobolev_constant(tau, 256, 2002);
        CHECK(s1 > 0.0);
        CHECK(std::fabs(s1 - s2) <= 0.2 * std::max(s1, s2));
    }

    SECTION("degenerate tau") {
        CHECK_THROWS_AS(estimate_sobolev_constant(ScalarField(g, 0.0), 8), DegenerateData);
    }
}
