#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "constraints/geometry.hpp"
#include "constraints/seed.hpp"
#include "constraints/spectral.hpp"
#include "helpers.hpp"

using namespace constraints;
using namespace testutil;

namespace {

VectorField random_vector(const Grid& g, int band, std::mt19937_64& rng, bool zero_mean = false) {
    VectorField v(g);
    for (int a = 0; a < g.dim; ++a)
        v[a] = spectral::random_band_limited(g, band, rng, false, zero_mean);
    return v;
}

SymTensorField random_sym(const Grid& g, int band, std::mt19937_64& rng) {
    SymTensorField s(g);
    for (int k = 0; k < s.components(); ++k)
        s.component(k) = spectral::random_band_limited(g, band, rng);
    return s;
}

double tensor_linf(const SymTensorField& s) {
    double m = 0.0;
    for (int k = 0; k < s.components(); ++k) m = std::max(m, linf_norm(s.component(k)));
    return m;
}

}  // namespace

TEST_CASE("conformal Killing operator") {
    Grid g(3, 8);

    SECTION("translations are conformal Killing") {
        VectorField w(g);
        w[0] += 1.3;
        w[1] += -0.4;
        CHECK(tensor_linf(conformal_killing(w)) < 1e-13);
    }

    SECTION("symbolic oracle W = (sin(2 pi x1), 0, 0)") {
        VectorField w(g);
        w[0] = sin_axis(g, 0);
        SymTensorField lw = conformal_killing(w);
        ScalarField c = cos_axis(g, 0);
        ScalarField want11 = (4.0 / 3.0) * two_pi() * c;
        ScalarField want22 = (-2.0 / 3.0) * two_pi() * c;
        CHECK(max_abs_diff(lw(0, 0), want11) < 1e-11);
        CHECK(max_abs_diff(lw(1, 1), want22) < 1e-11);
        CHECK(max_abs_diff(lw(2, 2), want22) < 1e-11);
        CHECK(linf_norm(lw(0, 1)) < 1e-12);
        CHECK(linf_norm(lw(0, 2)) < 1e-12);
        CHECK(linf_norm(lw(1, 2)) < 1e-12);
    }

    SECTION("trace-free by construction") {
        std::mt19937_64 rng(5);
        VectorField w = random_vector(g, 3, rng);
        CHECK(linf_norm(trace(conformal_killing(w))) < 1e-12);
    }

    SECTION("kernel is exactly the constants") {
        std::mt19937_64 rng(6);
        VectorField w(g);
        w[0] += 0.7;
        w[2] += -2.0;
        CHECK(l2_norm(conformal_killing(w)) < 1e-12);
        VectorField r = random_vector(g, 2, rng, true);
        CHECK(l2_norm(conformal_killing(r)) > 1e-3);
    }
}

TEST_CASE("tensor divergence") {
    Grid g(3, 8);

    SECTION("constant tensor") {
        SymTensorField s(g);
        s(0, 1) += 2.0;
        s(2, 2) += -1.0;
        CHECK(linf_norm(divergence(s)) < 1e-13);
    }

    SECTION("symbolic oracle div(LW) for W = (sin(2 pi x1),0,0)") {
        VectorField w(g);
        w[0] = sin_axis(g, 0);
        VectorField d = divergence(conformal_killing(w));
        ScalarField want = sin_axis(g, 0);
        want *= -(4.0 / 3.0) * 4.0 * M_PI * M_PI;
        CHECK(max_abs_diff(d[0], want) < 1e-10);
        CHECK(linf_norm(d[1]) < 1e-11);
        CHECK(linf_norm(d[2]) < 1e-11);
    }

    SECTION("adjoint identity for trace-free S") {
        std::mt19937_64 rng(9);
        for (int trial = 0; trial < 3; ++trial) {
            SymTensorField s = trace_free_part(random_sym(g, 2, rng));
            VectorField w = random_vector(g, 2, rng);
            const double lhs = integrate(contract(s, conformal_killing(w)));
            const double rhs = -2.0 * integrate_dot(divergence(s), w);
            CHECK(std::fabs(lhs - rhs) <= 1e-10 * std::max(1.0, std::fabs(lhs)));
        }
    }
}

TEST_CASE("vector Laplacian") {
    Grid g(3, 8);
    ScalarField half(g, 0.5);

    SECTION("kernel contains constants") {
        VectorField w(g);
        w[1] += 3.0;
        CHECK(linf_norm(vector_laplacian_apply(w, half)) < 1e-13);
    }

    SECTION("symbolic oracle, eta = 1/2") {
        VectorField w(g);
        w[0] = sin_axis(g, 0);
        VectorField got = vector_laplacian_apply(w, half);
        ScalarField want = sin_axis(g, 0);
        want *= -4.0 * M_PI * M_PI * (1.0 + 1.0 / 3.0);
        CHECK(max_abs_diff(got[0], want) < 1e-10);
        CHECK(linf_norm(got[1]) < 1e-11);
    }

    SECTION("quadratic form identity") {
        std::mt19937_64 rng(13);
        for (int trial = 0; trial < 3; ++trial) {
            VectorField w = random_vector(g, 2, rng);
            ScalarField eta = spectral::random_band_limited(g, 2, rng);
            eta = map(eta, [](double x) { return 0.4 + 0.2 / (1.0 + x * x); });
            const double lhs = integrate_dot(vector_laplacian_apply(w, eta), w);
            SymTensorField lw = conformal_killing(w);
            ScalarField weight = map(eta, [](double e) { return 1.0 / (4.0 * e); });
            const double rhs = -integrate(multiply(contract(lw, lw), weight));
            CHECK(std::fabs(lhs - rhs) <= 1e-10 * std::max(1.0, std::fabs(lhs)));
            CHECK(lhs <= 1e-12);
        }
    }

    SECTION("rejects non-positive eta") {
        VectorField w(g);
        CHECK_THROWS_AS(vector_laplacian_apply(w, ScalarField(g, 0.0)), NonPositiveEta);
    }
}

TEST_CASE("TT projection") {
    Grid g(3, 8);
    std::mt19937_64 rng(17);
    ScalarField eta = spectral::random_band_limited(g, 1, rng);
    eta = map(eta, [](double x) { return 0.5 + 0.1 * std::tanh(x); });

    SECTION("already-TT input is a fixed point") {
        SymTensorField tt(g);
        tt(0, 0) += 0.6;
        tt(1, 1) += -0.6;
        tt(0, 1) += 0.25;
        SymTensorField out = tt_project(tt, eta);
        SymTensorField diff = out - tt;
        CHECK(tensor_linf(diff) < 1e-9);
    }

    SECTION("pure longitudinal part maps to zero") {
        VectorField u = random_vector(g, 2, rng);
        ScalarField half_inv_eta = map(eta, [](double e) { return 0.5 / e; });
        SymTensorField lng = scale(conformal_killing(u), half_inv_eta);
        CHECK(tensor_linf(tt_project(lng, eta)) < 1e-8);
    }

    SECTION("random input becomes TT") {
        SymTensorField s = random_sym(g, 2, rng);
        SymTensorField out = tt_project(s, eta);
        CHECK(linf_norm(trace(out)) < 1e-12);
        CHECK(l2_norm(divergence(out)) < 1e-8);

        // idempotent within solver tolerance
        SymTensorField again = tt_project(out, eta);
        CHECK(tensor_linf(again - out) < 1e-8);
    }
}

TEST_CASE("ConformalSeed validation") {
    Grid g(3, 8);
    std::mt19937_64 rng(21);
    ConformalSeed seed;
    seed.tau = ScalarField(g, 1.0);
    seed.eta = ScalarField(g, 0.5);
    SymTensorField raw = random_sym(g, 2, rng);
    seed.sigma = tt_project(raw, seed.eta);
    CHECK_NOTHROW(seed.validate());

    SECTION("rejects non-TT sigma") {
        ConformalSeed bad = seed;
        bad.sigma = raw;
        CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    }
    SECTION("rejects non-positive eta") {
        ConformalSeed bad = seed;
        bad.eta = ScalarField(g, -1.0);
        CHECK_THROWS_AS(bad.validate(), NonPositiveEta);
    }
    SECTION("rejects bad exponents") {
        ConformalSeed bad = seed;
        bad.p = 2.0;
        CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    }
    SECTION("degenerate gate") {
        ConformalSeed zero = seed;
        zero.tau = ScalarField(g, 0.0);
        CHECK_THROWS_AS(zero.require_nondegenerate(), DegenerateData);
    }
}
