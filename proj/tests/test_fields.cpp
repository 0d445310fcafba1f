#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <random>

#include "constraints/fields.hpp"
#include "constraints/io.hpp"
#include "constraints/spectral.hpp"
#include "helpers.hpp"

using namespace constraints;
using namespace testutil;

TEST_CASE("grid basics") {
    Grid g(3, 8);
    CHECK(g.size() == 512);
    CHECK(g.spacing() == 0.125);
    CHECK_THROWS_AS(Grid(2, 8), std::invalid_argument);
    CHECK_THROWS_AS(Grid(3, 7), std::invalid_argument);
    CHECK_THROWS_AS(Grid(3, 2), std::invalid_argument);

    // Discrete measure has total volume exactly one.
    ScalarField one(g, 1.0);
    CHECK(integrate(one) == 1.0);

    // Frequency set is symmetric apart from the unpaired Nyquist mode,
    // whose first-derivative weight is zero.
    std::vector<int> freqs;
    for (int j = 0; j < g.points; ++j) freqs.push_back(g.frequency(j));
    for (int j = 0; j < g.points; ++j) {
        const int k = freqs[j];
        if (g.is_nyquist(j)) {
            CHECK(spectral::derivative_weight(g, j) == 0.0);
        } else {
            CHECK(std::count(freqs.begin(), freqs.end(), -k) == 1);
        }
    }
}

TEST_CASE("gradient oracles") {
    Grid g(3, 8);

    SECTION("constant has zero gradient") {
        VectorField grad = gradient(ScalarField(g, 5.0));
        CHECK(linf_norm(grad) < 1e-13);
    }

    SECTION("sin(2 pi x1) differentiates exactly") {
        VectorField grad = gradient(sin_axis(g, 0));
        ScalarField expected = cos_axis(g, 0);
        expected *= two_pi();
        CHECK(max_abs_diff(grad[0], expected) < 1e-12);
        CHECK(linf_norm(grad[1]) < 1e-13);
        CHECK(linf_norm(grad[2]) < 1e-13);
    }

    SECTION("linearity on random fields") {
        std::mt19937_64 rng(11);
        ScalarField f = spectral::random_band_limited(g, 3, rng);
        ScalarField h = spectral::random_band_limited(g, 3, rng);
        VectorField lhs = gradient(f + h);
        VectorField rhs = gradient(f) + gradient(h);
        for (int a = 0; a < 3; ++a) CHECK(max_abs_diff(lhs[a], rhs[a]) < 1e-12);
    }
}

TEST_CASE("laplacian oracles") {
    Grid g(3, 8);

    SECTION("constant") {
        CHECK(linf_norm(laplacian(ScalarField(g, 2.5))) < 1e-13);
    }

    SECTION("eigenfunction sin(2 pi x1)") {
        ScalarField lap = laplacian(sin_axis(g, 0));
        ScalarField expected = sin_axis(g, 0);
        expected *= -4.0 * M_PI * M_PI;
        CHECK(max_abs_diff(lap, expected) < 1e-11);
    }

    SECTION("zero mean") {
        std::mt19937_64 rng(7);
        ScalarField f = spectral::random_band_limited(g, 3, rng);
        CHECK(std::fabs(integrate(laplacian(f))) < 1e-13);
    }

    SECTION("product rule on a tightened grid") {
        // lap(fg) - f lap g - g lap f = 2 <grad f, grad g>; with band 2
        // data the product is fully resolved once m >= 4*band.
        Grid fine(3, 16);
        std::mt19937_64 rng(19);
        ScalarField f = spectral::random_band_limited(fine, 2, rng);
        ScalarField h = spectral::random_band_limited(fine, 2, rng);
        ScalarField lhs = laplacian(multiply(f, h)) - multiply(f, laplacian(h)) -
                          multiply(h, laplacian(f));
        VectorField gf = gradient(f);
        VectorField gh = gradient(h);
        ScalarField rhs(fine);
        for (int a = 0; a < 3; ++a) rhs += multiply(gf[a], gh[a]);
        rhs *= 2.0;
        CHECK(max_abs_diff(lhs, rhs) < 1e-10);
    }
}

TEST_CASE("integrate oracles") {
    Grid g(3, 8);
    CHECK(integrate(ScalarField(g, 3.0)) == 3.0);
    CHECK(std::fabs(integrate(sin_axis(g, 0))) < 1e-15);
    ScalarField s = sin_axis(g, 0);
    CHECK(rel_err(integrate(multiply(s, s)), 0.5) < 1e-14);
}

TEST_CASE("Parseval consistency") {
    Grid g(3, 8);
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 4; ++trial) {
        ScalarField f = spectral::random_band_limited(g, 3, rng);
        const double a = integrate_product(f, f);
        const double b = spectral::spectral_energy(f);
        CHECK(rel_err(a, b) < 1e-12);
    }
}

TEST_CASE("differentiation-quadrature compatibility") {
    // integrate(f lap g) = integrate(g lap f): the discrete
    // self-adjointness behind the solvability identity.
    Grid g(3, 8);
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 4; ++trial) {
        ScalarField f = spectral::random_band_limited(g, 3, rng);
        ScalarField h = spectral::random_band_limited(g, 3, rng);
        const double a = integrate_product(f, laplacian(h));
        const double b = integrate_product(h, laplacian(f));
        CHECK(std::fabs(a - b) <= 1e-10 * std::max(1.0, std::fabs(a)));
    }
}

TEST_CASE("spectral refinement for analytic data") {
    // For f = exp(sin(2 pi x)) the laplacian error must fall faster than
    // any fixed power of h until it hits rounding.
    auto fn = [](const std::vector<double>& x) { return std::exp(std::sin(2.0 * M_PI * x[0])); };
    auto exact = [](const std::vector<double>& x) {
        const double s = std::sin(2.0 * M_PI * x[0]);
        const double c = std::cos(2.0 * M_PI * x[0]);
        return 4.0 * M_PI * M_PI * std::exp(s) * (c * c - s);
    };
    double prev_err = 0.0;
    std::vector<double> errs;
    for (int m : {8, 16, 32}) {
        Grid g(3, m);
        const double err = max_abs_diff(laplacian(make_scalar(g, fn)), make_scalar(g, exact));
        errs.push_back(err);
        (void)prev_err;
    }
    CHECK(errs[1] < errs[0] * std::pow(0.5, 8));   // far better than 8th order
    CHECK(errs[2] < std::max(errs[1] * std::pow(0.5, 8), 1e-10));
}

TEST_CASE("Lp monotonicity on the unit-volume measure") {
    // ||f||_p <= ||f||_q for p <= q: inherited exactly from the
    // mean-based quadrature.
    Grid g(3, 8);
    std::mt19937_64 rng(37);
    ScalarField f = spectral::random_band_limited(g, 3, rng);
    double prev = 0.0;
    for (double p : {1.0, 1.5, 2.0, 4.0, 7.0, 14.0, 64.0}) {
        const double np = lp_norm(f, p);
        CHECK(np >= prev * (1.0 - 1e-13));
        prev = np;
    }
    CHECK(linf_norm(f) >= prev * (1.0 - 1e-13));
}

TEST_CASE("calculus in four dimensions") {
    Grid g(4, 8);
    CHECK(integrate(ScalarField(g, 1.0)) == 1.0);
    VectorField grad = gradient(sin_axis(g, 3));
    ScalarField expected = cos_axis(g, 3);
    expected *= two_pi();
    CHECK(max_abs_diff(grad[3], expected) < 1e-11);
    CHECK(linf_norm(grad[0]) < 1e-12);
    ScalarField lap = laplacian(sin_axis(g, 1));
    ScalarField want = sin_axis(g, 1);
    want *= -4.0 * M_PI * M_PI;
    CHECK(max_abs_diff(lap, want) < 1e-10);
}

TEST_CASE("CFLD round trip is bitwise") {
    Grid g(3, 4);
    std::mt19937_64 rng(31);
    ScalarField f = spectral::random_band_limited(g, 1, rng);
    const std::string path = std::filesystem::temp_directory_path() / "cfld_test.cfld";
    save_field(path, f);
    ScalarField back = load_scalar(path);
    REQUIRE(back.grid() == g);
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(back[i] == f[i]);

    VectorField v(g);
    for (int a = 0; a < 3; ++a) v[a] = spectral::random_band_limited(g, 1, rng);
    save_field(path, v);
    VectorField vback = load_vector(path);
    for (int a = 0; a < 3; ++a)
        for (std::size_t i = 0; i < f.size(); ++i) CHECK(vback[a][i] == v[a][i]);

    std::remove(path.c_str());
}
