// Canned seeds.  All preset fields are closed-form trigonometric
// expressions so that the continuous problem is identical at every
// resolution.
//
//   constant      tau == 1, eta == 1/2, parallel TT sigma with |sigma| = s0;
//                 the whole system reduces to algebra (analytic oracle).
//   parity-smooth even tau and eta, sigma from the TT projection of an
//                 even tensor; the vector-solve obstruction vanishes.
//   cmc           constant tau (grad tau == 0), variable eta, generated
//                 TT sigma; the coupling trivializes.

#pragma once

#include <cmath>
#include <string>

#include "constraints/seed.hpp"

namespace constraints {

// Constant trace-free tensors are automatically TT on the torus.
inline SymTensorField parallel_tt_tensor(const Grid& g, double magnitude_s0) {
    SymTensorField sigma(g);
    const double entry = magnitude_s0 / std::sqrt(2.0);
    sigma(0, 0) += entry;
    sigma(1, 1) += -entry;
    return sigma;
}

inline SymTensorField scale_to_l2(const SymTensorField& s, double target) {
    const double norm = l2_norm(s);
    if (norm == 0.0) throw DegenerateData("scale_to_l2: zero tensor");
    return (target / norm) * s;
}

inline ConformalSeed preset_constant(const Grid& g, double s0 = 0.1) {
    ConformalSeed seed;
    seed.tau = ScalarField(g, 1.0);
    seed.eta = ScalarField(g, 0.5);
    seed.sigma = parallel_tt_tensor(g, s0);
    seed.p = 3.5;
    seed.t = 2.0;
    seed.parity = true;
    return seed;
}

inline ConformalSeed preset_parity_smooth(const Grid& g, double sigma_scale = 0.02,
                                          const LinearSolveOptions& opts = {}) {
    auto cosx = [](int axis, double amp) {
        return [axis, amp](const std::vector<double>& x) {
            return amp * std::cos(2.0 * M_PI * x[axis]);
        };
    };
    ConformalSeed seed;
    seed.tau = sample(g, [](const std::vector<double>& x) {
        return 1.0 + 0.15 * std::cos(2.0 * M_PI * x[0]);
    });
    seed.eta = sample(g, [](const std::vector<double>& x) {
        return 0.5 * (1.0 + 0.1 * std::cos(2.0 * M_PI * x[1]));
    });

    SymTensorField raw(g);
    raw(0, 0) = sample(g, cosx(1, 0.30));
    raw(1, 1) = sample(g, cosx(0, -0.20));
    raw(2, 2) = sample(g, cosx(2, 0.10));
    raw(0, 1) = sample(g, cosx(2, 0.20));
    raw(0, 2) = sample(g, [](const std::vector<double>& x) {
        return 0.15 * std::cos(2.0 * M_PI * x[0]) * std::cos(2.0 * M_PI * x[1]);
    });
    raw(1, 2) = sample(g, cosx(0, 0.10));
    seed.sigma = scale_to_l2(tt_project(raw, seed.eta, opts), sigma_scale);
    seed.p = 3.5;
    seed.t = 2.0;
    seed.parity = true;
    return seed;
}

inline ConformalSeed preset_cmc(const Grid& g, double sigma_scale = 0.05,
                                const LinearSolveOptions& opts = {}) {
    ConformalSeed seed;
    seed.tau = ScalarField(g, 1.0);
    seed.eta = sample(g, [](const std::vector<double>& x) {
        return 0.5 * (1.0 + 0.2 * std::cos(2.0 * M_PI * x[0]));
    });
    SymTensorField raw(g);
    raw(0, 1) = sample(g, [](const std::vector<double>& x) {
        return 0.3 * std::sin(2.0 * M_PI * x[2]);
    });
    raw(0, 0) = sample(g, [](const std::vector<double>& x) {
        return 0.2 * std::cos(2.0 * M_PI * x[1]);
    });
    raw(1, 1) = sample(g, [](const std::vector<double>& x) {
        return -0.2 * std::cos(2.0 * M_PI * x[2]);
    });
    seed.sigma = scale_to_l2(tt_project(raw, seed.eta, opts), sigma_scale);
    seed.p = 3.5;
    seed.t = 2.0;
    seed.parity = false;
    return seed;
}

inline ConformalSeed make_preset(const std::string& name, const Grid& g) {
    if (name == "constant") return preset_constant(g);
    if (name == "parity-smooth") return preset_parity_smooth(g);
    if (name == "cmc") return preset_cmc(g);
    throw ConfigError("unknown preset: " + name);
}

}  // namespace constraints
