// Conformal seed data (tau, sigma, eta, exponents p and t) and York/TT
// projection for synthesizing admissible sigma.
//
// The regularity exponents p > n and t > 1 are carried as parameters
// feeding the exponent arithmetic of the stability analysis; stored
// fields themselves are smooth grid samples.

#pragma once

#include <cmath>

#include "constraints/elliptic.hpp"
#include "constraints/errors.hpp"
#include "constraints/fields.hpp"
#include "constraints/geometry.hpp"

namespace constraints {

// TT projection: remove the trace, then subtract the longitudinal part
// (1/(2 eta)) L V with DeltaL V = div(S0).  The right hand side is a
// total divergence, so it has no kernel component and the vector solve
// is unobstructed.
inline SymTensorField tt_project(const SymTensorField& s, const ScalarField& eta,
                                 const LinearSolveOptions& opts = {}) {
    require_positive(eta);
    SymTensorField s0 = trace_free_part(s);
    VectorSolveResult v = solve_vector(divergence(s0), eta, opts);
    ScalarField half_inv_eta = map(eta, [](double e) { return 0.5 / e; });
    return s0 - scale(conformal_killing(v.W), half_inv_eta);
}

struct ConformalSeed {
    ScalarField tau;     // mean curvature
    SymTensorField sigma;  // TT tensor
    ScalarField eta;     // positive weight (2 eta == 1 is the classical choice)
    double p = 4.0;      // Lebesgue exponent, > n
    double t = 2.0;      // regularity exponent for tau, > 1
    bool parity = false; // data even under x -> -x

    const Grid& grid() const { return tau.grid(); }

    // Checks the structural invariants; tau != 0 / sigma != 0 are gated
    // separately at solve time because some drivers deliberately probe
    // the degenerate branches.
    void validate() const {
        const Grid& g = tau.grid();
        if (!(sigma.grid() == g) || !(eta.grid() == g))
            throw std::invalid_argument("ConformalSeed: grid mismatch");
        if (!tau.finite() || !sigma.finite() || !eta.finite())
            throw std::invalid_argument("ConformalSeed: non-finite samples");
        require_positive(eta);
        if (p <= g.dim) throw std::invalid_argument("ConformalSeed: requires p > n");
        if (t <= 1.0) throw std::invalid_argument("ConformalSeed: requires t > 1");
        if (linf_norm(trace(sigma)) > 1e-10)
            throw std::invalid_argument("ConformalSeed: sigma is not trace-free");
        if (l2_norm(divergence(sigma)) > 1e-8)
            throw std::invalid_argument("ConformalSeed: sigma is not divergence-free");
    }

    void require_nondegenerate() const {
        if (linf_norm(tau) == 0.0) throw DegenerateData("tau is identically zero");
        double sig = 0.0;
        for (int k = 0; k < sigma.components(); ++k)
            sig = std::max(sig, linf_norm(sigma.component(k)));
        if (sig == 0.0) throw DegenerateData("sigma is identically zero");
    }
};

}  // namespace constraints
