// tau^2-weighted averaging: E_tau[f] = E[tau^2 f] / E[tau^2], and the
// induced split u = c + psi with E_tau[psi] = 0.  This is the
// decomposition the small-TT fixed point is built on.

#pragma once

#include "constraints/errors.hpp"
#include "constraints/fields.hpp"

namespace constraints {

inline double tau_expectation(const ScalarField& f, const ScalarField& tau) {
    ScalarField tau2 = multiply(tau, tau);
    const double mass = integrate(tau2);
    if (mass <= 0.0) throw DegenerateData("tau_expectation: tau is identically zero");
    return integrate(multiply(tau2, f)) / mass;
}

struct TauDecomposition {
    double c = 0.0;     // E_tau[u]
    ScalarField psi;    // u - c, E_tau[psi] = 0

    ScalarField reconstruct() const { return psi + c; }
};

inline TauDecomposition decompose(const ScalarField& u, const ScalarField& tau) {
    TauDecomposition d;
    d.c = tau_expectation(u, tau);
    d.psi = u - d.c;
    return d;
}

}  // namespace constraints
