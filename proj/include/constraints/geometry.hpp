// Tensor calculus of the conformal method on the flat torus: the
// conformal Killing (Ahlfors) operator, tensor divergence and the
// eta-weighted vector Laplacian.
//
// Conventions (flat metric, so indices move freely):
//   (L W)_ij = d_i W_j + d_j W_i - (2/n) (div W) delta_ij
//   (div S)_j = sum_i d_i S_ij
//   DeltaL W  = div( (1/(2 eta)) L W )
// The last line is the strong form of -1/2 L^*((1/(2 eta)) L .): for
// trace-free symmetric S the formal adjoint is L^* S = -2 div S, which
// the test suite verifies as a quadrature identity.

#pragma once

#include "constraints/errors.hpp"
#include "constraints/fields.hpp"
#include "constraints/spectral.hpp"

namespace constraints {

inline ScalarField divergence(const VectorField& w) {
    const Grid& g = w.grid();
    ScalarField div(g);
    for (int a = 0; a < g.dim; ++a) {
        spectral::Spectrum s = spectral::analyze(w[a]);
        std::vector<int> idx(g.dim, 0);
        std::size_t flat = 0;
        do {
            s[flat] *= std::complex<double>(0.0, spectral::derivative_weight(g, idx[a]));
            ++flat;
        } while (advance_multi_index(g, idx));
        div += spectral::synthesize(g, s);
    }
    return div;
}

inline SymTensorField conformal_killing(const VectorField& w) {
    const Grid& g = w.grid();
    SymTensorField lw(g);
    std::vector<VectorField> grads;
    grads.reserve(g.dim);
    for (int a = 0; a < g.dim; ++a) grads.push_back(gradient(w[a]));

    ScalarField div(g);
    for (int a = 0; a < g.dim; ++a) div += grads[a][a];
    div *= 2.0 / g.dim;

    for (int i = 0; i < g.dim; ++i)
        for (int j = i; j < g.dim; ++j) {
            ScalarField entry = grads[j][i] + grads[i][j];  // d_i W_j + d_j W_i
            if (i == j) entry -= div;
            lw(i, j) = std::move(entry);
        }
    return lw;
}

inline VectorField divergence(const SymTensorField& s) {
    const Grid& g = s.grid();
    VectorField div(g);
    for (int i = 0; i < g.dim; ++i)
        for (int j = 0; j < g.dim; ++j) {
            // d_i S_ij contributes to component j
            spectral::Spectrum sp = spectral::analyze(s(i, j));
            std::vector<int> idx(g.dim, 0);
            std::size_t flat = 0;
            do {
                sp[flat] *= std::complex<double>(0.0, spectral::derivative_weight(g, idx[i]));
                ++flat;
            } while (advance_multi_index(g, idx));
            div[j] += spectral::synthesize(g, sp);
        }
    return div;
}

inline void require_positive(const ScalarField& eta) {
    if (min_value(eta) <= 0.0)
        throw NonPositiveEta("eta must be strictly positive");
}

// DeltaL W = div((1/(2 eta)) L W).  Self-adjoint, negative semidefinite;
// its kernel on the flat torus is spanned by the constant vector fields.
inline VectorField vector_laplacian_apply(const VectorField& w, const ScalarField& eta) {
    require_positive(eta);
    SymTensorField lw = conformal_killing(w);
    ScalarField half_inv_eta = map(eta, [](double e) { return 0.5 / e; });
    return divergence(scale(lw, half_inv_eta));
}

}  // namespace constraints
