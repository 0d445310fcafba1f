// Shared helpers for the test suites: analytic field construction and a
// few canonical data sets.

#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "constraints/fields.hpp"
#include "constraints/grid.hpp"

namespace testutil {

using constraints::Grid;
using constraints::ScalarField;
using constraints::SymTensorField;
using constraints::VectorField;

// Evaluate fn(x) at every node, x in [0,1)^n.
inline ScalarField make_scalar(const Grid& g, const std::function<double(const std::vector<double>&)>& fn) {
    ScalarField f(g);
    std::vector<int> idx(g.dim, 0);
    std::vector<double> x(g.dim, 0.0);
    std::size_t flat = 0;
    do {
        for (int a = 0; a < g.dim; ++a) x[a] = g.coordinate(idx[a]);
        f[flat] = fn(x);
        ++flat;
    } while (constraints::advance_multi_index(g, idx));
    return f;
}

inline VectorField make_vector(const Grid& g,
                               const std::vector<std::function<double(const std::vector<double>&)>>& fns) {
    VectorField v(g);
    for (int a = 0; a < g.dim; ++a) v[a] = make_scalar(g, fns[a]);
    return v;
}

inline double two_pi() { return 2.0 * M_PI; }

// sin(2 pi x_axis) and friends.
inline ScalarField sin_axis(const Grid& g, int axis, double k = 1.0) {
    return make_scalar(g, [axis, k](const std::vector<double>& x) {
        return std::sin(2.0 * M_PI * k * x[axis]);
    });
}

inline ScalarField cos_axis(const Grid& g, int axis, double k = 1.0) {
    return make_scalar(g, [axis, k](const std::vector<double>& x) {
        return std::cos(2.0 * M_PI * k * x[axis]);
    });
}

inline double rel_err(double got, double want) {
    return std::fabs(got - want) / std::max(1e-300, std::fabs(want));
}

inline double max_abs_diff(const ScalarField& a, const ScalarField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

}  // namespace testutil
