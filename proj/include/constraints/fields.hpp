// Sampled fields on the periodic grid: scalars, vectors and symmetric
// 2-tensors (upper triangle storage).  Fields are plain value types; all
// operations return new values, which keeps them safe to use from
// parallel workers.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "constraints/grid.hpp"

namespace constraints {

// Deterministic pairwise summation; error grows like log(n)*eps instead
// of n*eps and the reduction order is fixed.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 32) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t h = v.size() / 2;
    return pairwise_sum(v.first(h)) + pairwise_sum(v.subspan(h));
}

namespace detail {
template <class F>
double pairwise_accumulate(std::size_t lo, std::size_t hi, const F& term) {
    if (hi - lo <= 32) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += term(i);
        return s;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    return pairwise_accumulate(lo, mid, term) + pairwise_accumulate(mid, hi, term);
}
}  // namespace detail

class ScalarField {
  public:
    ScalarField() = default;
    explicit ScalarField(const Grid& g, double fill = 0.0)
        : grid_(g), v_(g.size(), fill) {}
    ScalarField(const Grid& g, std::vector<double> values)
        : grid_(g), v_(std::move(values)) {
        if (v_.size() != grid_.size())
            throw std::invalid_argument("ScalarField: value count does not match grid");
    }

    const Grid& grid() const { return grid_; }
    std::size_t size() const { return v_.size(); }
    double& operator[](std::size_t i) { return v_[i]; }
    double operator[](std::size_t i) const { return v_[i]; }
    std::span<const double> values() const { return v_; }
    std::span<double> values() { return v_; }

    bool finite() const {
        return std::all_of(v_.begin(), v_.end(), [](double x) { return std::isfinite(x); });
    }

    ScalarField& operator+=(const ScalarField& o) { return zip(o, std::plus<>{}); }
    ScalarField& operator-=(const ScalarField& o) { return zip(o, std::minus<>{}); }
    ScalarField& operator*=(double a) {
        for (double& x : v_) x *= a;
        return *this;
    }
    ScalarField& operator+=(double a) {
        for (double& x : v_) x += a;
        return *this;
    }

    friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
    friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
    friend ScalarField operator*(double a, ScalarField f) { return f *= a; }
    friend ScalarField operator*(ScalarField f, double a) { return f *= a; }
    friend ScalarField operator+(ScalarField f, double a) { return f += a; }
    friend ScalarField operator-(ScalarField f, double a) { return f += -a; }

  private:
    template <class Op>
    ScalarField& zip(const ScalarField& o, Op op) {
        if (!(grid_ == o.grid_)) throw std::invalid_argument("ScalarField: grid mismatch");
        for (std::size_t i = 0; i < v_.size(); ++i) v_[i] = op(v_[i], o.v_[i]);
        return *this;
    }

    Grid grid_;
    std::vector<double> v_;
};

// Evaluate fn(x) at every node, x in [0,1)^n.
template <class F>
ScalarField sample(const Grid& g, F&& fn) {
    ScalarField f(g);
    std::vector<int> idx(g.dim, 0);
    std::vector<double> x(g.dim, 0.0);
    std::size_t flat = 0;
    do {
        for (int a = 0; a < g.dim; ++a) x[a] = g.coordinate(idx[a]);
        f[flat] = fn(x);
        ++flat;
    } while (advance_multi_index(g, idx));
    return f;
}

// Pointwise product and general pointwise maps.
inline ScalarField multiply(const ScalarField& a, const ScalarField& b) {
    ScalarField r = a;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] *= b[i];
    return r;
}

template <class F>
ScalarField map(const ScalarField& a, F&& f) {
    ScalarField r = a;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = f(a[i]);
    return r;
}

template <class F>
ScalarField map(const ScalarField& a, const ScalarField& b, F&& f) {
    if (!(a.grid() == b.grid())) throw std::invalid_argument("map: grid mismatch");
    ScalarField r = a;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = f(a[i], b[i]);
    return r;
}

inline ScalarField pow_field(const ScalarField& a, double e) {
    return map(a, [e](double x) { return std::pow(x, e); });
}

// \int f d\mu on the unit-volume torus: exactly the node mean.
inline double integrate(const ScalarField& f) {
    return pairwise_sum(f.values()) / static_cast<double>(f.size());
}

inline double integrate_product(const ScalarField& a, const ScalarField& b) {
    if (!(a.grid() == b.grid())) throw std::invalid_argument("integrate_product: grid mismatch");
    const double s = detail::pairwise_accumulate(
        0, a.size(), [&](std::size_t i) { return a[i] * b[i]; });
    return s / static_cast<double>(a.size());
}

inline double l2_norm(const ScalarField& f) {
    return std::sqrt(std::max(0.0, integrate_product(f, f)));
}

// L^p quadrature norm, p >= 1 (p need not be an integer).
inline double lp_norm(const ScalarField& f, double p) {
    if (p <= 0) throw std::invalid_argument("lp_norm: p must be positive");
    const double s = detail::pairwise_accumulate(
        0, f.size(), [&](std::size_t i) { return std::pow(std::fabs(f[i]), p); });
    return std::pow(s / static_cast<double>(f.size()), 1.0 / p);
}

inline double linf_norm(const ScalarField& f) {
    double m = 0.0;
    for (double x : f.values()) m = std::max(m, std::fabs(x));
    return m;
}

inline double min_value(const ScalarField& f) {
    return *std::min_element(f.values().begin(), f.values().end());
}

inline double max_value(const ScalarField& f) {
    return *std::max_element(f.values().begin(), f.values().end());
}

class VectorField {
  public:
    VectorField() = default;
    explicit VectorField(const Grid& g) : grid_(g), comp_(g.dim, ScalarField(g)) {}

    const Grid& grid() const { return grid_; }
    int components() const { return static_cast<int>(comp_.size()); }
    ScalarField& operator[](int a) { return comp_[a]; }
    const ScalarField& operator[](int a) const { return comp_[a]; }

    bool finite() const {
        return std::all_of(comp_.begin(), comp_.end(), [](const ScalarField& c) { return c.finite(); });
    }

    VectorField& operator+=(const VectorField& o) {
        for (int a = 0; a < components(); ++a) comp_[a] += o.comp_[a];
        return *this;
    }
    VectorField& operator-=(const VectorField& o) {
        for (int a = 0; a < components(); ++a) comp_[a] -= o.comp_[a];
        return *this;
    }
    VectorField& operator*=(double s) {
        for (auto& c : comp_) c *= s;
        return *this;
    }
    friend VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
    friend VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
    friend VectorField operator*(double s, VectorField v) { return v *= s; }

  private:
    Grid grid_;
    std::vector<ScalarField> comp_;
};

inline double integrate_dot(const VectorField& a, const VectorField& b) {
    double s = 0.0;
    for (int c = 0; c < a.components(); ++c) s += integrate_product(a[c], b[c]);
    return s;
}

inline double l2_norm(const VectorField& v) {
    return std::sqrt(std::max(0.0, integrate_dot(v, v)));
}

inline double linf_norm(const VectorField& v) {
    double m = 0.0;
    for (int c = 0; c < v.components(); ++c) m = std::max(m, linf_norm(v[c]));
    return m;
}

// Pointwise Euclidean magnitude |v|.
inline ScalarField magnitude(const VectorField& v) {
    ScalarField r(v.grid());
    for (int c = 0; c < v.components(); ++c)
        for (std::size_t i = 0; i < r.size(); ++i) r[i] += v[c][i] * v[c][i];
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::sqrt(r[i]);
    return r;
}

// Symmetric 2-tensor, upper triangle stored row-major:
// (0,0), (0,1), ..., (0,n-1), (1,1), ..., (n-1,n-1).
class SymTensorField {
  public:
    SymTensorField() = default;
    explicit SymTensorField(const Grid& g)
        : grid_(g), comp_(g.sym_components(), ScalarField(g)) {}

    const Grid& grid() const { return grid_; }
    int components() const { return static_cast<int>(comp_.size()); }

    static int flat_index(int dim, int i, int j) {
        if (i > j) std::swap(i, j);
        return i * dim - i * (i - 1) / 2 + (j - i);
    }

    ScalarField& operator()(int i, int j) { return comp_[flat_index(grid_.dim, i, j)]; }
    const ScalarField& operator()(int i, int j) const {
        return comp_[flat_index(grid_.dim, i, j)];
    }
    ScalarField& component(int k) { return comp_[k]; }
    const ScalarField& component(int k) const { return comp_[k]; }

    bool finite() const {
        return std::all_of(comp_.begin(), comp_.end(), [](const ScalarField& c) { return c.finite(); });
    }

    SymTensorField& operator+=(const SymTensorField& o) {
        for (int k = 0; k < components(); ++k) comp_[k] += o.comp_[k];
        return *this;
    }
    SymTensorField& operator-=(const SymTensorField& o) {
        for (int k = 0; k < components(); ++k) comp_[k] -= o.comp_[k];
        return *this;
    }
    SymTensorField& operator*=(double s) {
        for (auto& c : comp_) c *= s;
        return *this;
    }
    friend SymTensorField operator+(SymTensorField a, const SymTensorField& b) { return a += b; }
    friend SymTensorField operator-(SymTensorField a, const SymTensorField& b) { return a -= b; }
    friend SymTensorField operator*(double s, SymTensorField t) { return t *= s; }

  private:
    Grid grid_;
    std::vector<ScalarField> comp_;
};

inline ScalarField trace(const SymTensorField& s) {
    ScalarField r(s.grid());
    for (int i = 0; i < s.grid().dim; ++i) r += s(i, i);
    return r;
}

// Full contraction <S,T> = sum_{ij} S_ij T_ij; off-diagonal entries count twice.
inline ScalarField contract(const SymTensorField& s, const SymTensorField& t) {
    const int n = s.grid().dim;
    ScalarField r(s.grid());
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const double w = (i == j) ? 1.0 : 2.0;
            const ScalarField& a = s(i, j);
            const ScalarField& b = t(i, j);
            for (std::size_t k = 0; k < r.size(); ++k) r[k] += w * a[k] * b[k];
        }
    return r;
}

// Pointwise Frobenius magnitude |S|.
inline ScalarField magnitude(const SymTensorField& s) {
    ScalarField r = contract(s, s);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::sqrt(std::max(0.0, r[i]));
    return r;
}

inline double l2_norm(const SymTensorField& s) {
    return std::sqrt(std::max(0.0, integrate(contract(s, s))));
}

inline SymTensorField trace_free_part(const SymTensorField& s) {
    SymTensorField r = s;
    ScalarField tr = trace(s);
    tr *= 1.0 / s.grid().dim;
    for (int i = 0; i < s.grid().dim; ++i) r(i, i) -= tr;
    return r;
}

// S scaled pointwise by a scalar field.
inline SymTensorField scale(const SymTensorField& s, const ScalarField& w) {
    SymTensorField r = s;
    for (int k = 0; k < r.components(); ++k)
        for (std::size_t i = 0; i < w.size(); ++i) r.component(k)[i] *= w[i];
    return r;
}

inline VectorField scale(const VectorField& v, const ScalarField& w) {
    VectorField r = v;
    for (int c = 0; c < r.components(); ++c)
        for (std::size_t i = 0; i < w.size(); ++i) r[c][i] *= w[i];
    return r;
}

inline VectorField mean_free(const VectorField& v) {
    VectorField r = v;
    for (int c = 0; c < r.components(); ++c) r[c] += -integrate(v[c]);
    return r;
}

}  // namespace constraints
