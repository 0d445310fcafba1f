// Trigonometric spectral calculus on the periodic grid, backed by FFTW.
// Derivatives are exact for resolved trigonometric interpolants.  The
// unpaired Nyquist frequency m/2 gets first-derivative weight zero (the
// usual anti-symmetry fix); the Laplacian keeps its full symbol since
// -|2 pi k|^2 is symmetric.

#pragma once

#include <complex>
#include <cstring>
#include <memory>
#include <map>
#include <mutex>
#include <random>
#include <vector>

#include <fftw3.h>

#include "constraints/fields.hpp"
#include "constraints/grid.hpp"

namespace constraints {
namespace spectral {

using Spectrum = std::vector<std::complex<double>>;

namespace detail {

struct PlanPair {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
    fftw_complex* scratch_in = nullptr;   // kept alive: plans reference them
    fftw_complex* scratch_out = nullptr;
};

// Plan creation is not thread safe in FFTW; execution via the new-array
// interface is.  All buffers come from fftw_malloc so alignment matches
// the planning buffers.
inline PlanPair& plans_for(const Grid& g) {
    static std::map<std::pair<int, int>, PlanPair> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto key = std::make_pair(g.dim, g.points);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    PlanPair p;
    const std::size_t total = g.size();
    p.scratch_in = fftw_alloc_complex(total);
    p.scratch_out = fftw_alloc_complex(total);
    std::vector<int> dims(g.dim, g.points);
    p.forward = fftw_plan_dft(g.dim, dims.data(), p.scratch_in, p.scratch_out,
                              FFTW_FORWARD, FFTW_ESTIMATE);
    p.backward = fftw_plan_dft(g.dim, dims.data(), p.scratch_in, p.scratch_out,
                               FFTW_BACKWARD, FFTW_ESTIMATE);
    return cache.emplace(key, p).first->second;
}

struct FftwDeleter {
    void operator()(fftw_complex* p) const { fftw_free(p); }
};
using Buffer = std::unique_ptr<fftw_complex[], FftwDeleter>;

inline Buffer make_buffer(std::size_t n) { return Buffer(fftw_alloc_complex(n)); }

}  // namespace detail

// Forward transform with 1/size normalization: coefficients of the
// trigonometric interpolant, so spectrum[0] is the mean.
inline Spectrum analyze(const ScalarField& f) {
    const Grid& g = f.grid();
    const std::size_t total = g.size();
    detail::PlanPair& plans = detail::plans_for(g);
    detail::Buffer in = detail::make_buffer(total);
    detail::Buffer out = detail::make_buffer(total);
    for (std::size_t i = 0; i < total; ++i) {
        in[i][0] = f[i];
        in[i][1] = 0.0;
    }
    fftw_execute_dft(plans.forward, in.get(), out.get());
    Spectrum s(total);
    const double inv = 1.0 / static_cast<double>(total);
    for (std::size_t i = 0; i < total; ++i)
        s[i] = std::complex<double>(out[i][0] * inv, out[i][1] * inv);
    return s;
}

// Inverse of analyze; imaginary parts (rounding noise for Hermitian
// spectra) are dropped.
inline ScalarField synthesize(const Grid& g, const Spectrum& s) {
    const std::size_t total = g.size();
    detail::PlanPair& plans = detail::plans_for(g);
    detail::Buffer in = detail::make_buffer(total);
    detail::Buffer out = detail::make_buffer(total);
    for (std::size_t i = 0; i < total; ++i) {
        in[i][0] = s[i].real();
        in[i][1] = s[i].imag();
    }
    fftw_execute_dft(plans.backward, in.get(), out.get());
    ScalarField f(g);
    for (std::size_t i = 0; i < total; ++i) f[i] = out[i][0];
    return f;
}

// Visit every mode: callback gets the flat index and the integer
// frequency vector.
template <class F>
void for_each_mode(const Grid& g, F&& fn) {
    std::vector<int> idx(g.dim, 0);
    std::vector<int> freq(g.dim, 0);
    std::size_t flat = 0;
    do {
        for (int a = 0; a < g.dim; ++a) freq[a] = g.frequency(idx[a]);
        fn(flat, idx, freq);
        ++flat;
    } while (advance_multi_index(g, idx));
}

// First-derivative weight along one axis: 2 pi k, zero at Nyquist.
inline double derivative_weight(const Grid& g, int axis_index) {
    if (g.is_nyquist(axis_index)) return 0.0;
    return 2.0 * M_PI * g.frequency(axis_index);
}

inline VectorField gradient(const ScalarField& f) {
    const Grid& g = f.grid();
    Spectrum base = analyze(f);
    VectorField grad(g);
    Spectrum comp(base.size());
    for (int a = 0; a < g.dim; ++a) {
        std::vector<int> idx(g.dim, 0);
        std::size_t flat = 0;
        do {
            const double w = derivative_weight(g, idx[a]);
            comp[flat] = std::complex<double>(0.0, w) * base[flat];
            ++flat;
        } while (advance_multi_index(g, idx));
        grad[a] = synthesize(g, comp);
    }
    return grad;
}

inline ScalarField laplacian(const ScalarField& f) {
    const Grid& g = f.grid();
    Spectrum s = analyze(f);
    std::vector<int> idx(g.dim, 0);
    std::size_t flat = 0;
    const double tp2 = 4.0 * M_PI * M_PI;
    do {
        double k2 = 0.0;
        for (int a = 0; a < g.dim; ++a) {
            const double k = g.frequency(idx[a]);
            k2 += k * k;
        }
        s[flat] *= -tp2 * k2;
        ++flat;
    } while (advance_multi_index(g, idx));
    return synthesize(g, s);
}

// Solve (-coeff * Laplacian) u = f - mean(f) with mean(u) = 0; exact in
// one transform pair.  The caller handles the solvability bookkeeping.
inline ScalarField poisson_zero_mean(const ScalarField& f, double coeff) {
    const Grid& g = f.grid();
    Spectrum s = analyze(f);
    std::vector<int> idx(g.dim, 0);
    std::size_t flat = 0;
    const double tp2 = 4.0 * M_PI * M_PI;
    do {
        double k2 = 0.0;
        for (int a = 0; a < g.dim; ++a) {
            const double k = g.frequency(idx[a]);
            k2 += k * k;
        }
        s[flat] = (k2 == 0.0) ? 0.0 : s[flat] / (coeff * tp2 * k2);
        ++flat;
    } while (advance_multi_index(g, idx));
    return synthesize(g, s);
}

// Apply (-coeff*Laplacian + shift)^{-1}; shift > 0 makes it regular.
inline ScalarField helmholtz_inverse(const ScalarField& f, double coeff, double shift) {
    const Grid& g = f.grid();
    Spectrum s = analyze(f);
    std::vector<int> idx(g.dim, 0);
    std::size_t flat = 0;
    const double tp2 = 4.0 * M_PI * M_PI;
    do {
        double k2 = 0.0;
        for (int a = 0; a < g.dim; ++a) {
            const double k = g.frequency(idx[a]);
            k2 += k * k;
        }
        s[flat] /= coeff * tp2 * k2 + shift;
        ++flat;
    } while (advance_multi_index(g, idx));
    return synthesize(g, s);
}

// Sum of squared spectral coefficients; equals integrate(f^2) by
// Parseval for the mean-normalized transform.
inline double spectral_energy(const ScalarField& f) {
    Spectrum s = analyze(f);
    double e = 0.0;
    for (const auto& c : s) e += std::norm(c);
    return e;
}

// Remove modes on which every first-derivative weight vanishes: the
// constant and the 2^n - 1 "corner" modes whose frequencies are all 0
// or Nyquist.  These span the discrete kernel of the conformal Killing
// operator beyond the constants; the vector solver projects them out of
// its right hand side.
inline ScalarField drop_derivative_null_modes(const ScalarField& f) {
    const Grid& g = f.grid();
    Spectrum s = analyze(f);
    std::vector<int> idx(g.dim, 0);
    std::size_t flat = 0;
    do {
        bool null_mode = true;
        for (int a = 0; a < g.dim; ++a)
            if (derivative_weight(g, idx[a]) != 0.0) {
                null_mode = false;
                break;
            }
        if (null_mode) s[flat] = 0.0;
        ++flat;
    } while (advance_multi_index(g, idx));
    return synthesize(g, s);
}

// Random band-limited field: coefficients on |k|_inf <= band, amplitude
// decaying like (1+|k|^2)^{-decay}.  even = true restricts to cosine
// content (f(-x) = f(x)); zero_mean drops the constant mode.  Band must
// stay below Nyquist.  Deterministic for a fixed engine state.
inline ScalarField random_band_limited(const Grid& g, int band, std::mt19937_64& rng,
                                       bool even = false, bool zero_mean = false,
                                       double decay = 1.0) {
    if (band >= g.points / 2)
        throw std::invalid_argument("random_band_limited: band must be below Nyquist");
    std::normal_distribution<double> gauss(0.0, 1.0);
    Spectrum s(g.size(), std::complex<double>(0.0, 0.0));

    // Mirror of a multi-index under k -> -k.
    auto mirror_flat = [&](const std::vector<int>& idx) {
        std::size_t r = 0;
        for (int a = 0; a < g.dim; ++a) {
            const int j = idx[a] == 0 ? 0 : g.points - idx[a];
            r = r * g.points + static_cast<std::size_t>(j);
        }
        return r;
    };

    std::vector<int> idx(g.dim, 0);
    std::size_t flat = 0;
    do {
        bool in_band = true;
        double k2 = 0.0;
        int lead = 0;  // sign of first nonzero frequency, picks one of each +-k pair
        for (int a = 0; a < g.dim; ++a) {
            const int k = g.frequency(idx[a]);
            if (std::abs(k) > band) in_band = false;
            k2 += static_cast<double>(k) * k;
            if (lead == 0 && k != 0) lead = (k > 0) ? 1 : -1;
        }
        if (in_band && lead >= 0) {
            if (lead == 0) {  // constant mode
                if (!zero_mean) s[flat] = gauss(rng);
                else gauss(rng);  // keep the draw sequence stable
            } else {
                const double amp = std::pow(1.0 + k2, -decay);
                const double re = gauss(rng) * amp;
                const double im = gauss(rng) * amp;
                if (even) {
                    s[flat] = std::complex<double>(re, 0.0);
                    s[mirror_flat(idx)] = std::complex<double>(re, 0.0);
                } else {
                    s[flat] = std::complex<double>(re, im);
                    s[mirror_flat(idx)] = std::complex<double>(re, -im);
                }
            }
        }
        ++flat;
    } while (advance_multi_index(g, idx));
    return synthesize(g, s);
}

}  // namespace spectral

// Re-exported under the library namespace: these are the discrete
// carriers of the differential calculus used everywhere.
using spectral::analyze;
using spectral::gradient;
using spectral::laplacian;
using spectral::synthesize;

}  // namespace constraints
