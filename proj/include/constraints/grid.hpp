// Uniform periodic grid on the flat unit-volume torus [0,1)^n.

#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace constraints {

// n >= 3 axes, m points per axis (m even, >= 4), spacing h = 1/m.  The
// discrete measure assigns weight h^n to every node, so the total volume
// is exactly one and integrals reduce to plain means.
struct Grid {
    int dim = 3;
    int points = 16;  // per axis

    Grid() = default;
    Grid(int n, int m) : dim(n), points(m) {
        if (n < 3) throw std::invalid_argument("Grid: dimension must be >= 3");
        if (m < 4 || m % 2 != 0)
            throw std::invalid_argument("Grid: points per axis must be even and >= 4");
    }

    std::size_t size() const {
        std::size_t s = 1;
        for (int a = 0; a < dim; ++a) s *= static_cast<std::size_t>(points);
        return s;
    }

    double spacing() const { return 1.0 / points; }

    int sym_components() const { return dim * (dim + 1) / 2; }

    // Integer frequency of axis index j, in [-m/2, m/2].  The set is
    // symmetric apart from the unpaired Nyquist frequency m/2; first
    // derivatives carry weight zero there (see spectral.hpp).
    int frequency(int j) const { return (j <= points / 2) ? j : j - points; }

    bool is_nyquist(int j) const { return 2 * j == points; }

    // Row-major flattening, axis 0 slowest.
    std::size_t index(const std::vector<int>& idx) const {
        std::size_t r = 0;
        for (int a = 0; a < dim; ++a) r = r * points + static_cast<std::size_t>(idx[a]);
        return r;
    }

    // Coordinate of node index j along one axis.
    double coordinate(int j) const { return static_cast<double>(j) / points; }

    friend bool operator==(const Grid& a, const Grid& b) {
        return a.dim == b.dim && a.points == b.points;
    }
};

// Odometer-style iteration over all multi-indices of a grid.
inline bool advance_multi_index(const Grid& g, std::vector<int>& idx) {
    for (int a = g.dim - 1; a >= 0; --a) {
        if (++idx[a] < g.points) return true;
        idx[a] = 0;
    }
    return false;
}

}  // namespace constraints
