#pragma once

#include <cmath>
#include <cstdint>

#include "zvonkin/util.hpp"

namespace zvonkin {

// Uniform space-time lattice on [-L, L]^d x [0, T], symmetric about the
// spatial origin. Node layout is row-major with axis 0 fastest.
struct Grid {
    int dim = 1;
    double half_width = 1.0;  // L
    double hx = 0.1;
    double horizon = 1.0;  // T
    double ht = 0.01;

    Grid() = default;
    Grid(int d, double L, double hx_, double T, double ht_)
        : dim(d), half_width(L), hx(hx_), horizon(T), ht(ht_) {
        require(dim >= 1 && dim <= 3, "grid: dim must be in [1,3]");
        require(half_width > 0 && hx > 0 && hx <= 2 * half_width, "grid: need 0 < hx <= 2L");
        require(horizon > 0 && ht > 0 && ht <= horizon, "grid: need 0 < ht <= T");
    }

    int nodes_per_axis() const {
        return static_cast<int>(std::floor(2 * half_width / hx + 1e-9)) + 1;
    }

    long node_count() const {
        long n = 1;
        for (int k = 0; k < dim; ++k) n *= nodes_per_axis();
        return n;
    }

    int time_count() const {
        return static_cast<int>(std::floor(horizon / ht + 1e-9)) + 1;
    }

    double origin() const { return -0.5 * (nodes_per_axis() - 1) * hx; }

    double coord(int i) const { return origin() + i * hx; }

    double time_at(int j) const { return j * ht; }

    void node_coords(long idx, double* out) const {
        int m = nodes_per_axis();
        for (int k = 0; k < dim; ++k) {
            out[k] = coord(static_cast<int>(idx % m));
            idx /= m;
        }
    }

    long node_index(const int* multi) const {
        int m = nodes_per_axis();
        long idx = 0;
        for (int k = dim - 1; k >= 0; --k) idx = idx * m + multi[k];
        return idx;
    }

    bool same_layout(const Grid& o) const {
        return dim == o.dim && half_width == o.half_width && hx == o.hx &&
               horizon == o.horizon && ht == o.ht;
    }
};

}  // namespace zvonkin
