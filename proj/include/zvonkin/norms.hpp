#pragma once

#include <cmath>

#include "zvonkin/field.hpp"

namespace zvonkin {

struct SeminormOptions {
    // Exhaustive mode enumerates every node pair in the slice; the default
    // pair set is all nearest neighbours plus deterministic dyadic-offset
    // pairs per node. Both give lower bounds for the continuum seminorm; the
    // exhaustive value is exact for piecewise-multilinear data.
    bool exhaustive = false;
};

namespace detail {

inline double channel_dist(const double* a, const double* b, int channels) {
    double s = 0.0;
    for (int c = 0; c < channels; ++c) {
        double d = a[c] - b[c];
        s += d * d;
    }
    return std::sqrt(s);
}

}  // namespace detail

inline double slice_sup_norm(const SpaceTimeField& f, int slice) {
    const Grid& g = f.grid();
    long nodes = g.node_count();
    int ch = f.channels();
    const double* base = f.slice_data(slice);
    double best = 0.0;
    for (long n = 0; n < nodes; ++n) {
        double s = 0.0;
        const double* p = base + n * ch;
        for (int c = 0; c < ch; ++c) s += p[c] * p[c];
        if (s > best) best = s;
    }
    return std::sqrt(best);
}

inline double slice_holder_seminorm(const SpaceTimeField& f, int slice, double alpha,
                                    SeminormOptions opts = {}) {
    require(alpha > 0.0 && alpha <= 1.0, "holder_seminorm: alpha must lie in (0,1]");
    const Grid& g = f.grid();
    int d = g.dim;
    int m = g.nodes_per_axis();
    int ch = f.channels();
    const double* base = f.slice_data(slice);
    long nodes = g.node_count();
    double best = 0.0;

    auto consider = [&](long na, long nb, double dist) {
        double diff = detail::channel_dist(base + na * ch, base + nb * ch, ch);
        if (diff == 0.0) return;
        double r = diff / std::pow(dist, alpha);
        if (r > best) best = r;
    };

    if (opts.exhaustive) {
        double xa[3], xb[3];
        for (long na = 0; na < nodes; ++na) {
            g.node_coords(na, xa);
            for (long nb = na + 1; nb < nodes; ++nb) {
                g.node_coords(nb, xb);
                double s = 0.0;
                for (int k = 0; k < d; ++k) s += (xa[k] - xb[k]) * (xa[k] - xb[k]);
                consider(na, nb, std::sqrt(s));
            }
        }
        return best;
    }

    // axis strides in node index space
    long stride[3] = {1, m, static_cast<long>(m) * m};
    int mi[3];
    for (long n = 0; n < nodes; ++n) {
        long rem = n;
        for (int k = 0; k < d; ++k) {
            mi[k] = static_cast<int>(rem % m);
            rem /= m;
        }
        int budget = 64;
        for (int k = 0; k < d; ++k) {
            if (mi[k] + 1 < m) consider(n, n + stride[k], g.hx);
            for (int off = 2; mi[k] + off < m && budget > 0; off *= 2) {
                consider(n, n + off * stride[k], off * g.hx);
                --budget;
            }
        }
    }
    return best;
}

inline double holder_seminorm(const SpaceTimeField& f, double t, SeminormOptions opts = {}) {
    return slice_holder_seminorm(f, f.slice_at(t), f.alpha(), opts);
}

// L^q(0,T; C^alpha_b) norm by left-endpoint quadrature over the time cells.
inline double lebesgue_holder_norm(const SpaceTimeField& f, double q, SeminormOptions opts = {}) {
    require(q >= 1.0, "lebesgue_holder_norm: q must be >= 1");
    const Grid& g = f.grid();
    int cells = g.time_count() - 1;
    if (f.time_constant()) {
        double v = slice_sup_norm(f, 0) + slice_holder_seminorm(f, 0, f.alpha(), opts);
        return v * std::pow(cells * g.ht, 1.0 / q);
    }
    double acc = 0.0;
    for (int j = 0; j < cells; ++j) {
        double v = slice_sup_norm(f, j) + slice_holder_seminorm(f, j, f.alpha(), opts);
        acc += std::pow(v, q) * g.ht;
    }
    return std::pow(acc, 1.0 / q);
}

inline double lebesgue_holder_norm(const SpaceTimeField& f, SeminormOptions opts = {}) {
    return lebesgue_holder_norm(f, f.q(), opts);
}

}  // namespace zvonkin
