#pragma once

#include <array>
#include <cmath>
#include <iostream>
#include <numbers>
#include <vector>

#include "zvonkin/norms.hpp"

namespace zvonkin {

// Standard compactly supported bump rho(x) = c_d exp(-1/(1-|x|^2)) on the unit
// ball, normalized numerically so the integral over R^d is 1. rho_n(x) =
// n^d rho(n x) has support radius 1/n.
struct Mollifier {
    int level = 1;

    explicit Mollifier(int n) : level(n) { require(n >= 1, "mollifier: level must be >= 1"); }

    static double profile(double radius2) {
        if (radius2 >= 1.0) return 0.0;
        return std::exp(-1.0 / (1.0 - radius2));
    }

    // 1 / integral of the unnormalized profile over R^d.
    static double normalization(int dim) {
        static double cache[4] = {0, 0, 0, 0};
        require(dim >= 1 && dim <= 3, "mollifier: dim must be in [1,3]");
        if (cache[dim] != 0.0) return cache[dim];
        // radial Simpson: S_{d-1} * int_0^1 r^{d-1} profile(r^2) dr
        const int panels = 1 << 14;
        double h = 1.0 / panels;
        double acc = 0.0;
        auto fn = [&](double r) { return std::pow(r, dim - 1) * profile(r * r); };
        for (int i = 0; i < panels; ++i) {
            double r0 = i * h;
            acc += h / 6.0 * (fn(r0) + 4.0 * fn(r0 + 0.5 * h) + fn(r0 + h));
        }
        double surface = 2.0 * std::pow(std::numbers::pi, dim / 2.0) / std::tgamma(dim / 2.0);
        cache[dim] = 1.0 / (surface * acc);
        return cache[dim];
    }

    double density(const double* x, int dim) const {
        double r2 = 0.0;
        for (int k = 0; k < dim; ++k) r2 += (level * x[k]) * (level * x[k]);
        double p = profile(r2);
        return p == 0.0 ? 0.0 : normalization(dim) * std::pow(static_cast<double>(level), dim) * p;
    }
};

// Discrete mollification: per-slice convolution with the sampled bump, weights
// renormalized to unit mass so constants are preserved exactly and the sup
// norm never grows.
inline SpaceTimeField mollify(const SpaceTimeField& f, const Mollifier& moll) {
    const Grid& g = f.grid();
    int d = g.dim;
    int n = moll.level;
    int W = static_cast<int>(std::floor(1.0 / (n * g.hx) + 1e-9));
    if (1.0 / n < g.hx - 1e-12) {
        std::cerr << "mollify: warning: support radius 1/" << n
                  << " is below the grid spacing; kernel is under-resolved\n";
    }
    if (W < 1) return f;

    std::vector<std::array<int, 3>> offs;
    std::vector<double> weights;
    int span = 2 * W + 1;
    long cells = 1;
    for (int k = 0; k < d; ++k) cells *= span;
    double wsum = 0.0;
    for (long c = 0; c < cells; ++c) {
        long rem = c;
        std::array<int, 3> off{0, 0, 0};
        double r2 = 0.0;
        for (int k = 0; k < d; ++k) {
            off[static_cast<std::size_t>(k)] = static_cast<int>(rem % span) - W;
            rem /= span;
            double z = n * off[static_cast<std::size_t>(k)] * g.hx;
            r2 += z * z;
        }
        double w = Mollifier::profile(r2);
        if (w <= 0.0) continue;
        offs.push_back(off);
        weights.push_back(w);
        wsum += w;
    }
    for (double& w : weights) w /= wsum;

    SpaceTimeField out = f;
    int ch = f.channels();
    int m = g.nodes_per_axis();
    long nodes = g.node_count();
    std::vector<int> mi(static_cast<std::size_t>(d));
    for (int s = 0; s < f.time_slices(); ++s) {
        const double* src = f.slice_data(s);
        double* dst = out.slice_data(s);
        for (long node = 0; node < nodes; ++node) {
            long rem = node;
            for (int k = 0; k < d; ++k) {
                mi[static_cast<std::size_t>(k)] = static_cast<int>(rem % m);
                rem /= m;
            }
            for (int c = 0; c < ch; ++c) dst[node * ch + c] = 0.0;
            for (std::size_t p = 0; p < offs.size(); ++p) {
                long idx = 0;
                for (int k = d - 1; k >= 0; --k) {
                    int i = std::clamp(mi[static_cast<std::size_t>(k)] + offs[p][static_cast<std::size_t>(k)],
                                       0, m - 1);
                    idx = idx * m + i;
                }
                const double* sp = src + idx * ch;
                for (int c = 0; c < ch; ++c) dst[node * ch + c] += weights[p] * sp[c];
            }
        }
    }
    return out;
}

// ||f_n - f|| in L^q(0,T; sup norm) per mollification level.
inline std::vector<double> mollify_convergence(const SpaceTimeField& f, double q,
                                               const std::vector<int>& levels) {
    require(q >= 1.0, "mollify_convergence: q must be >= 1");
    const Grid& g = f.grid();
    std::vector<double> out;
    out.reserve(levels.size());
    for (int n : levels) {
        SpaceTimeField fn = mollify(f, Mollifier(n));
        int cells = g.time_count() - 1;
        int ch = f.channels();
        long nodes = g.node_count();
        auto slice_gap = [&](int s) {
            const double* a = fn.slice_data(s);
            const double* b = f.slice_data(s);
            double best = 0.0;
            for (long node = 0; node < nodes; ++node) {
                double acc = 0.0;
                for (int c = 0; c < ch; ++c) {
                    double dv = a[node * ch + c] - b[node * ch + c];
                    acc += dv * dv;
                }
                if (acc > best) best = acc;
            }
            return std::sqrt(best);
        };
        double norm;
        if (f.time_constant()) {
            norm = slice_gap(0) * std::pow(cells * g.ht, 1.0 / q);
        } else {
            double acc = 0.0;
            for (int j = 0; j < cells; ++j) acc += std::pow(slice_gap(j), q) * g.ht;
            norm = std::pow(acc, 1.0 / q);
        }
        out.push_back(norm);
    }
    return out;
}

}  // namespace zvonkin
