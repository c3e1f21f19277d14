#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "zvonkin/field.hpp"

namespace zvonkin {

inline double gauss_kernel(double r, const double* x, int dim) {
    require(r > 0.0, "gauss_kernel: r must be positive");
    double q = 0.0;
    for (int k = 0; k < dim; ++k) q += x[k] * x[k];
    return std::pow(2.0 * std::numbers::pi * r, -0.5 * dim) * std::exp(-q / (2.0 * r));
}

// int_0^t exp(-lambda r) dr, stable for small lambda.
inline double exp_int(double lambda, double t) {
    if (lambda == 0.0) return t;
    return -std::expm1(-lambda * t) / lambda;
}

// Symmetric 1-d stencil w[j+W], j in [-W, W]. Application is a clamped
// convolution: (S * F)(x_i) = sum_j w_j F(x_{i-j}) with constant extension.
struct Stencil {
    int W = 0;
    std::vector<double> w;

    double& operator()(int j) { return w[static_cast<std::size_t>(j + W)]; }
    double operator()(int j) const { return w[static_cast<std::size_t>(j + W)]; }
};

inline int stencil_halfwidth(double r, double hx, int max_W) {
    int W = static_cast<int>(std::ceil(6.0 * std::sqrt(r) / hx));
    if (W < 1) W = 1;
    if (W > max_W) W = max_W;
    return W;
}

// Sampled heat kernel at time r, renormalized to unit mass so constants are
// reproduced exactly.
inline Stencil heat_stencil(double r, double hx, int max_W) {
    Stencil s;
    s.W = stencil_halfwidth(r, hx, max_W);
    s.w.assign(static_cast<std::size_t>(2 * s.W + 1), 0.0);
    double sum = 0.0;
    for (int j = -s.W; j <= s.W; ++j) {
        double z = j * hx;
        double v = std::exp(-z * z / (2.0 * r));
        s(j) = v;
        sum += v;
    }
    for (double& v : s.w) v /= sum;
    return s;
}

// Sampled gradient of the heat kernel, antisymmetrized and calibrated so the
// response to F(x) = x is exactly 1 (and to constants exactly 0).
inline Stencil grad_stencil(double r, double hx, int max_W) {
    Stencil s;
    s.W = stencil_halfwidth(r, hx, max_W);
    s.w.assign(static_cast<std::size_t>(2 * s.W + 1), 0.0);
    for (int j = 1; j <= s.W; ++j) {
        double z = j * hx;
        double v = (z / r) * std::exp(-z * z / (2.0 * r));
        s(-j) = v;  // d/dx K at offset -j is positive for z>0 under S*F indexing
        s(j) = -v;
    }
    double response = 0.0;
    for (int j = -s.W; j <= s.W; ++j) response += -j * hx * s(j);
    require(response > 0.0, "grad_stencil: degenerate calibration");
    for (double& v : s.w) v /= response;
    return s;
}

// 1-d convolution along one axis of a (node, channel) slice, clamped at the
// box edge (constant extension).
inline void convolve_axis(const Grid& g, int channels, const double* in, double* out, int axis,
                          const Stencil& st) {
    int m = g.nodes_per_axis();
    long lo = 1;
    for (int k = 0; k < axis; ++k) lo *= m;
    long lines = g.node_count() / m;
    for (long line = 0; line < lines; ++line) {
        long outer = line / lo;
        long inner = line % lo;
        long base = outer * (static_cast<long>(m) * lo) + inner;
        for (int i = 0; i < m; ++i) {
            long node = base + static_cast<long>(i) * lo;
            for (int c = 0; c < channels; ++c) out[node * channels + c] = 0.0;
            for (int j = -st.W; j <= st.W; ++j) {
                int src = std::clamp(i - j, 0, m - 1);
                const double* p = in + (base + static_cast<long>(src) * lo) * channels;
                double w = st(j);
                for (int c = 0; c < channels; ++c) out[node * channels + c] += w * p[c];
            }
        }
    }
}

// K(r) * slice via successive 1-d passes.
inline std::vector<double> kernel_convolve(const Grid& g, int channels, const double* slice,
                                           double r) {
    require(r > 0.0, "kernel_convolve: r must be positive");
    int max_W = g.nodes_per_axis() - 1;
    Stencil st = heat_stencil(r, g.hx, max_W);
    std::vector<double> a(slice, slice + g.node_count() * channels);
    std::vector<double> b(a.size());
    double* src = a.data();
    double* dst = b.data();
    for (int axis = 0; axis < g.dim; ++axis) {
        convolve_axis(g, channels, src, dst, axis, st);
        std::swap(src, dst);
    }
    if (src == a.data()) return a;
    return b;
}

// (d/dx_axis K(r)) * slice: gradient stencil along `axis`, heat stencil along
// the remaining axes.
inline std::vector<double> kernel_grad_convolve(const Grid& g, int channels, const double* slice,
                                                double r, int axis) {
    require(r > 0.0, "kernel_grad_convolve: r must be positive");
    require(axis >= 0 && axis < g.dim, "kernel_grad_convolve: bad axis");
    int max_W = g.nodes_per_axis() - 1;
    Stencil heat = heat_stencil(r, g.hx, max_W);
    Stencil grad = grad_stencil(r, g.hx, max_W);
    std::vector<double> a(slice, slice + g.node_count() * channels);
    std::vector<double> b(a.size());
    double* src = a.data();
    double* dst = b.data();
    for (int k = 0; k < g.dim; ++k) {
        convolve_axis(g, channels, src, dst, k, k == axis ? grad : heat);
        std::swap(src, dst);
    }
    if (src == a.data()) return a;
    return b;
}

// One-sided finite difference along an axis (backward at the upper edge).
inline std::vector<double> one_sided_diff(const Grid& g, int channels, const double* in, int axis) {
    int m = g.nodes_per_axis();
    std::vector<double> out(static_cast<std::size_t>(g.node_count()) * channels, 0.0);
    if (m < 2) return out;
    long lo = 1;
    for (int k = 0; k < axis; ++k) lo *= m;
    long lines = g.node_count() / m;
    for (long line = 0; line < lines; ++line) {
        long outer = line / lo;
        long inner = line % lo;
        long base = outer * (static_cast<long>(m) * lo) + inner;
        for (int i = 0; i < m; ++i) {
            int ia = std::min(i, m - 2);
            const double* hi = in + (base + static_cast<long>(ia + 1) * lo) * channels;
            const double* lp = in + (base + static_cast<long>(ia) * lo) * channels;
            long node = base + static_cast<long>(i) * lo;
            for (int c = 0; c < channels; ++c)
                out[node * channels + c] = (hi[c] - lp[c]) / g.hx;
        }
    }
    return out;
}

struct KernelQuadrature {
    // Time integrals use the substitution r = s^2 (fixed exponent 2), which
    // removes the r^{-1/2} gradient singularity. Below r_min the kernel acts
    // as the identity (one-sided difference in the gradient variant).
    double r_min = -1.0;  // <= 0: use hx^2 / 4
    int nodes_per_unit = 64;

    double resolved_r_min(double hx) const { return r_min > 0.0 ? r_min : hx * hx / 4.0; }

    int panels(double a, double b, double lambda, double t) const {
        double stiff = 1.0 + 0.5 * std::sqrt(std::max(0.0, lambda) * t);
        int p = static_cast<int>(std::ceil(nodes_per_unit * (b - a) * stiff));
        return std::clamp(p, 16, 8192);
    }
};

// Damped Duhamel integral at a single evaluation time:
//   int_0^t exp(-lambda r) (K(r) * F(t-r, .)) dr
// or its gradient along grad_axis. Returns a (node, channel) slice.
inline std::vector<double> duhamel(const SpaceTimeField& F, double t, KernelQuadrature quad = {},
                                   double lambda = 0.0, int grad_axis = -1) {
    const Grid& g = F.grid();
    require(t > 0.0 && t <= g.horizon + 1e-12, "duhamel: t must lie in (0, T]");
    int channels = F.channels();
    long n = g.node_count();
    std::vector<double> acc(static_cast<std::size_t>(n) * channels, 0.0);

    double r_min = quad.resolved_r_min(g.hx);
    auto add_scaled = [&](const std::vector<double>& v, double w) {
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * v[i];
    };

    // identity tail r in [0, min(t, r_min))
    double r_tail = std::min(t, r_min);
    double c_id = exp_int(lambda, r_tail);
    {
        int s = F.slice_at(t - 0.5 * r_tail);
        const double* p = F.slice_data(s);
        if (grad_axis < 0) {
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += c_id * p[i];
        } else {
            add_scaled(one_sided_diff(g, channels, p, grad_axis), c_id);
        }
    }
    if (t <= r_min) return acc;

    double a = std::sqrt(r_min), b = std::sqrt(t);
    int P = quad.panels(a, b, lambda, t);
    double h = (b - a) / P;
    auto integrand = [&](double s, std::vector<double>& out) {
        double r = s * s;
        const double* p = F.slice_data(F.slice_at(t - r));
        if (grad_axis < 0)
            out = kernel_convolve(g, channels, p, r);
        else
            out = kernel_grad_convolve(g, channels, p, r, grad_axis);
        double w = 2.0 * s * std::exp(-lambda * r);
        for (double& v : out) v *= w;
    };
    // composite Simpson in s
    std::vector<double> f0, fm, f1;
    integrand(a, f1);
    for (int i = 0; i < P; ++i) {
        f0 = f1;
        integrand(a + (i + 0.5) * h, fm);
        integrand(a + (i + 1.0) * h, f1);
        double w = h / 6.0;
        for (std::size_t k = 0; k < acc.size(); ++k)
            acc[k] += w * (f0[k] + 4.0 * fm[k] + f1[k]);
    }
    return acc;
}

}  // namespace zvonkin
