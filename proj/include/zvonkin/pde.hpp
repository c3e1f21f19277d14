#pragma once

#include <optional>
#include <string>

#include "zvonkin/heat_kernel.hpp"
#include "zvonkin/norms.hpp"

namespace zvonkin {

// theta = 1 + alpha - 2/q > 0 is the admissibility condition for the
// Lebesgue-Holder data class.
inline double theta_exponent(double alpha, double q) {
    require(alpha > 0.0 && alpha <= 1.0, "theta_exponent: alpha must lie in (0,1]");
    require(q >= 1.0, "theta_exponent: q must be >= 1");
    double theta = 1.0 + alpha - 2.0 / q;
    if (theta <= 0.0)
        throw ConfigError("theta = 1 + alpha - 2/q = " + format_double(theta) +
                          " is not positive: (alpha=" + format_double(alpha) +
                          ", q=" + format_double(q) +
                          ") lies outside the admissible (alpha, q) region");
    return theta;
}

// Cauchy problem  d_t u = 1/2 a_ij d2_ij u + g . grad u - lambda u + h,
// u(0) = 0, with a absent meaning the identity matrix. h may carry several
// channels; they are solved with the same operator.
struct ParabolicProblem {
    std::optional<SpaceTimeField> a;  // d*d channels
    SpaceTimeField g;                 // d channels
    SpaceTimeField h;                 // 1..d channels
    double lambda = 0.0;
    double ellipticity = 0.1;  // two-sided bound constant for a

    const Grid& grid() const { return h.grid(); }

    void validate() const {
        require(g.grid().same_layout(h.grid()), "pde: g and h must share a grid");
        require(g.channels() == h.grid().dim, "pde: g must have d channels");
        require(h.channels() == 1 || h.channels() == h.grid().dim,
                "pde: h must have 1 or d channels");
        if (a) {
            require(a->grid().same_layout(h.grid()), "pde: a and h must share a grid");
            require(a->channels() == h.grid().dim * h.grid().dim, "pde: a must have d*d channels");
            require(ellipticity > 0.0 && ellipticity <= 1.0, "pde: ellipticity must lie in (0,1]");
        }
        theta_exponent(h.alpha(), h.q());
    }
};

struct PdeSolution {
    SpaceTimeField u;       // channels = h channels
    SpaceTimeField grad_u;  // channel layout: source_channel * d + axis
    std::string backend;
    int iterations = 0;
    double residual = 0.0;
    double lambda = 0.0;
};

struct MildOptions {
    double tol = 1e-9;
    int max_iter = 40;
    KernelQuadrature quad{};
};

namespace detail {

// Per-cell propagation kernels for the mild recursion over one time cell:
//   u_{j+1} = e^{-lambda ht} K(ht) * u_j + S(F_j),
// where S integrates e^{-lambda r} K(r) over the cell against the (constant)
// cell value of the source, with the identity fallback below r_min.
struct CellKernels {
    double damp = 1.0;  // e^{-lambda ht}
    Stencil heat;       // K(ht), applied per axis
    double c_id = 0.0;
    double c_kernel = 0.0;
    bool collapsed = false;                        // d == 1 fast path
    Stencil sv;                                    // collapsed value kernel (incl. identity)
    Stencil sg;                                    // collapsed gradient kernel (incl. identity)
    std::vector<std::pair<double, double>> nodes;  // (coef, r) for d >= 2
    double hx = 0.0;
};

inline CellKernels build_cell_kernels(const Grid& g, double lambda, const KernelQuadrature& quad) {
    CellKernels ck;
    ck.hx = g.hx;
    int max_W = g.nodes_per_axis() - 1;
    double ht = g.ht;
    double r_min = quad.resolved_r_min(g.hx);
    require(ht >= r_min, "mild backend: ht below the kernel resolution floor hx^2/4");
    ck.damp = std::exp(-lambda * ht);
    ck.heat = heat_stencil(ht, g.hx, max_W);
    ck.c_id = exp_int(lambda, r_min);
    ck.c_kernel = exp_int(lambda, ht) - ck.c_id;

    double a = std::sqrt(r_min), b = std::sqrt(ht);
    int P = quad.panels(a, b, lambda, ht);
    double h = (b - a) / P;
    std::vector<std::pair<double, double>> nodes;
    for (int i = 0; i < P; ++i) {
        double s0 = a + i * h, sm = s0 + 0.5 * h, s1 = s0 + h;
        nodes.emplace_back(h / 6.0 * 2.0 * s0 * std::exp(-lambda * s0 * s0), s0 * s0);
        nodes.emplace_back(h / 6.0 * 4.0 * 2.0 * sm * std::exp(-lambda * sm * sm), sm * sm);
        nodes.emplace_back(h / 6.0 * 2.0 * s1 * std::exp(-lambda * s1 * s1), s1 * s1);
    }

    if (g.dim == 1) {
        ck.collapsed = true;
        int W = stencil_halfwidth(ht, g.hx, max_W);
        ck.sv.W = W;
        ck.sv.w.assign(static_cast<std::size_t>(2 * W + 1), 0.0);
        ck.sg = ck.sv;
        double coef_sum = 0.0;
        for (auto [coef, r] : nodes) {
            if (r <= 0.0) continue;
            Stencil hs = heat_stencil(r, g.hx, max_W);
            Stencil gs = grad_stencil(r, g.hx, max_W);
            for (int j = -hs.W; j <= hs.W; ++j) ck.sv(j) += coef * hs(j);
            for (int j = -gs.W; j <= gs.W; ++j) ck.sg(j) += coef * gs(j);
            coef_sum += coef;
        }
        // exact-mass / exact-moment calibration, then the identity tail
        double mass = 0.0;
        for (double v : ck.sv.w) mass += v;
        if (mass > 0.0)
            for (double& v : ck.sv.w) v *= ck.c_kernel / mass;
        ck.sv(0) += ck.c_id;
        if (coef_sum > 0.0)
            for (double& v : ck.sg.w) v *= ck.c_kernel / coef_sum;
        ck.sg(-1) += ck.c_id / g.hx;
        ck.sg(0) -= ck.c_id / g.hx;
    } else {
        ck.nodes = std::move(nodes);
    }
    return ck;
}

inline void add_scaled(std::vector<double>& acc, const std::vector<double>& v, double w) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * v[i];
}

// out = damp * K(ht) applied to `in` on every axis.
inline void apply_history(const Grid& g, int channels, const CellKernels& ck, const double* in,
                          std::vector<double>& out, std::vector<double>& scratch) {
    std::size_t sz = static_cast<std::size_t>(g.node_count()) * channels;
    out.resize(sz);
    scratch.resize(sz);
    const double* src = in;
    double* dst = out.data();
    double* alt = scratch.data();
    for (int axis = 0; axis < g.dim; ++axis) {
        convolve_axis(g, channels, src, dst, axis, ck.heat);
        src = dst;
        std::swap(dst, alt);
    }
    if (src != out.data()) std::copy(src, src + sz, out.data());
    for (double& v : out) v *= ck.damp;
}

// acc += S(F) for the cell, value variant (grad_axis < 0) or gradient along
// grad_axis.
inline void apply_source(const Grid& g, int channels, const CellKernels& ck, const double* F,
                         int grad_axis, std::vector<double>& acc) {
    if (ck.collapsed) {
        std::vector<double> tmp(static_cast<std::size_t>(g.node_count()) * channels);
        convolve_axis(g, channels, F, tmp.data(), 0, grad_axis < 0 ? ck.sv : ck.sg);
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += tmp[i];
        return;
    }
    for (auto [coef, r] : ck.nodes) {
        if (r <= 0.0) continue;
        std::vector<double> tmp = grad_axis < 0 ? kernel_convolve(g, channels, F, r)
                                                : kernel_grad_convolve(g, channels, F, r, grad_axis);
        add_scaled(acc, tmp, coef);
    }
    if (grad_axis < 0) {
        for (long i = 0; i < g.node_count() * channels; ++i)
            acc[static_cast<std::size_t>(i)] += ck.c_id * F[i];
    } else {
        add_scaled(acc, one_sided_diff(g, channels, F, grad_axis), ck.c_id);
    }
}

inline bool field_is_zero(const SpaceTimeField& f) {
    for (double v : f.values())
        if (v != 0.0) return false;
    return true;
}

}  // namespace detail

// Mild-formulation solver: Picard iteration from v_0 = 0 on sub-intervals
// short enough that the measured contraction factor stays below 1/2, chained
// to cover [0, T]. Each Picard application evaluates the Duhamel integral by
// exact per-cell semigroup splitting. Requires identity diffusion.
inline PdeSolution solve_mild(const ParabolicProblem& prob, MildOptions opts = {}) {
    prob.validate();
    require(!prob.a, "solve_mild: mild backend requires identity diffusion");
    const Grid& g = prob.grid();
    int d = g.dim;
    int c = prob.h.channels();
    int nt = g.time_count();
    require(nt >= 2, "solve_mild: need at least one time cell");

    detail::CellKernels ck = detail::build_cell_kernels(g, prob.lambda, opts.quad);
    bool g_zero = detail::field_is_zero(prob.g);

    PdeSolution sol;
    sol.backend = "mild";
    sol.lambda = prob.lambda;
    sol.u = SpaceTimeField(g, c, prob.h.alpha(), prob.h.q());
    sol.grad_u = SpaceTimeField(g, c * d, prob.h.alpha(), prob.h.q());

    long n = g.node_count();
    std::size_t usz = static_cast<std::size_t>(n) * c;
    std::size_t gsz = usz * static_cast<std::size_t>(d);
    std::vector<double> F(usz), hist(usz), ghist(gsz), scratch(std::max(usz, gsz));
    std::vector<double> unew(usz), gnew(gsz);

    // assemble F_j = h(t_j) + g(t_j) . grad v(t_j); gv is the gradient of
    // the PREVIOUS Picard iterate at slice j (the fixed solved value when j
    // is the window's left edge)
    auto make_source = [&](int j, const double* gv) {
        const double* hj = prob.h.slice_data(prob.h.slice_at(g.time_at(j)));
        const double* gj = prob.g.slice_data(prob.g.slice_at(g.time_at(j)));
        for (long node = 0; node < n; ++node) {
            for (int ch = 0; ch < c; ++ch) {
                double acc = hj[node * c + ch];
                for (int k = 0; k < d; ++k)
                    acc += gj[node * d + k] * gv[(node * c + ch) * d + k];
                F[static_cast<std::size_t>(node * c + ch)] = acc;
            }
        }
    };

    // one mild step for cell j: writes u(j+1), grad_u(j+1) into unew/gnew
    auto step_cell = [&](int j, const double* gv) {
        make_source(j, gv);
        detail::apply_history(g, c, ck, sol.u.slice_data(j), hist, scratch);
        unew = hist;
        detail::apply_source(g, c, ck, F.data(), -1, unew);
        detail::apply_history(g, c * d, ck, sol.grad_u.slice_data(j), ghist, scratch);
        gnew = ghist;
        // gradient channels: for each axis, gather the axis sub-channels
        for (int axis = 0; axis < d; ++axis) {
            std::vector<double> part(usz, 0.0);
            detail::apply_source(g, c, ck, F.data(), axis, part);
            for (long node = 0; node < n; ++node)
                for (int ch = 0; ch < c; ++ch)
                    gnew[static_cast<std::size_t>((node * c + ch) * d + axis)] +=
                        part[static_cast<std::size_t>(node * c + ch)];
        }
    };

    int total_iters = 0;
    double worst_residual = 0.0;
    int a_cell = 0;
    int window = nt - 1;

    std::vector<double> prev_u, prev_g;
    while (a_cell < nt - 1) {
        int w = std::min(window, nt - 1 - a_cell);
        bool ok = false;
        while (!ok) {
            // reset iterate on the window interior
            for (int j = a_cell + 1; j <= a_cell + w; ++j) {
                std::fill_n(sol.u.slice_data(j), usz, 0.0);
                std::fill_n(sol.grad_u.slice_data(j), gsz, 0.0);
            }
            double prev_delta = -1.0;
            bool halved = false;
            for (int it = 1; it <= opts.max_iter; ++it) {
                ++total_iters;
                // snapshot window
                prev_u.assign(sol.u.slice_data(a_cell + 1),
                              sol.u.slice_data(a_cell + 1) + static_cast<std::size_t>(w) * usz);
                prev_g.assign(sol.grad_u.slice_data(a_cell + 1),
                              sol.grad_u.slice_data(a_cell + 1) + static_cast<std::size_t>(w) * gsz);
                for (int j = a_cell; j < a_cell + w; ++j) {
                    const double* gv = j == a_cell
                                           ? sol.grad_u.slice_data(a_cell)
                                           : prev_g.data() + static_cast<std::size_t>(j - a_cell - 1) * gsz;
                    step_cell(j, gv);
                    std::copy(unew.begin(), unew.end(), sol.u.slice_data(j + 1));
                    std::copy(gnew.begin(), gnew.end(), sol.grad_u.slice_data(j + 1));
                }
                double delta = 0.0;
                {
                    const double* pu = sol.u.slice_data(a_cell + 1);
                    const double* pg = sol.grad_u.slice_data(a_cell + 1);
                    for (std::size_t i = 0; i < prev_u.size(); ++i)
                        delta = std::max(delta, std::abs(pu[i] - prev_u[i]));
                    for (std::size_t i = 0; i < prev_g.size(); ++i)
                        delta = std::max(delta, std::abs(pg[i] - prev_g[i]));
                }
                if (g_zero) {
                    // T does not depend on v; the first pass is the fixed point
                    worst_residual = std::max(worst_residual, 0.0);
                    ok = true;
                    break;
                }
                if (prev_delta >= 0.0 && prev_delta > 0.0) {
                    double factor = delta / prev_delta;
                    if (factor >= 0.5 && delta > opts.tol) {
                        if (w == 1)
                            throw SolverError(
                                "solve_mild: contraction factor " + format_double(factor) +
                                    " >= 1/2 on a single-cell window; refine ht or raise lambda",
                                delta);
                        w = std::max(1, w / 2);
                        window = w;
                        halved = true;
                        break;
                    }
                }
                if (delta <= opts.tol) {
                    worst_residual = std::max(worst_residual, delta);
                    ok = true;
                    break;
                }
                prev_delta = delta;
                if (it == opts.max_iter)
                    throw SolverError("solve_mild: Picard did not reach tol within " +
                                          std::to_string(opts.max_iter) + " iterations",
                                      delta);
            }
            if (halved) continue;
            if (!ok)
                throw SolverError("solve_mild: window failed without convergence", worst_residual);
        }
        a_cell += w;
    }

    sol.iterations = total_iters;
    sol.residual = worst_residual;
    sol.u.check_finite("solve_mild u");
    sol.grad_u.check_finite("solve_mild grad_u");
    return sol;
}

struct FdOptions {
    double tol = 1e-10;
    int max_sweeps = 4000;
};

namespace detail {

// min / max eigenvalue of a small symmetric matrix via Jacobi rotations
inline std::pair<double, double> sym_eigen_bounds(double* m, int d) {
    for (int sweep = 0; sweep < 32; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < d; ++i)
            for (int j = i + 1; j < d; ++j) off += std::abs(m[i * d + j]);
        if (off < 1e-14) break;
        for (int p = 0; p < d; ++p)
            for (int q = p + 1; q < d; ++q) {
                double apq = m[p * d + q];
                if (std::abs(apq) < 1e-18) continue;
                double theta = 0.5 * (m[q * d + q] - m[p * d + p]) / apq;
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double cth = 1.0 / std::sqrt(t * t + 1.0), s = t * cth;
                for (int k = 0; k < d; ++k) {
                    double akp = m[k * d + p], akq = m[k * d + q];
                    m[k * d + p] = cth * akp - s * akq;
                    m[k * d + q] = s * akp + cth * akq;
                }
                for (int k = 0; k < d; ++k) {
                    double apk = m[p * d + k], aqk = m[q * d + k];
                    m[p * d + k] = cth * apk - s * aqk;
                    m[q * d + k] = s * apk + cth * aqk;
                }
            }
    }
    double lo = m[0], hi = m[0];
    for (int i = 1; i < d; ++i) {
        lo = std::min(lo, m[i * d + i]);
        hi = std::max(hi, m[i * d + i]);
    }
    return {lo, hi};
}

}  // namespace detail

// Finite-difference backend: implicit Euler in time, centered second
// differences with the 4-point cross stencil for mixed terms, homogeneous
// Neumann boundary realized by index clamping (constant extension), one
// Gauss-Seidel solve per step.
inline PdeSolution solve_fd(const ParabolicProblem& prob, FdOptions opts = {}) {
    prob.validate();
    const Grid& g = prob.grid();
    int d = g.dim;
    int c = prob.h.channels();
    int nt = g.time_count();
    int m = g.nodes_per_axis();
    long n = g.node_count();

    // ellipticity audit of a (identity trivially passes)
    if (prob.a) {
        double lo_req = prob.ellipticity, hi_req = 1.0 / prob.ellipticity;
        double buf[9];
        double x[3];
        for (int s = 0; s < prob.a->time_slices(); ++s) {
            for (long node = 0; node < n; ++node) {
                for (int i = 0; i < d; ++i)
                    for (int j = 0; j < d; ++j) {
                        double aij = prob.a->at(s, node, i * d + j);
                        double aji = prob.a->at(s, node, j * d + i);
                        if (std::abs(aij - aji) > 1e-12)
                            throw SolverError("solve_fd: diffusion matrix not symmetric at a node");
                        buf[i * d + j] = 0.5 * (aij + aji);
                    }
                auto [lo, hi] = detail::sym_eigen_bounds(buf, d);
                if (lo < lo_req - 1e-9 || hi > hi_req + 1e-9) {
                    g.node_coords(node, x);
                    throw SolverError("solve_fd: ellipticity violated at node x=" +
                                      format_double(x[0]) + " (slice " + std::to_string(s) +
                                      "): eigenvalues [" + format_double(lo) + ", " +
                                      format_double(hi) + "] outside [" + format_double(lo_req) +
                                      ", " + format_double(hi_req) + "]");
                }
            }
        }
    }

    PdeSolution sol;
    sol.backend = "fd";
    sol.lambda = prob.lambda;
    sol.u = SpaceTimeField(g, c, prob.h.alpha(), prob.h.q());
    sol.grad_u = SpaceTimeField(g, c * d, prob.h.alpha(), prob.h.q());

    long stride[3] = {1, m, static_cast<long>(m) * m};
    double hx2 = g.hx * g.hx;
    double ht = g.ht;

    std::vector<double> cur(static_cast<std::size_t>(n), 0.0);
    std::vector<double> rhs(static_cast<std::size_t>(n), 0.0);

    int total_sweeps = 0;
    double worst_res = 0.0;

    std::vector<int> mi(3, 0);
    auto clampn = [&](const std::vector<int>& base, int axis, int off) {
        long idx = 0;
        for (int k = d - 1; k >= 0; --k) {
            int i = base[static_cast<std::size_t>(k)] + (k == axis ? off : 0);
            idx = idx * m + std::clamp(i, 0, m - 1);
        }
        return idx;
    };
    auto clampn2 = [&](const std::vector<int>& base, int ax1, int o1, int ax2, int o2) {
        long idx = 0;
        for (int k = d - 1; k >= 0; --k) {
            int i = base[static_cast<std::size_t>(k)] + (k == ax1 ? o1 : 0) + (k == ax2 ? o2 : 0);
            idx = idx * m + std::clamp(i, 0, m - 1);
        }
        return idx;
    };

    for (int ch = 0; ch < c; ++ch) {
        std::fill(cur.begin(), cur.end(), 0.0);
        for (int j = 0; j < nt - 1; ++j) {
            double t = g.time_at(j);
            int sa = prob.a ? prob.a->slice_at(t) : 0;
            int sg = prob.g.slice_at(t);
            int sh = prob.h.slice_at(t);
            const double* av = prob.a ? prob.a->slice_data(sa) : nullptr;
            const double* gv = prob.g.slice_data(sg);
            const double* hv = prob.h.slice_data(sh);

            for (long node = 0; node < n; ++node)
                rhs[static_cast<std::size_t>(node)] =
                    cur[static_cast<std::size_t>(node)] + ht * hv[node * c + ch];

            // A y = rhs with A = (1 + ht lambda) I - ht L; Gauss-Seidel from the
            // warm start y = cur.
            auto row = [&](long node, const std::vector<double>& y, double& diag, double& off) {
                diag = 1.0 + ht * prob.lambda;
                off = 0.0;
                long rem = node;
                for (int k = 0; k < d; ++k) {
                    mi[static_cast<std::size_t>(k)] = static_cast<int>(rem % m);
                    rem /= m;
                }
                auto touch = [&](long idx, double coef) {
                    if (idx == node)
                        diag += coef;
                    else
                        off += coef * y[static_cast<std::size_t>(idx)];
                };
                for (int k = 0; k < d; ++k) {
                    double akk = av ? av[node * d * d + k * d + k] : 1.0;
                    double w2 = -ht * 0.5 * akk / hx2;
                    touch(clampn(mi, k, +1), w2);
                    touch(clampn(mi, k, -1), w2);
                    touch(node, -2.0 * w2);
                    double gk = gv[node * d + k];
                    double w1 = -ht * gk / (2.0 * g.hx);
                    touch(clampn(mi, k, +1), w1);
                    touch(clampn(mi, k, -1), -w1);
                    for (int l = k + 1; l < d; ++l) {
                        double akl = av ? 0.5 * (av[node * d * d + k * d + l] +
                                                 av[node * d * d + l * d + k])
                                        : 0.0;
                        if (akl == 0.0) continue;
                        double wx = -ht * akl / (4.0 * hx2);
                        touch(clampn2(mi, k, +1, l, +1), wx);
                        touch(clampn2(mi, k, -1, l, -1), wx);
                        touch(clampn2(mi, k, +1, l, -1), -wx);
                        touch(clampn2(mi, k, -1, l, +1), -wx);
                    }
                }
            };

            double tol_abs = opts.tol;
            bool done = false;
            for (int sweep = 0; sweep < opts.max_sweeps && !done; ++sweep) {
                ++total_sweeps;
                for (long node = 0; node < n; ++node) {
                    double diag, off;
                    row(node, cur, diag, off);
                    cur[static_cast<std::size_t>(node)] =
                        (rhs[static_cast<std::size_t>(node)] - off) / diag;
                }
                double res = 0.0;
                for (long node = 0; node < n; ++node) {
                    double diag, off;
                    row(node, cur, diag, off);
                    double r = rhs[static_cast<std::size_t>(node)] -
                               (diag * cur[static_cast<std::size_t>(node)] + off);
                    res = std::max(res, std::abs(r));
                }
                if (res <= tol_abs) {
                    worst_res = std::max(worst_res, res);
                    done = true;
                }
            }
            if (!done)
                throw SolverError("solve_fd: linear solve did not reach residual " +
                                      format_double(opts.tol) + " within " +
                                      std::to_string(opts.max_sweeps) + " sweeps",
                                  opts.tol);
            for (long node = 0; node < n; ++node)
                sol.u.at(j + 1, node, ch) = cur[static_cast<std::size_t>(node)];
        }
    }

    // gradient channel: centered differences, one-sided at the box edge
    for (int j = 0; j < nt; ++j) {
        for (int ch = 0; ch < c; ++ch) {
            for (long node = 0; node < n; ++node) {
                long rem = node;
                for (int k = 0; k < d; ++k) {
                    mi[static_cast<std::size_t>(k)] = static_cast<int>(rem % m);
                    rem /= m;
                }
                for (int k = 0; k < d; ++k) {
                    int i = mi[static_cast<std::size_t>(k)];
                    long up = node + (i + 1 < m ? stride[k] : 0);
                    long dn = node - (i > 0 ? stride[k] : 0);
                    double span = g.hx * ((i + 1 < m ? 1 : 0) + (i > 0 ? 1 : 0));
                    double dv = span > 0.0
                                    ? (sol.u.at(j, up, ch) - sol.u.at(j, dn, ch)) / span
                                    : 0.0;
                    sol.grad_u.at(j, node, ch * d + k) = dv;
                }
            }
        }
    }

    sol.iterations = total_sweeps;
    sol.residual = worst_res;
    sol.u.check_finite("solve_fd u");
    sol.grad_u.check_finite("solve_fd grad_u");
    return sol;
}

// Backend dispatch used by the transform: mild for identity diffusion.
inline PdeSolution solve_parabolic(const ParabolicProblem& prob, MildOptions mild = {},
                                   FdOptions fd = {}) {
    if (!prob.a) return solve_mild(prob, mild);
    return solve_fd(prob, fd);
}

struct ResolventReport {
    bool degenerate = false;
    double fitted_slope = 0.0;
    double theoretical_eps = 0.0;
    std::vector<double> lambdas;
    std::vector<double> sup_grads;  // M(lambda)
};

struct ResolventOptions {
    MildOptions mild{};
    FdOptions fd{};
    double boundary_margin = 0.0;  // ignore nodes within this distance of the box edge
};

// Sup-norm of grad u over grid times and (optionally interior) nodes.
inline double sup_grad_norm(const PdeSolution& sol, double boundary_margin = 0.0) {
    const Grid& g = sol.grad_u.grid();
    long n = g.node_count();
    int ch = sol.grad_u.channels();
    double x[3];
    double best = 0.0;
    for (int j = 0; j < sol.grad_u.time_slices(); ++j) {
        const double* p = sol.grad_u.slice_data(j);
        for (long node = 0; node < n; ++node) {
            if (boundary_margin > 0.0) {
                g.node_coords(node, x);
                bool interior = true;
                for (int k = 0; k < g.dim; ++k)
                    if (g.half_width - std::abs(x[k]) < boundary_margin) interior = false;
                if (!interior) continue;
            }
            double acc = 0.0;
            for (int cc = 0; cc < ch; ++cc) {
                double v = p[node * ch + cc];
                acc += v * v;
            }
            best = std::max(best, acc);
        }
    }
    return std::sqrt(best);
}

// Least-squares slope of log M(lambda) against log lambda, with the
// theoretical decay exponent eps = 1 - 1/q - 1/p1.
inline ResolventReport resolvent_decay(const ParabolicProblem& base,
                                       const std::vector<double>& lambdas,
                                       ResolventOptions opts = {}) {
    require(lambdas.size() >= 2, "resolvent_decay: need at least two lambda values");
    for (double l : lambdas) require(l > 0.0, "resolvent_decay: lambda values must be positive");
    double alpha = base.h.alpha(), q = base.h.q();
    theta_exponent(alpha, q);
    double inv_p1 = 1.0 / (1.0 / (1.0 - alpha) + q / (2.0 * q - 2.0));
    if (!std::isfinite(inv_p1)) inv_p1 = 0.0;

    ResolventReport rep;
    rep.theoretical_eps = 1.0 - 1.0 / q - inv_p1;
    rep.lambdas = lambdas;
    for (double l : lambdas) {
        ParabolicProblem p = base;
        p.lambda = l;
        PdeSolution sol = solve_parabolic(p, opts.mild, opts.fd);
        rep.sup_grads.push_back(sup_grad_norm(sol, opts.boundary_margin));
    }
    double scale = 0.0;
    for (double v : rep.sup_grads) scale = std::max(scale, v);
    if (scale <= 1e-14) {
        rep.degenerate = true;
        return rep;
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    double N = static_cast<double>(lambdas.size());
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        double x = std::log(lambdas[i]);
        double y = std::log(std::max(rep.sup_grads[i], 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    rep.fitted_slope = (N * sxy - sx * sy) / (N * sxx - sx * sx);
    return rep;
}

struct SchauderReport {
    bool skipped = false;
    double theta = 0.0;
    double solution_norm = 0.0;
    double source_norm = 0.0;
    double ratio = 0.0;
};

// Ratio || u ||_{C([0,T]; C^{1,theta})} / || h ||_{L^q(0,T; C^alpha)}.
inline SchauderReport schauder_check(const PdeSolution& sol, const ParabolicProblem& prob,
                                     SeminormOptions opts = {}) {
    SchauderReport rep;
    rep.theta = theta_exponent(prob.h.alpha(), prob.h.q());
    rep.source_norm = lebesgue_holder_norm(prob.h, prob.h.q(), opts);
    if (rep.source_norm == 0.0) {
        rep.skipped = true;
        return rep;
    }
    double best = 0.0;
    for (int j = 0; j < sol.u.time_slices(); ++j) {
        double v = slice_sup_norm(sol.u, j) + slice_sup_norm(sol.grad_u, j) +
                   slice_holder_seminorm(sol.grad_u, j, rep.theta, opts);
        best = std::max(best, v);
    }
    rep.solution_norm = best;
    rep.ratio = rep.solution_norm / rep.source_norm;
    return rep;
}

}  // namespace zvonkin
