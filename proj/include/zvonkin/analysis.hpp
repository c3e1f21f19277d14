#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "zvonkin/sde.hpp"

namespace zvonkin {

namespace detail {

// least squares slope of y against x
inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += (x[i] - mx) * (y[i] - my);
        den += (x[i] - mx) * (x[i] - mx);
    }
    require(den > 0.0, "slope fit needs at least two distinct abscissae");
    return num / den;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// kernel density estimate of a recorded marginal
// ---------------------------------------------------------------------------

struct DensityEstimate {
    double time = 0.0;   // recorded time actually used
    int record = 0;      // index of that record
    int used = 0;        // paths entering the estimate
    int flagged = 0;     // paths dropped because they left the box
    double bandwidth = 0.0;
    double mean = 0.0;
    double sd = 0.0;
    bool degenerate = false;  // sample had (numerically) zero spread
    std::vector<double> ys;   // evaluation grid
    std::vector<double> ps;   // density values
    double mass = 0.0;        // trapezoid integral of ps

    double step() const { return ys.size() > 1 ? ys[1] - ys[0] : 0.0; }
};

// Gaussian kernel estimate of the law of coordinate `coord` at the recorded
// time nearest to t. The estimate is normalised by the total path count, so
// its mass reports the surviving fraction rather than being forced to one.
inline DensityEstimate transition_density(const PathEnsemble& e, double t, int coord = 0,
                                          double bandwidth = 0.0) {
    require(e.dim >= 1 && coord >= 0 && coord < e.dim, "transition_density: bad coordinate");
    require(e.records() >= 1 && e.paths() >= 1, "transition_density: empty ensemble");

    int rec = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < e.records(); ++r) {
        double d = std::abs(e.times[r] - t);
        if (d < best) {
            best = d;
            rec = r;
        }
    }
    require(best <= 0.5 * e.dt * e.record_stride + 1e-9,
            "transition_density: no record near t=" + format_double(t));

    std::vector<double> xs;
    xs.reserve(e.paths());
    for (int p = 0; p < e.paths(); ++p)
        if (!e.escaped[p]) xs.push_back(e.state(p, rec)[coord]);

    DensityEstimate d;
    d.time = e.times[rec];
    d.record = rec;
    d.used = static_cast<int>(xs.size());
    d.flagged = e.paths() - d.used;
    if (d.used == 0)
        throw SimulationError("transition_density: every path left the box, nothing to estimate");

    for (double v : xs) d.mean += v;
    d.mean /= d.used;
    double ss = 0.0;
    for (double v : xs) ss += (v - d.mean) * (v - d.mean);
    d.sd = d.used > 1 ? std::sqrt(ss / (d.used - 1)) : 0.0;

    double floor = 1e-12 * std::max(1.0, std::abs(d.mean));
    d.degenerate = d.sd < floor;
    d.bandwidth = bandwidth > 0.0 ? bandwidth : 1.06 * d.sd * std::pow(double(d.used), -0.2);
    d.bandwidth = std::max(d.bandwidth, floor);

    auto [it_lo, it_hi] = std::minmax_element(xs.begin(), xs.end());
    double lo = *it_lo - 5.0 * d.bandwidth;
    double hi = *it_hi + 5.0 * d.bandwidth;
    long npts = static_cast<long>(std::ceil((hi - lo) / d.bandwidth)) + 1;
    require(npts <= (1L << 20),
            "transition_density: bandwidth too small for the sample range, grid would need " +
                std::to_string(npts) + " points");
    npts = std::max(npts, 2L);
    double h = (hi - lo) / (npts - 1);

    d.ys.resize(npts);
    d.ps.assign(npts, 0.0);
    double norm = 1.0 / (e.paths() * d.bandwidth * std::sqrt(2.0 * std::numbers::pi));
    for (long i = 0; i < npts; ++i) {
        double y = lo + i * h;
        d.ys[i] = y;
        double acc = 0.0;
        for (double v : xs) {
            double u = (y - v) / d.bandwidth;
            acc += std::exp(-0.5 * u * u);
        }
        d.ps[i] = norm * acc;
    }

    for (long i = 0; i + 1 < npts; ++i) d.mass += 0.5 * (d.ps[i] + d.ps[i + 1]) * h;
    return d;
}

// (integral of p^s)^(1/s) over the evaluation grid, trapezoid rule
inline double lebesgue_norm(const DensityEstimate& d, double s) {
    require(s >= 1.0, "lebesgue_norm: order must be at least one");
    require(d.ys.size() >= 2, "lebesgue_norm: estimate has no grid");
    double h = d.step();
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < d.ys.size(); ++i)
        acc += 0.5 * (std::pow(d.ps[i], s) + std::pow(d.ps[i + 1], s)) * h;
    return std::pow(acc, 1.0 / s);
}

// ---------------------------------------------------------------------------
// semigroup action on bounded test functions
// ---------------------------------------------------------------------------

struct TestFunction {
    std::string name;
    std::function<double(const double*, int)> f;
    double sup = 1.0;  // declared bound, |f| <= sup everywhere
};

inline TestFunction half_space_indicator(double c, int coord = 0) {
    return {"half_space(c=" + format_double(c) + ")",
            [c, coord](const double* x, int) { return x[coord] <= c ? 1.0 : 0.0; }, 1.0};
}

inline TestFunction ball_indicator(std::vector<double> center, double radius) {
    require(radius > 0.0, "ball_indicator: radius must be positive");
    return {"ball(r=" + format_double(radius) + ")",
            [center = std::move(center), radius](const double* x, int d) {
                double acc = 0.0;
                for (int k = 0; k < d; ++k) acc += (x[k] - center[k]) * (x[k] - center[k]);
                return acc <= radius * radius ? 1.0 : 0.0;
            },
            1.0};
}

inline TestFunction bounded_cos(std::vector<double> freq) {
    return {"cos", [freq = std::move(freq)](const double* x, int d) {
                double acc = 0.0;
                for (int k = 0; k < d; ++k) acc += freq[k] * x[k];
                return std::cos(acc);
            },
            1.0};
}

struct SemigroupReport {
    std::string fn;
    double horizon = 0.0;
    int paths = 0;
    std::vector<double> starts;   // [count][dim], sorted by position when d = 1
    std::vector<double> means;    // sample mean of f at the terminal point, per start
    std::vector<double> stderrs;  // standard error of each mean
    std::vector<double> diffs;    // |mean_{i+1} - mean_i| for adjacent starts
    std::vector<double> diff_errs;
    double modulus = 0.0;  // largest adjacent difference
    double modulus_err = 0.0;
    double bound = 0.0;  // largest |mean|, can never exceed the declared sup
};

// Monte Carlo view of x -> E f(X_T(x)) over the flow's starting points. The
// adjacent differences probe continuity of the semigroup in the initial
// condition; each comes with a plain two-sigma-free error bar (sum of the
// two standard errors) so a reader can judge significance.
inline SemigroupReport semigroup(const FlowEnsemble& flow, const TestFunction& f) {
    int count = flow.count();
    require(count >= 1 && flow.paths >= 1, "semigroup: empty flow");
    require(static_cast<bool>(f.f), "semigroup: test function is empty");

    std::vector<int> order(count);
    for (int i = 0; i < count; ++i) order[i] = i;
    if (flow.dim == 1)
        std::sort(order.begin(), order.end(),
                  [&](int a, int b) { return flow.x0s[a] < flow.x0s[b]; });

    SemigroupReport r;
    r.fn = f.name;
    r.horizon = flow.horizon;
    r.paths = flow.paths;
    r.starts.reserve(static_cast<std::size_t>(count) * flow.dim);
    for (int i = 0; i < count; ++i) {
        const double* s = flow.start(order[i]);
        r.starts.insert(r.starts.end(), s, s + flow.dim);
        double m = 0.0, ss = 0.0;
        for (int p = 0; p < flow.paths; ++p) m += f.f(flow.final_state(order[i], p), flow.dim);
        m /= flow.paths;
        for (int p = 0; p < flow.paths; ++p) {
            double v = f.f(flow.final_state(order[i], p), flow.dim) - m;
            ss += v * v;
        }
        double sd = flow.paths > 1 ? std::sqrt(ss / (flow.paths - 1)) : 0.0;
        r.means.push_back(m);
        r.stderrs.push_back(sd / std::sqrt(double(flow.paths)));
        r.bound = std::max(r.bound, std::abs(m));
    }
    for (int i = 0; i + 1 < count; ++i) {
        double d = std::abs(r.means[i + 1] - r.means[i]);
        double err = r.stderrs[i] + r.stderrs[i + 1];
        r.diffs.push_back(d);
        r.diff_errs.push_back(err);
        if (d >= r.modulus) {
            r.modulus = d;
            r.modulus_err = err;
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// dyadic chaining estimate of the flow's Holder modulus
// ---------------------------------------------------------------------------

struct ChainReport {
    int depth = 0;   // finest dyadic level of the flow
    double s = 1.0;  // moment order
    double beta = 0.5;
    std::vector<int> levels;            // levels entering the slope fit
    std::vector<double> k_moments;      // E[K_i^s] for those levels
    std::vector<long> pair_counts;      // ordered pairs per level, 2^(i+1)
    double slope = 0.0;                 // d log E[K_i^s] / d log 2^{-i}
    double beta_eff = 0.0;              // slope / s
    double chain_mean = 0.0;            // E[M_beta]
    double chain_max = 0.0;             // worst path
    double chain_bound = 0.0;           // E[2 sum_i 2^{i beta} K_i]
    int violations = 0;                 // paths where M_beta exceeds the ladder bound
};

// Ladder statistics of a dyadic flow. K_i is the per-path maximum, over the
// 2^i adjacent pairs of the level-i grid, of the time-sup separation; the
// modulus M_beta runs over every start pair with distances rescaled to the
// unit interval (index gap / 2^m). The pathwise chaining inequality
//   M_beta <= 2 sum_{i<=m} 2^(i beta) K_i
// is an identity of the construction (pick the level j where 2^{-j} first
// drops under the pair distance; the two-cell connector at that level costs
// 2 K_j, exactly the coefficient the sum provides) and is checked on every
// path; violations should stay at zero.
inline ChainReport chain_holder(const FlowEnsemble& flow, double s, double beta,
                                std::vector<int> levels = {}) {
    require(flow.dim == 1, "chain_holder: flow must be one dimensional");
    require(flow.depth >= 1, "chain_holder: flow was not built on a dyadic grid");
    require(s > 0.0, "chain_holder: moment order must be positive");
    require(beta > 0.0 && beta <= 1.0, "chain_holder: beta must lie in (0, 1]");
    int m = flow.depth;
    require(flow.count() == (1 << m) + 1, "chain_holder: start count does not match the depth");

    if (levels.empty())
        for (int i = 0; i <= m; ++i) levels.push_back(i);
    require(levels.size() >= 2, "chain_holder: need at least two levels for the slope");
    for (std::size_t j = 0; j < levels.size(); ++j) {
        require(levels[j] >= 0 && levels[j] <= m, "chain_holder: level out of range");
        if (j) require(levels[j] > levels[j - 1], "chain_holder: levels must increase");
    }

    ChainReport r;
    r.depth = m;
    r.s = s;
    r.beta = beta;
    r.levels = levels;

    int paths = flow.paths;
    // K[i][p], all levels are needed for the ladder bound
    std::vector<std::vector<double>> K(m + 1, std::vector<double>(paths, 0.0));
    for (int i = 0; i <= m; ++i) {
        int stride = 1 << (m - i);
        for (int q = 0; q < (1 << i); ++q) {
            int k = flow.pair_index(q * stride, (q + 1) * stride);
            for (int p = 0; p < paths; ++p)
                K[i][p] = std::max(K[i][p], flow.sup_distance(k, p));
        }
    }

    std::vector<double> lx, ly;
    for (int i : levels) {
        double mom = 0.0;
        for (int p = 0; p < paths; ++p) mom += std::pow(K[i][p], s);
        mom /= paths;
        require(mom > 0.0, "chain_holder: vanishing moment at level " + std::to_string(i));
        r.k_moments.push_back(mom);
        r.pair_counts.push_back(2L << i);
        lx.push_back(-i * std::log(2.0));
        ly.push_back(std::log(mom));
    }
    r.slope = detail::ls_slope(lx, ly);
    r.beta_eff = r.slope / s;

    double scale = 1.0 / (1 << m);
    int viol = 0;
    for (int p = 0; p < paths; ++p) {
        double mb = 0.0;
        for (int k = 0; k < flow.pairs(); ++k) {
            double gap = (flow.pair_b[k] - flow.pair_a[k]) * scale;
            mb = std::max(mb, flow.sup_distance(k, p) / std::pow(gap, beta));
        }
        double ladder = 0.0;
        for (int i = 0; i <= m; ++i) ladder += std::pow(2.0, i * beta) * K[i][p];
        r.chain_mean += mb;
        r.chain_max = std::max(r.chain_max, mb);
        r.chain_bound += 2.0 * ladder;
        if (mb > 2.0 * ladder * (1.0 + 1e-12)) ++viol;
    }
    r.chain_mean /= paths;
    r.chain_bound /= paths;
    r.violations = viol;
    return r;
}

// ---------------------------------------------------------------------------
// difference quotients of the flow in its initial condition
// ---------------------------------------------------------------------------

struct WeakDerivativeReport {
    double horizon = 0.0;
    int paths = 0;
    std::vector<double> deltas;
    std::vector<double> norms;  // ||(X(x0 + delta e0) - X(x0)) / delta|| in L2(P x (0,T))
    std::vector<double> gaps;   // distance between consecutive difference quotients
    double bound = 0.0;         // largest norm
    bool gaps_decreasing = false;
};

// Difference quotients D_delta(t) = (X_t(x0 + delta e0) - X_t(x0)) / delta
// for a decreasing list of offsets, all runs sharing the noise path by path.
// Norms use the right endpoint rule in time and the sample mean over paths.
// The gaps between consecutive quotients are what a Cauchy argument needs.
inline WeakDerivativeReport weak_derivative(const Scheme& scheme, const std::vector<double>& x0,
                                            const std::vector<double>& deltas,
                                            const SimOptions& opts) {
    const Grid& g = scheme.grid();
    int d = g.dim;
    require(static_cast<int>(x0.size()) == d, "weak_derivative: x0 must have d entries");
    require(!deltas.empty(), "weak_derivative: need at least one offset");
    for (std::size_t j = 0; j < deltas.size(); ++j) {
        require(deltas[j] > 0.0, "weak_derivative: offsets must be positive");
        if (j) require(deltas[j] < deltas[j - 1], "weak_derivative: offsets must decrease");
    }
    require(opts.steps >= 1 && opts.paths >= 1,
            "weak_derivative: steps and paths must be positive");

    int J = static_cast<int>(deltas.size());
    int count = J + 1;  // base start plus one per offset
    double dt = g.horizon / opts.steps;

    // per path accumulators: J quotient norms then J-1 gap norms
    std::vector<double> acc(static_cast<std::size_t>(opts.paths) * (2 * J - 1), 0.0);

    parallel_for(opts.paths, [&](long p) {
        BrownianPath w(opts.seed, static_cast<std::uint64_t>(p), d, opts.steps, dt);
        std::vector<double> state(static_cast<std::size_t>(count) * d);
        std::vector<double> out(state.size());
        scheme.init(x0.data(), state.data());
        for (int j = 0; j < J; ++j) {
            std::vector<double> shifted = x0;
            shifted[0] += deltas[j];
            scheme.init(shifted.data(), state.data() + static_cast<std::size_t>(j + 1) * d);
        }
        double* a = acc.data() + static_cast<std::size_t>(p) * (2 * J - 1);
        for (int n = 0; n < opts.steps; ++n) {
            const double* dw = w.increment(n);
            for (int i = 0; i < count; ++i) {
                double* s = state.data() + static_cast<std::size_t>(i) * d;
                scheme.advance(n * dt, dt, dw, s);
                for (int k = 0; k < d; ++k)
                    if (!std::isfinite(s[k]))
                        throw SimulationError("weak_derivative: path " + std::to_string(p) +
                                              " step " + std::to_string(n + 1) +
                                              " produced a non-finite value");
            }
            double t = (n + 1) * dt;
            for (int i = 0; i < count; ++i)
                scheme.output(t, state.data() + static_cast<std::size_t>(i) * d,
                              out.data() + static_cast<std::size_t>(i) * d);
            const double* base = out.data();
            for (int j = 0; j < J; ++j) {
                const double* xj = out.data() + static_cast<std::size_t>(j + 1) * d;
                double q2 = 0.0;
                for (int k = 0; k < d; ++k) {
                    double q = (xj[k] - base[k]) / deltas[j];
                    q2 += q * q;
                }
                a[j] += q2 * dt;
                if (j + 1 < J) {
                    const double* xn = out.data() + static_cast<std::size_t>(j + 2) * d;
                    double g2 = 0.0;
                    for (int k = 0; k < d; ++k) {
                        double diff = (xj[k] - base[k]) / deltas[j] -
                                      (xn[k] - base[k]) / deltas[j + 1];
                        g2 += diff * diff;
                    }
                    a[J + j] += g2 * dt;
                }
            }
        }
    });

    WeakDerivativeReport r;
    r.horizon = g.horizon;
    r.paths = opts.paths;
    r.deltas = deltas;
    for (int j = 0; j < 2 * J - 1; ++j) {
        double mean = 0.0;
        for (int p = 0; p < opts.paths; ++p)
            mean += acc[static_cast<std::size_t>(p) * (2 * J - 1) + j];
        mean /= opts.paths;
        double v = std::sqrt(mean);
        if (j < J) {
            r.norms.push_back(v);
            r.bound = std::max(r.bound, v);
        } else {
            r.gaps.push_back(v);
        }
    }
    r.gaps_decreasing = true;
    for (std::size_t j = 0; j + 1 < r.gaps.size(); ++j)
        if (r.gaps[j + 1] > r.gaps[j] * (1.0 + 1e-9)) r.gaps_decreasing = false;
    return r;
}

// ---------------------------------------------------------------------------
// nonconfluence of two solutions and the monotonicity hypotheses behind it
// ---------------------------------------------------------------------------

struct MonotoneWitnesses {
    // phi with (sigma(x) - sigma(y))^2 <= (x - y)(phi(x) - phi(y))
    std::function<double(double)> sigma_witness;
    // varphi with |b(x) - b(y)| <= |varphi(x) - varphi(y)|, varphi monotone
    std::function<double(double)> drift_witness;
};

struct NonconfluenceReport {
    int paths = 0;
    double dt = 0.0;
    double threshold = 0.0;        // ten times the scheme's error scale sqrt(dt)
    double min_separation = 0.0;   // over all paths and all steps
    int paths_below = 0;           // paths whose minimum dipped under the threshold
    bool h1_checked = false;       // diffusion monotonicity audit ran
    bool h1_ok = false;
    double h1_worst = 0.0;         // largest violation of the h1 inequality
    bool h2_ok = false;            // diffusion bounded away from zero on the grid
    double sigma_min = 0.0;
    bool h3_checked = false;       // drift modulus audit ran
    bool h3_ok = false;
    double h3_worst = 0.0;
    std::vector<std::string> warnings;
};

// Two copies of the scheme started at a and b, driven by identical noise,
// with the running minimum of their separation tracked at every step. A
// minimum that stays an order of magnitude above the scheme's own error
// scale sqrt(dt) is evidence the exact solutions never meet. The structural
// hypotheses are audited on the sampled coefficient grid when monotone
// witnesses are supplied, and skipped with a warning when they are not.
inline NonconfluenceReport nonconfluence(const Scheme& scheme, const SdeProblem& prob, double a,
                                         double b, const SimOptions& opts,
                                         const MonotoneWitnesses& wit = {}) {
    const Grid& g = scheme.grid();
    require(g.dim == 1, "nonconfluence: separation tracking is one dimensional");
    require(opts.steps >= 1 && opts.paths >= 1, "nonconfluence: steps and paths must be positive");
    require(a != b, "nonconfluence: starts must differ");

    double dt = g.horizon / opts.steps;
    NonconfluenceReport r;
    r.paths = opts.paths;
    r.dt = dt;
    r.threshold = 10.0 * std::sqrt(dt);

    std::vector<double> path_min(opts.paths, std::numeric_limits<double>::infinity());
    parallel_for(opts.paths, [&](long p) {
        BrownianPath w(opts.seed, static_cast<std::uint64_t>(p), 1, opts.steps, dt);
        double sa, sb, oa, ob;
        scheme.init(&a, &sa);
        scheme.init(&b, &sb);
        scheme.output(0.0, &sa, &oa);
        scheme.output(0.0, &sb, &ob);
        double mn = std::abs(oa - ob);
        for (int n = 0; n < opts.steps; ++n) {
            const double* dw = w.increment(n);
            scheme.advance(n * dt, dt, dw, &sa);
            scheme.advance(n * dt, dt, dw, &sb);
            if (!std::isfinite(sa) || !std::isfinite(sb))
                throw SimulationError("nonconfluence: path " + std::to_string(p) + " step " +
                                      std::to_string(n + 1) + " produced a non-finite value");
            double t = (n + 1) * dt;
            scheme.output(t, &sa, &oa);
            scheme.output(t, &sb, &ob);
            mn = std::min(mn, std::abs(oa - ob));
        }
        path_min[p] = mn;
    });

    r.min_separation = *std::min_element(path_min.begin(), path_min.end());
    for (double v : path_min)
        if (v < r.threshold) ++r.paths_below;

    // coefficient audits on the sampled grid, a subsample of time slices
    const Grid& pg = prob.b.grid();
    int nx = pg.nodes_per_axis();
    int nt_s = prob.sigma ? prob.sigma->time_slices() : 1;
    int nt_b = prob.b.time_slices();
    auto slice_stride = [](int nt) { return std::max(1, (nt - 1) / 8); };
    auto sigma_at = [&](int slice, int node) {
        return prob.sigma ? prob.sigma->at(slice, node, 0) : 1.0;
    };

    r.sigma_min = std::numeric_limits<double>::infinity();
    for (int sl = 0; sl < nt_s; sl += slice_stride(nt_s))
        for (int i = 0; i < nx; ++i) r.sigma_min = std::min(r.sigma_min, std::abs(sigma_at(sl, i)));
    r.h2_ok = r.sigma_min > 0.0;

    if (wit.sigma_witness) {
        r.h1_checked = true;
        double worst = -std::numeric_limits<double>::infinity();
        std::vector<double> phi(nx);
        for (int i = 0; i < nx; ++i) phi[i] = wit.sigma_witness(pg.coord(i));
        for (int sl = 0; sl < nt_s; sl += slice_stride(nt_s))
            for (int i = 0; i < nx; ++i)
                for (int j = i + 1; j < nx; ++j) {
                    double ds = sigma_at(sl, i) - sigma_at(sl, j);
                    double rhs = (pg.coord(i) - pg.coord(j)) * (phi[i] - phi[j]);
                    worst = std::max(worst, ds * ds - rhs);
                }
        r.h1_worst = worst;
        r.h1_ok = worst <= 1e-9;
    } else {
        r.warnings.push_back("no monotone witness declared for the diffusion, audit skipped");
    }

    if (wit.drift_witness) {
        r.h3_checked = true;
        double worst = -std::numeric_limits<double>::infinity();
        std::vector<double> vp(nx);
        for (int i = 0; i < nx; ++i) vp[i] = wit.drift_witness(pg.coord(i));
        for (int sl = 0; sl < nt_b; sl += slice_stride(nt_b))
            for (int i = 0; i < nx; ++i)
                for (int j = i + 1; j < nx; ++j) {
                    double db = std::abs(prob.b.at(sl, i, 0) - prob.b.at(sl, j, 0));
                    worst = std::max(worst, db - std::abs(vp[i] - vp[j]));
                }
        r.h3_worst = worst;
        r.h3_ok = worst <= 1e-9;
    } else {
        r.warnings.push_back("no monotone witness declared for the drift, audit skipped");
    }

    return r;
}

// ---------------------------------------------------------------------------
// injectivity of the terminal flow map
// ---------------------------------------------------------------------------

struct HomeomorphismReport {
    int paths = 0;
    int count = 0;
    bool order_checked = false;  // only meaningful in one dimension
    int order_violations = 0;    // adjacent images out of order, over all paths
    double min_image_gap = 0.0;  // smallest adjacent image distance seen
    double neg_moment_worst = 0.0;  // max over pairs of E[dist^-2] * gap^2
    int clipped = 0;                // distances raised to the floor before inverting
    double clip_floor = 0.0;
};

// Reads the terminal positions of a flow and checks that the map stayed
// injective: adjacent starts must land in order (d = 1), never collide, and
// the inverse square moment of the image distance, scaled by the starting
// gap, must stay finite. Distances below a machine floor are clipped before
// inversion and the clip count is reported rather than hidden.
inline HomeomorphismReport homeomorphism_audit(const FlowEnsemble& flow) {
    int count = flow.count();
    require(count >= 2 && flow.paths >= 1, "homeomorphism_audit: need at least two starts");
    int d = flow.dim;

    std::vector<int> order(count);
    for (int i = 0; i < count; ++i) order[i] = i;
    if (d == 1)
        std::sort(order.begin(), order.end(),
                  [&](int a, int b) { return flow.x0s[a] < flow.x0s[b]; });

    double span2 = 0.0;
    for (int k = 0; k < d; ++k) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (int i = 0; i < count; ++i) {
            lo = std::min(lo, flow.start(i)[k]);
            hi = std::max(hi, flow.start(i)[k]);
        }
        span2 += (hi - lo) * (hi - lo);
    }

    HomeomorphismReport r;
    r.paths = flow.paths;
    r.count = count;
    r.order_checked = d == 1;
    r.clip_floor = std::numeric_limits<double>::epsilon() * std::sqrt(span2);
    r.min_image_gap = std::numeric_limits<double>::infinity();

    for (int i = 0; i + 1 < count; ++i) {
        const double* xa = flow.start(order[i]);
        const double* xb = flow.start(order[i + 1]);
        double gap2 = 0.0;
        for (int k = 0; k < d; ++k) gap2 += (xb[k] - xa[k]) * (xb[k] - xa[k]);
        double acc = 0.0;
        for (int p = 0; p < flow.paths; ++p) {
            const double* fa = flow.final_state(order[i], p);
            const double* fb = flow.final_state(order[i + 1], p);
            double dist2 = 0.0;
            for (int k = 0; k < d; ++k) dist2 += (fb[k] - fa[k]) * (fb[k] - fa[k]);
            double dist = std::sqrt(dist2);
            r.min_image_gap = std::min(r.min_image_gap, dist);
            if (d == 1 && fb[0] - fa[0] <= 0.0) ++r.order_violations;
            if (dist < r.clip_floor) {
                dist = r.clip_floor;
                ++r.clipped;
            }
            acc += 1.0 / (dist * dist);
        }
        r.neg_moment_worst = std::max(r.neg_moment_worst, (acc / flow.paths) * gap2);
    }
    return r;
}

}  // namespace zvonkin
