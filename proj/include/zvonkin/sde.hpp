#pragma once

#include "zvonkin/brownian.hpp"
#include "zvonkin/mollifier.hpp"
#include "zvonkin/transform.hpp"

namespace zvonkin {

struct SdeProblem {
    SpaceTimeField b;                     // drift, d channels
    std::optional<SpaceTimeField> sigma;  // d*d channels, row major; absent = identity
    std::vector<double> x0;

    const Grid& grid() const { return b.grid(); }

    void validate() const {
        const Grid& g = b.grid();
        require(b.channels() == g.dim, "sde: drift must have d channels");
        require(static_cast<int>(x0.size()) == g.dim, "sde: x0 must have d entries");
        if (sigma) {
            require(sigma->channels() == g.dim * g.dim, "sde: sigma must have d*d channels");
            require(sigma->grid().same_layout(g), "sde: sigma must share the drift grid");
        }
    }
};

// a = sigma sigma^T per node, the diffusion matrix the transform solve needs
inline SpaceTimeField sigma_squared(const SpaceTimeField& sigma) {
    const Grid& g = sigma.grid();
    int d = g.dim;
    require(sigma.channels() == d * d, "sigma_squared: input must have d*d channels");
    SpaceTimeField a(g, d * d, sigma.alpha(), sigma.q(), sigma.time_constant());
    long n = g.node_count();
    for (int s = 0; s < sigma.time_slices(); ++s) {
        const double* in = sigma.slice_data(s);
        double* out = a.slice_data(s);
        for (long node = 0; node < n; ++node) {
            const double* m = in + node * d * d;
            double* o = out + node * d * d;
            for (int i = 0; i < d; ++i)
                for (int k = 0; k < d; ++k) {
                    double acc = 0.0;
                    for (int j = 0; j < d; ++j) acc += m[i * d + j] * m[k * d + j];
                    o[i * d + k] = acc;
                }
        }
    }
    return a;
}

inline DriftDiffusion transform_input(const SdeProblem& p, double ellipticity = 0.1) {
    p.validate();
    DriftDiffusion in;
    in.b = p.b;
    if (p.sigma) in.a = sigma_squared(*p.sigma);
    in.ellipticity = ellipticity;
    return in;
}

// Both coefficients smoothed at level n (spatial convolution with the scaled
// bump); constants and anything below the grid resolution pass through.
inline SdeProblem mollified_problem(const SdeProblem& p, int level) {
    p.validate();
    Mollifier moll(level);
    SdeProblem out;
    out.b = mollify(p.b, moll);
    if (p.sigma) out.sigma = mollify(*p.sigma, moll);
    out.x0 = p.x0;
    return out;
}

namespace detail {

inline void apply_sigma(const std::optional<SpaceTimeField>& sigma, double t, const double* x,
                        const double* dw, int d, double* out) {
    if (!sigma) {
        std::copy(dw, dw + d, out);
        return;
    }
    double sv[9];
    sigma->eval_all(t, x, sv);
    for (int i = 0; i < d; ++i) {
        double acc = 0.0;
        for (int j = 0; j < d; ++j) acc += sv[i * d + j] * dw[j];
        out[i] = acc;
    }
}

}  // namespace detail

// One time-stepping rule. `state` is the scheme's internal variable; `output`
// maps it to the reported position (they differ for the transformed walk).
class Scheme {
  public:
    virtual ~Scheme() = default;
    virtual const Grid& grid() const = 0;
    virtual std::string name() const = 0;
    virtual void init(const double* x0, double* state) const = 0;
    virtual void advance(double t, double dt, const double* dw, double* state) const = 0;
    virtual void output(double t, const double* state, double* out) const = 0;
};

class EulerScheme final : public Scheme {
  public:
    explicit EulerScheme(const SdeProblem& p) : p_(&p) { p.validate(); }

    const Grid& grid() const override { return p_->grid(); }
    std::string name() const override { return "euler"; }

    void init(const double* x0, double* state) const override {
        std::copy(x0, x0 + grid().dim, state);
    }

    void advance(double t, double dt, const double* dw, double* state) const override {
        int d = grid().dim;
        double bv[3], sdw[3];
        p_->b.eval_all(t, state, bv);
        detail::apply_sigma(p_->sigma, t, state, dw, d, sdw);
        for (int k = 0; k < d; ++k) state[k] += bv[k] * dt + sdw[k];
    }

    void output(double, const double* state, double* out) const override {
        std::copy(state, state + grid().dim, out);
    }

  private:
    const SdeProblem* p_;
};

// Walks Y_t = Phi(t, X_t), whose drift is the damped remainder lambda U: the
// rough drift b is absorbed into the space shift. Positions are reported
// through the inverse map unless raw_output asks for Y itself.
class TransformedScheme final : public Scheme {
  public:
    TransformedScheme(const Transform& tr, const SdeProblem& p, bool raw_output = false)
        : tr_(&tr), p_(&p), raw_(raw_output) {
        p.validate();
        require(tr.grid().dim == p.grid().dim, "transformed scheme: dimension mismatch");
        require(std::abs(tr.grid().horizon - p.grid().horizon) < 1e-12,
                "transformed scheme: transform and problem horizons differ");
        if (!tr.certificate().admissible())
            throw CertificateError("transformed scheme requires an admissible certificate");
    }

    const Grid& grid() const override { return p_->grid(); }
    std::string name() const override { return raw_ ? "transformed-y" : "transformed"; }

    void init(const double* x0, double* state) const override { tr_->phi(0.0, x0, state); }

    void advance(double t, double dt, const double* dw, double* state) const override {
        int d = grid().dim;
        double x[3], u[3], sdw[3], gu[9];
        tr_->psi(t, state, x);
        tr_->eval_u(t, x, u);
        tr_->eval_grad_u(t, x, gu);
        detail::apply_sigma(p_->sigma, t, x, dw, d, sdw);
        double lambda = tr_->lambda();
        for (int i = 0; i < d; ++i) {
            double diff = sdw[i];
            for (int k = 0; k < d; ++k) diff += gu[i * d + k] * sdw[k];
            state[i] += lambda * u[i] * dt + diff;
        }
    }

    void output(double t, const double* state, double* out) const override {
        if (raw_)
            std::copy(state, state + grid().dim, out);
        else
            tr_->psi(t, state, out);
    }

    double lambda() const { return tr_->lambda(); }

  private:
    const Transform* tr_;
    const SdeProblem* p_;
    bool raw_;
};

struct SimOptions {
    int steps = 1000;
    int paths = 1;
    std::uint64_t seed = 1;
    int record_stride = 1;     // record every k-th step; the final step is always kept
    double box_factor = 2.0;   // flag recorded positions beyond box_factor * half_width
    double memory_budget_mb = 256.0;
};

struct PathEnsemble {
    int dim = 0;
    int steps = 0;
    int record_stride = 1;
    double dt = 0.0;
    std::uint64_t seed = 0;
    std::string scheme;
    int mollification = -1;        // level n when coefficients were smoothed
    double transform_lambda = 0.0; // damping when the transformed scheme ran
    std::vector<double> times;           // recorded times, starting at 0
    std::vector<double> states;          // [path][record][dim]
    std::vector<std::uint8_t> escaped;   // recorded position left the flag box at some time
    std::uint64_t noise_checksum = 0;

    int paths() const { return static_cast<int>(escaped.size()); }
    int records() const { return static_cast<int>(times.size()); }
    const double* state(int path, int rec) const {
        return states.data() +
               (static_cast<std::size_t>(path) * records() + rec) * static_cast<std::size_t>(dim);
    }
};

inline PathEnsemble simulate(const Scheme& scheme, const std::vector<double>& x0,
                             const SimOptions& opts) {
    const Grid& g = scheme.grid();
    int d = g.dim;
    require(static_cast<int>(x0.size()) == d, "simulate: x0 must have d entries");
    require(opts.steps >= 1, "simulate: steps must be positive");
    require(opts.paths >= 1, "simulate: paths must be positive");
    require(opts.record_stride >= 1, "simulate: record_stride must be positive");

    double dt = g.horizon / opts.steps;

    std::vector<int> rec_steps;
    for (int j = 0; j <= opts.steps; j += opts.record_stride) rec_steps.push_back(j);
    if (rec_steps.back() != opts.steps) rec_steps.push_back(opts.steps);
    int nrec = static_cast<int>(rec_steps.size());

    double need_mb = static_cast<double>(opts.paths) * nrec * d * sizeof(double) / (1024.0 * 1024.0);
    require(need_mb <= opts.memory_budget_mb,
            "simulate: ensemble needs " + format_double(need_mb) + " MB, budget is " +
                format_double(opts.memory_budget_mb) + " MB (raise memory_budget_mb or the stride)");

    PathEnsemble e;
    e.dim = d;
    e.steps = opts.steps;
    e.record_stride = opts.record_stride;
    e.dt = dt;
    e.seed = opts.seed;
    e.scheme = scheme.name();
    e.times.resize(nrec);
    for (int r = 0; r < nrec; ++r) e.times[r] = rec_steps[r] * dt;
    e.states.resize(static_cast<std::size_t>(opts.paths) * nrec * d);
    e.escaped.assign(opts.paths, 0);

    std::vector<std::uint64_t> path_sums(opts.paths);
    double limit = opts.box_factor * g.half_width;

    parallel_for(opts.paths, [&](long p) {
        BrownianPath w(opts.seed, static_cast<std::uint64_t>(p), d, opts.steps, dt);
        path_sums[p] = w.checksum();
        double state[3], out[3];
        scheme.init(x0.data(), state);
        int r = 0;
        for (int j = 0; j <= opts.steps; ++j) {
            if (j == rec_steps[r]) {
                scheme.output(j * dt, state, out);
                double* dst = e.states.data() +
                              (static_cast<std::size_t>(p) * nrec + r) * static_cast<std::size_t>(d);
                for (int k = 0; k < d; ++k) {
                    dst[k] = out[k];
                    if (std::abs(out[k]) > limit) e.escaped[p] = 1;
                }
                ++r;
            }
            if (j < opts.steps) {
                scheme.advance(j * dt, dt, w.increment(j), state);
                for (int k = 0; k < d; ++k)
                    if (!std::isfinite(state[k]))
                        throw SimulationError("simulate: path " + std::to_string(p) + " step " +
                                              std::to_string(j + 1) +
                                              " produced a non-finite value");
            }
        }
    });

    e.noise_checksum = fnv1a64(path_sums.data(), path_sums.size() * sizeof(std::uint64_t));
    return e;
}

// Euler run of the level-n smoothed problem, provenance included.
inline PathEnsemble simulate_mollified(const SdeProblem& p, int level, const SimOptions& opts) {
    SdeProblem smooth = mollified_problem(p, level);
    EulerScheme scheme(smooth);
    PathEnsemble e = simulate(scheme, smooth.x0, opts);
    e.mollification = level;
    return e;
}

struct TransformedRun {
    PathEnsemble y;  // the transformed walk itself
    PathEnsemble x;  // mapped back through the inverse, records X_t = Psi(t, Y_t)
};

inline TransformedRun simulate_transformed(const Transform& tr, const SdeProblem& p,
                                           const SimOptions& opts) {
    TransformedScheme raw(tr, p, true);
    TransformedScheme mapped(tr, p, false);
    TransformedRun run{simulate(raw, p.x0, opts), simulate(mapped, p.x0, opts)};
    run.y.transform_lambda = tr.lambda();
    run.x.transform_lambda = tr.lambda();
    require(run.y.noise_checksum == run.x.noise_checksum,
            "transformed simulation lost noise alignment");
    return run;
}

struct CoupledEnsembles {
    PathEnsemble original;
    PathEnsemble transformed;
};

// Both walks consume the identical noise (paths are regenerated from the same
// seed and index), so pathwise differences measure the schemes, not the RNG.
inline CoupledEnsembles simulate_coupled(const SdeProblem& p, const Transform& tr,
                                         const SimOptions& opts) {
    EulerScheme euler(p);
    TransformedScheme transformed(tr, p);
    CoupledEnsembles out{simulate(euler, p.x0, opts), simulate(transformed, p.x0, opts)};
    out.transformed.transform_lambda = tr.lambda();
    require(out.original.noise_checksum == out.transformed.noise_checksum,
            "coupled simulation lost noise alignment");
    return out;
}

struct FlowEnsemble {
    int dim = 0;
    int paths = 0;
    int depth = -1;  // dyadic depth m when the grid is D_m
    double horizon = 0.0;
    std::vector<double> x0s;     // [count][dim]
    std::vector<double> finals;  // [x0][path][dim]
    // sup over simulated times of |X_t(x_a) - X_t(x_b)| for every unordered
    // start pair, the raw material of the chaining and modulus estimators
    std::vector<int> pair_a, pair_b;
    std::vector<double> pair_sup;  // [pair][path]

    int count() const { return dim ? static_cast<int>(x0s.size()) / dim : 0; }
    int pairs() const { return static_cast<int>(pair_a.size()); }
    const double* start(int i) const { return x0s.data() + static_cast<std::size_t>(i) * dim; }
    const double* final_state(int i, int p) const {
        return finals.data() +
               (static_cast<std::size_t>(i) * paths + p) * static_cast<std::size_t>(dim);
    }
    double sup_distance(int pair, int p) const {
        return pair_sup[static_cast<std::size_t>(pair) * paths + p];
    }
    int pair_index(int a, int b) const {
        if (a > b) std::swap(a, b);
        for (int k = 0; k < pairs(); ++k)
            if (pair_a[k] == a && pair_b[k] == b) return k;
        throw ConfigError("flow_grid: no such start pair");
    }
};

// Terminal positions of the flow map x0 -> X_T(x0) over a set of starting
// points, with the noise shared across starting points path by path. All
// starts advance in lockstep so pairwise separations are tracked over time.
inline FlowEnsemble flow_grid(const Scheme& scheme, const std::vector<double>& x0s,
                              const SimOptions& opts) {
    const Grid& g = scheme.grid();
    int d = g.dim;
    require(!x0s.empty() && x0s.size() % static_cast<std::size_t>(d) == 0,
            "flow_grid: starting points must come in groups of d");
    require(opts.steps >= 1 && opts.paths >= 1, "flow_grid: steps and paths must be positive");

    int count = static_cast<int>(x0s.size()) / d;
    require(count <= 128, "flow_grid: at most 128 starting points");
    int npairs = count * (count - 1) / 2;
    double need_mb = (static_cast<double>(count) * opts.paths * d +
                      static_cast<double>(npairs) * opts.paths) *
                     sizeof(double) / (1024.0 * 1024.0);
    require(need_mb <= opts.memory_budget_mb,
            "flow_grid: ensemble needs " + format_double(need_mb) + " MB, budget is " +
                format_double(opts.memory_budget_mb) + " MB (raise memory_budget_mb)");

    double dt = g.horizon / opts.steps;
    FlowEnsemble e;
    e.dim = d;
    e.paths = opts.paths;
    e.horizon = g.horizon;
    e.x0s = x0s;
    e.finals.resize(static_cast<std::size_t>(count) * opts.paths * d);
    e.pair_a.reserve(npairs);
    e.pair_b.reserve(npairs);
    for (int a = 0; a < count; ++a)
        for (int b = a + 1; b < count; ++b) {
            e.pair_a.push_back(a);
            e.pair_b.push_back(b);
        }
    e.pair_sup.assign(static_cast<std::size_t>(npairs) * opts.paths, 0.0);

    parallel_for(opts.paths, [&](long p) {
        BrownianPath w(opts.seed, static_cast<std::uint64_t>(p), d, opts.steps, dt);
        std::vector<double> state(static_cast<std::size_t>(count) * d);
        std::vector<double> out(static_cast<std::size_t>(count) * d);
        for (int i = 0; i < count; ++i)
            scheme.init(x0s.data() + static_cast<std::size_t>(i) * d, state.data() + i * d);

        auto measure = [&](double t) {
            for (int i = 0; i < count; ++i) scheme.output(t, state.data() + i * d, out.data() + i * d);
            for (int k = 0; k < npairs; ++k) {
                const double* xa = out.data() + e.pair_a[k] * d;
                const double* xb = out.data() + e.pair_b[k] * d;
                double acc = 0.0;
                for (int c = 0; c < d; ++c) acc += (xa[c] - xb[c]) * (xa[c] - xb[c]);
                double& sup = e.pair_sup[static_cast<std::size_t>(k) * opts.paths + p];
                sup = std::max(sup, std::sqrt(acc));
            }
        };

        measure(0.0);
        for (int j = 0; j < opts.steps; ++j) {
            for (int i = 0; i < count; ++i) {
                double* s = state.data() + i * d;
                scheme.advance(j * dt, dt, w.increment(j), s);
                for (int c = 0; c < d; ++c)
                    if (!std::isfinite(s[c]))
                        throw SimulationError("flow_grid: start " + std::to_string(i) + " path " +
                                              std::to_string(p) + " step " + std::to_string(j + 1) +
                                              " produced a non-finite value");
            }
            measure((j + 1) * dt);
        }
        for (int i = 0; i < count; ++i) {
            double* dst = e.finals.data() +
                          (static_cast<std::size_t>(i) * opts.paths + p) * static_cast<std::size_t>(d);
            std::copy(out.begin() + i * d, out.begin() + (i + 1) * d, dst);
        }
    });

    return e;
}

// D_m, the dyadic grid of [0,1] scaled to [lo, hi]: points lo + (hi-lo) i/2^m.
inline std::vector<double> dyadic_points(int m, double lo = 0.0, double hi = 1.0) {
    require(m >= 0 && m <= 12, "dyadic_points: depth must be in [0, 12]");
    require(hi > lo, "dyadic_points: empty interval");
    int n = (1 << m) + 1;
    std::vector<double> pts(n);
    for (int i = 0; i < n; ++i)
        pts[i] = lo + (hi - lo) * (static_cast<double>(i) / (1 << m));
    return pts;
}

inline FlowEnsemble flow_grid_dyadic(const Scheme& scheme, int m, double lo, double hi,
                                     const SimOptions& opts) {
    require(scheme.grid().dim == 1, "flow_grid_dyadic: dyadic start grids are one dimensional");
    FlowEnsemble e = flow_grid(scheme, dyadic_points(m, lo, hi), opts);
    e.depth = m;
    return e;
}

}  // namespace zvonkin
