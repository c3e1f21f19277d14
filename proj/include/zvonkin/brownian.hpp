#pragma once

#include <cstdint>
#include <numbers>
#include <random>

#include "zvonkin/util.hpp"

namespace zvonkin {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// One well-mixed generator seed per (run seed, path index) pair, so paths can
// be produced lazily and in any order without a shared stream.
inline std::uint64_t path_seed(std::uint64_t seed, std::uint64_t path) {
    return splitmix64(seed ^ splitmix64(path + 0x632be59bd9b4e019ull));
}

// Standard normals from mt19937_64, whose output sequence is fully specified,
// via Box-Muller with a fixed consumption of two uniforms per pair. Keeping
// the transform in-house makes streams bit-identical across toolchains
// (std::normal_distribution is implementation defined).
class NormalStream {
  public:
    explicit NormalStream(std::uint64_t seed) : gen_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // in (0, 1]: log stays finite
    double uniform() { return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1p-53; }

  private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Increments of one d-dimensional Brownian path on a uniform grid of `steps`
// cells of width dt, generated up front (a path is small; ensembles stay lazy
// by constructing paths on demand).
class BrownianPath {
  public:
    BrownianPath(std::uint64_t seed, std::uint64_t path_index, int dim, int steps, double dt)
        : dim_(dim), steps_(steps), dt_(dt), inc_(static_cast<std::size_t>(steps) * dim) {
        require(dim >= 1 && dim <= 3, "brownian: dim must be 1..3");
        require(steps >= 1, "brownian: steps must be positive");
        require(dt > 0.0, "brownian: dt must be positive");
        NormalStream s(path_seed(seed, path_index));
        double scale = std::sqrt(dt);
        for (double& v : inc_) v = scale * s.next();
    }

    int dim() const { return dim_; }
    int steps() const { return steps_; }
    double dt() const { return dt_; }

    const double* increment(int step) const {
        return inc_.data() + static_cast<std::size_t>(step) * dim_;
    }

    // W at time step*dt (prefix sum of increments)
    void value_at(int step, double* out) const {
        for (int k = 0; k < dim_; ++k) out[k] = 0.0;
        for (int j = 0; j < step; ++j)
            for (int k = 0; k < dim_; ++k) out[k] += increment(j)[k];
    }

    // Same path viewed on a grid k times coarser: increments are exact sums
    // of the fine ones, so fine and coarse simulations share the noise.
    BrownianPath coarsened(int k) const {
        require(k >= 1 && steps_ % k == 0, "brownian: coarsening must divide the step count");
        BrownianPath out(dim_, steps_ / k, dt_ * k);
        for (int j = 0; j < out.steps_; ++j)
            for (int c = 0; c < dim_; ++c) {
                double acc = 0.0;
                for (int f = j * k; f < (j + 1) * k; ++f) acc += increment(f)[c];
                out.inc_[static_cast<std::size_t>(j) * dim_ + c] = acc;
            }
        return out;
    }

    // Bit-level digest of the increments; manifests use it to pin noise.
    std::uint64_t checksum() const {
        return fnv1a64(inc_.data(), inc_.size() * sizeof(double));
    }

  private:
    BrownianPath(int dim, int steps, double dt)
        : dim_(dim), steps_(steps), dt_(dt), inc_(static_cast<std::size_t>(steps) * dim) {}

    int dim_;
    int steps_;
    double dt_;
    std::vector<double> inc_;
};

struct DriverGate {
    double worst_mean = 0.0;  // max over components of |ensemble mean of W_T|
    double bound = 0.0;       // four standard errors, 4 sqrt(T / paths)
    bool ok = false;
};

// Cheap sanity gate on the driver: the ensemble mean of W_T is N(0, T/paths)
// per component, so four standard errors is a one-in-sixteen-thousand event.
inline DriverGate driver_mean_gate(std::uint64_t seed, int dim, int paths, int steps, double dt) {
    require(paths >= 1, "driver gate: paths must be positive");
    DriverGate gate;
    double sum[3] = {0.0, 0.0, 0.0};
    double wt[3];
    for (int p = 0; p < paths; ++p) {
        BrownianPath path(seed, static_cast<std::uint64_t>(p), dim, steps, dt);
        path.value_at(steps, wt);
        for (int k = 0; k < dim; ++k) sum[k] += wt[k];
    }
    for (int k = 0; k < dim; ++k)
        gate.worst_mean = std::max(gate.worst_mean, std::abs(sum[k] / paths));
    gate.bound = 4.0 * std::sqrt(steps * dt / paths);
    gate.ok = gate.worst_mean <= gate.bound;
    return gate;
}

}  // namespace zvonkin
