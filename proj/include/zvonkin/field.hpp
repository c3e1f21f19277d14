#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "zvonkin/grid.hpp"

namespace zvonkin {

// Coefficient / solution field sampled on a Grid. Values are indexed
// (time_slice, node, channel); channel count is 1, d, or d*d. A field with a
// single time slice is constant in time. Evaluation between nodes is
// multilinear in space and left-constant in time; outside the box the nearest
// boundary value extends constantly.
class SpaceTimeField {
  public:
    SpaceTimeField() = default;

    SpaceTimeField(Grid g, int channels, double alpha, double q, bool time_constant = false)
        : grid_(g), channels_(channels), alpha_(alpha), q_(q) {
        require(channels_ == 1 || channels_ == g.dim || channels_ == g.dim * g.dim,
                "field: channel count must be 1, d, or d^2");
        require(alpha_ > 0.0 && alpha_ <= 1.0, "field: alpha must lie in (0,1]");
        require(q_ >= 1.0 && q_ <= 2.0, "field: q must lie in [1,2]");
        slices_ = time_constant ? 1 : g.time_count();
        values_.assign(static_cast<std::size_t>(slices_) * g.node_count() * channels_, 0.0);
    }

    using Sampler = std::function<double(double t, const double* x, int channel)>;

    static SpaceTimeField sample(Grid g, int channels, double alpha, double q,
                                 const Sampler& fn, bool time_constant = false) {
        SpaceTimeField f(g, channels, alpha, q, time_constant);
        long nodes = g.node_count();
        double x[3];
        for (int j = 0; j < f.slices_; ++j) {
            double t = g.time_at(j);
            for (long n = 0; n < nodes; ++n) {
                g.node_coords(n, x);
                for (int c = 0; c < channels; ++c) f.at(j, n, c) = fn(t, x, c);
            }
        }
        f.check_finite("sample");
        return f;
    }

    // Product field amp(slice) * spatial(x, channel). The amplitude is given
    // per time cell, which lets callers supply closed-form cell averages for
    // sources that are singular at t = 0.
    static SpaceTimeField sample_product(Grid g, int channels, double alpha, double q,
                                         const std::function<double(int slice)>& amp,
                                         const std::function<double(const double*, int)>& spatial) {
        SpaceTimeField f(g, channels, alpha, q, false);
        long nodes = g.node_count();
        double x[3];
        for (int j = 0; j < f.slices_; ++j) {
            double a = amp(j);
            for (long n = 0; n < nodes; ++n) {
                g.node_coords(n, x);
                for (int c = 0; c < channels; ++c) f.at(j, n, c) = a * spatial(x, c);
            }
        }
        f.check_finite("sample_product");
        return f;
    }

    const Grid& grid() const { return grid_; }
    int channels() const { return channels_; }
    double alpha() const { return alpha_; }
    double q() const { return q_; }
    int time_slices() const { return slices_; }
    bool time_constant() const { return slices_ == 1; }

    double& at(int slice, long node, int ch) {
        return values_[(static_cast<std::size_t>(slice) * static_cast<std::size_t>(grid_.node_count()) +
                        static_cast<std::size_t>(node)) * channels_ + ch];
    }
    double at(int slice, long node, int ch) const {
        return values_[(static_cast<std::size_t>(slice) * static_cast<std::size_t>(grid_.node_count()) +
                        static_cast<std::size_t>(node)) * channels_ + ch];
    }

    double* slice_data(int slice) {
        return values_.data() + static_cast<std::size_t>(slice) * grid_.node_count() * channels_;
    }
    const double* slice_data(int slice) const {
        return values_.data() + static_cast<std::size_t>(slice) * grid_.node_count() * channels_;
    }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    int slice_at(double t) const {
        if (slices_ == 1) return 0;
        int j = static_cast<int>(std::floor(t / grid_.ht + 1e-9));
        return std::clamp(j, 0, slices_ - 1);
    }

    double eval(double t, const double* x, int ch) const {
        return eval_slice(slice_at(t), x, ch);
    }

    void eval_all(double t, const double* x, double* out) const {
        int s = slice_at(t);
        // corner weights are shared across channels
        int base[3];
        double frac[3];
        locate(x, base, frac);
        for (int c = 0; c < channels_; ++c) out[c] = 0.0;
        int corners = 1 << grid_.dim;
        int m = grid_.nodes_per_axis();
        for (int corner = 0; corner < corners; ++corner) {
            double w = 1.0;
            long idx = 0;
            for (int k = grid_.dim - 1; k >= 0; --k) {
                int off = (corner >> k) & 1;
                w *= off ? frac[k] : 1.0 - frac[k];
                idx = idx * m + (base[k] + off);
            }
            if (w == 0.0) continue;
            const double* p = slice_data(s) + idx * channels_;
            for (int c = 0; c < channels_; ++c) out[c] += w * p[c];
        }
    }

    double eval_slice(int s, const double* x, int ch) const {
        int base[3];
        double frac[3];
        locate(x, base, frac);
        double acc = 0.0;
        int corners = 1 << grid_.dim;
        int m = grid_.nodes_per_axis();
        for (int corner = 0; corner < corners; ++corner) {
            double w = 1.0;
            long idx = 0;
            for (int k = grid_.dim - 1; k >= 0; --k) {
                int off = (corner >> k) & 1;
                w *= off ? frac[k] : 1.0 - frac[k];
                idx = idx * m + (base[k] + off);
            }
            if (w != 0.0) acc += w * at(s, idx, ch);
        }
        return acc;
    }

    SpaceTimeField time_reversed() const {
        SpaceTimeField f = *this;
        if (slices_ == 1) return f;
        long stride = grid_.node_count() * channels_;
        for (int j = 0; j < slices_; ++j) {
            const double* src = slice_data(slices_ - 1 - j);
            std::copy(src, src + stride, f.values_.data() + static_cast<std::size_t>(j) * stride);
        }
        return f;
    }

    void check_finite(const char* what) const {
        for (double v : values_)
            if (!std::isfinite(v)) throw SolverError(std::string(what) + ": non-finite field value");
    }

  private:
    void locate(const double* x, int* base, double* frac) const {
        int m = grid_.nodes_per_axis();
        double o = grid_.origin();
        for (int k = 0; k < grid_.dim; ++k) {
            double u = (x[k] - o) / grid_.hx;
            double fl = std::floor(u);
            int i = static_cast<int>(fl);
            if (i < 0) {
                base[k] = 0;
                frac[k] = 0.0;
            } else if (i >= m - 1) {
                base[k] = m - 2 >= 0 ? m - 2 : 0;
                frac[k] = m - 2 >= 0 ? 1.0 : 0.0;
            } else {
                base[k] = i;
                frac[k] = u - fl;
            }
        }
    }

    Grid grid_;
    int channels_ = 1;
    double alpha_ = 1.0;
    double q_ = 2.0;
    int slices_ = 1;
    std::vector<double> values_;
};

}  // namespace zvonkin
