#include <catch2/catch_amalgamated.hpp>

#include "zvonkin/heat_kernel.hpp"

using namespace zvonkin;

namespace {

// nodes with |x| within margin of the box edge see the clamped extension;
// comparisons against free-space references stay inside
bool interior(const Grid& g, long node, double margin) {
    double x[3];
    g.node_coords(node, x);
    for (int k = 0; k < g.dim; ++k)
        if (g.half_width - std::abs(x[k]) < margin) return false;
    return true;
}

}  // namespace

TEST_CASE("exp int matches quadrature") {
    // independent Simpson quadrature of exp(-lambda r) on [0, t]
    for (double lambda : {0.0, 0.5, 2.0, 40.0}) {
        double t = 1.0;
        int P = 2000;
        double h = t / P, acc = 0.0;
        for (int i = 0; i <= P; ++i) {
            double w = (i == 0 || i == P) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            acc += w * std::exp(-lambda * i * h);
        }
        acc *= h / 3.0;
        // margin covers the oracle's own Simpson error at lambda = 40
        REQUIRE(exp_int(lambda, t) == Catch::Approx(acc).margin(1e-8));
    }
    REQUIRE(exp_int(0.0, 0.25) == Catch::Approx(0.25));
    REQUIRE(exp_int(2.0, 1.0) == Catch::Approx(0.43233235838169365).epsilon(1e-14));
}

TEST_CASE("heat stencil has unit mass") {
    auto s = heat_stencil(0.1, 0.02, 2000);
    double mass = 0.0;
    for (double v : s.w) mass += v;
    REQUIRE(mass == Catch::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("heat convolution damps cosines by the exact multiplier") {
    // K(r) * cos(kx) = exp(-r k^2 / 2) cos(kx); exp(-0.6) = 0.5488116360940264
    Grid g(1, 4.0, 0.02, 1.0, 0.5);
    double r = 0.3, k = 2.0;
    std::vector<double> F(static_cast<std::size_t>(g.node_count()));
    for (long n = 0; n < g.node_count(); ++n)
        F[static_cast<std::size_t>(n)] = std::cos(k * g.coord(static_cast<int>(n)));
    auto out = kernel_convolve(g, 1, F.data(), r);
    double mult = std::exp(-r * k * k / 2.0);
    REQUIRE(mult == Catch::Approx(0.5488116360940264).epsilon(1e-15));
    double margin = 6.0 * std::sqrt(r);
    int checked = 0;
    for (long n = 0; n < g.node_count(); ++n) {
        if (!interior(g, n, margin)) continue;
        double want = mult * std::cos(k * g.coord(static_cast<int>(n)));
        REQUIRE(out[static_cast<std::size_t>(n)] == Catch::Approx(want).margin(1e-7));
        ++checked;
    }
    REQUIRE(checked > 20);
}

TEST_CASE("gradient stencil is exact on affine data") {
    Grid g(1, 2.0, 0.05, 1.0, 0.5);
    std::vector<double> F(static_cast<std::size_t>(g.node_count()));
    for (long n = 0; n < g.node_count(); ++n)
        F[static_cast<std::size_t>(n)] = 2.5 * g.coord(static_cast<int>(n)) + 1.0;
    double r = 0.04;
    auto out = kernel_grad_convolve(g, 1, F.data(), r, 0);
    double margin = 6.0 * std::sqrt(r) + 0.1;
    for (long n = 0; n < g.node_count(); ++n) {
        if (!interior(g, n, margin)) continue;
        REQUIRE(out[static_cast<std::size_t>(n)] == Catch::Approx(2.5).epsilon(1e-12));
    }
}

TEST_CASE("gradient convolution of a cosine") {
    // grad(K(r) * cos(kx)) = -k exp(-r k^2/2) sin(kx)
    Grid g(1, 4.0, 0.02, 1.0, 0.5);
    double r = 0.2, k = 1.5;
    std::vector<double> F(static_cast<std::size_t>(g.node_count()));
    for (long n = 0; n < g.node_count(); ++n)
        F[static_cast<std::size_t>(n)] = std::cos(k * g.coord(static_cast<int>(n)));
    auto out = kernel_grad_convolve(g, 1, F.data(), r, 0);
    double mult = -k * std::exp(-r * k * k / 2.0);
    double margin = 6.0 * std::sqrt(r);
    for (long n = 0; n < g.node_count(); ++n) {
        if (!interior(g, n, margin)) continue;
        double want = mult * std::sin(k * g.coord(static_cast<int>(n)));
        REQUIRE(out[static_cast<std::size_t>(n)] == Catch::Approx(want).margin(2e-6));
    }
}

TEST_CASE("kernel composition matches a single longer step") {
    Grid g(1, 4.0, 0.02, 1.0, 0.5);
    std::vector<double> F(static_cast<std::size_t>(g.node_count()));
    for (long n = 0; n < g.node_count(); ++n) {
        double x = g.coord(static_cast<int>(n));
        F[static_cast<std::size_t>(n)] = std::cos(1.3 * x) + 0.5 * std::sin(2.0 * x);
    }
    auto two = kernel_convolve(g, 1, F.data(), 0.08);
    two = kernel_convolve(g, 1, two.data(), 0.12);
    auto one = kernel_convolve(g, 1, F.data(), 0.2);
    double margin = 6.0 * std::sqrt(0.2) + 0.5;
    for (long n = 0; n < g.node_count(); ++n) {
        if (!interior(g, n, margin)) continue;
        REQUIRE(two[static_cast<std::size_t>(n)] ==
                Catch::Approx(one[static_cast<std::size_t>(n)]).margin(1e-8));
    }
}

TEST_CASE("separable convolution in 2d") {
    Grid g(2, 3.0, 0.05, 1.0, 0.5);
    double r = 0.1;
    long n = g.node_count();
    std::vector<double> F(static_cast<std::size_t>(n));
    double x[3];
    for (long i = 0; i < n; ++i) {
        g.node_coords(i, x);
        F[static_cast<std::size_t>(i)] = std::cos(x[0]) * std::cos(2.0 * x[1]);
    }
    auto out = kernel_convolve(g, 1, F.data(), r);
    double mult = std::exp(-r * 0.5) * std::exp(-r * 2.0);
    double margin = 6.0 * std::sqrt(r);
    for (long i = 0; i < n; ++i) {
        if (!interior(g, i, margin)) continue;
        g.node_coords(i, x);
        double want = mult * std::cos(x[0]) * std::cos(2.0 * x[1]);
        REQUIRE(out[static_cast<std::size_t>(i)] == Catch::Approx(want).margin(1e-6));
    }
}

TEST_CASE("duhamel of a constant source") {
    // int_0^t exp(-lambda r) K(r) * 1 dr = exp_int(lambda, t)
    Grid g(1, 2.0, 0.05, 1.0, 0.01);
    auto F = SpaceTimeField::sample(
        g, 1, 1.0, 2.0, [](double, const double*, int) { return 1.0; }, true);
    KernelQuadrature quad{};
    for (double lambda : {0.0, 2.0}) {
        auto out = duhamel(F, 1.0, quad, lambda);
        double want = exp_int(lambda, 1.0);
        for (long n = 0; n < g.node_count(); ++n)
            REQUIRE(out[static_cast<std::size_t>(n)] == Catch::Approx(want).epsilon(1e-7));
    }
}

TEST_CASE("duhamel damps a cosine source by the resolvent factor") {
    // stationary source cos(kx): u(t) = exp_int(lambda + k^2/2, t) cos(kx)
    Grid g(1, 4.0, 0.02, 0.25, 0.005);
    double k = 1.0, lambda = 5.0;
    auto F = SpaceTimeField::sample(
        g, 1, 1.0, 2.0, [&](double, const double* x, int) { return std::cos(k * x[0]); }, true);
    auto out = duhamel(F, 0.25, KernelQuadrature{}, lambda);
    double want_amp = exp_int(lambda + 0.5 * k * k, 0.25);
    double margin = 6.0 * std::sqrt(0.25);
    for (long n = 0; n < g.node_count(); ++n) {
        if (!interior(g, n, margin)) continue;
        double want = want_amp * std::cos(k * g.coord(static_cast<int>(n)));
        REQUIRE(out[static_cast<std::size_t>(n)] == Catch::Approx(want).margin(3e-6));
    }
    // gradient variant: -k exp_int(...) sin(kx)
    auto gout = duhamel(F, 0.25, KernelQuadrature{}, lambda, 0);
    for (long n = 0; n < g.node_count(); ++n) {
        if (!interior(g, n, margin)) continue;
        double want = -k * want_amp * std::sin(k * g.coord(static_cast<int>(n)));
        REQUIRE(gout[static_cast<std::size_t>(n)] == Catch::Approx(want).margin(2e-4));
    }
}

TEST_CASE("duhamel integrates a time ramp") {
    // F(t) = t constant in x, lambda = 0: u(1) = int_0^1 (1 - r) dr = 1/2 up
    // to the piecewise constant slice profile, O(ht)
    Grid g(1, 2.0, 0.05, 1.0, 1.0 / 128.0);
    auto F = SpaceTimeField::sample(
        g, 1, 1.0, 2.0, [](double t, const double*, int) { return t; }, false);
    auto out = duhamel(F, 1.0, KernelQuadrature{}, 0.0);
    for (long n = 0; n < g.node_count(); ++n)
        REQUIRE(out[static_cast<std::size_t>(n)] == Catch::Approx(0.5).margin(0.01));
}

TEST_CASE("duhamel validates the time argument") {
    Grid g(1, 1.0, 0.1, 1.0, 0.1);
    auto F = SpaceTimeField::sample(
        g, 1, 1.0, 2.0, [](double, const double*, int) { return 1.0; }, true);
    REQUIRE_THROWS_AS(duhamel(F, 0.0, KernelQuadrature{}, 1.0), ConfigError);
    REQUIRE_THROWS_AS(duhamel(F, 1.5, KernelQuadrature{}, 1.0), ConfigError);
}
