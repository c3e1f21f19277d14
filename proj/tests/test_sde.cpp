#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <cstdlib>

#include "zvonkin/sde.hpp"

using namespace zvonkin;

namespace {

SdeProblem driftless(const Grid& g, std::vector<double> x0) {
    SdeProblem p;
    p.b = SpaceTimeField::sample(g, g.dim, 1.0, 2.0,
                                 [](double, const double*, int) { return 0.0; }, true);
    p.x0 = std::move(x0);
    return p;
}

}  // namespace

TEST_CASE("driftless identity diffusion reproduces the driving noise") {
    Grid g(1, 4.0, 0.1, 1.0, 0.01);
    SdeProblem p = driftless(g, {0.25});
    EulerScheme scheme(p);

    SimOptions opts;
    opts.steps = 64;
    opts.paths = 3;
    opts.seed = 11;
    PathEnsemble e = simulate(scheme, p.x0, opts);

    REQUIRE(e.records() == 65);
    for (int path = 0; path < opts.paths; ++path) {
        BrownianPath w(opts.seed, static_cast<std::uint64_t>(path), 1, 64, e.dt);
        double wt = 0.0;
        w.value_at(64, &wt);
        REQUIRE(e.state(path, 64)[0] == Catch::Approx(0.25 + wt).margin(1e-14));
        w.value_at(32, &wt);
        REQUIRE(e.state(path, 32)[0] == Catch::Approx(0.25 + wt).margin(1e-14));
    }
}

TEST_CASE("euler replicates the explicit recursion for a linear drift") {
    Grid g(1, 8.0, 0.25, 1.0, 0.01);
    SdeProblem p;
    p.b = SpaceTimeField::sample(g, 1, 1.0, 2.0,
                                 [](double, const double* x, int) { return -x[0]; }, true);
    p.x0 = {0.7};
    EulerScheme scheme(p);

    SimOptions opts;
    opts.steps = 500;
    opts.paths = 3;
    opts.seed = 5;
    PathEnsemble e = simulate(scheme, p.x0, opts);

    for (int path = 0; path < opts.paths; ++path) {
        BrownianPath w(opts.seed, static_cast<std::uint64_t>(path), 1, opts.steps, e.dt);
        double x = 0.7;
        for (int j = 0; j < opts.steps; ++j) x += -x * e.dt + w.increment(j)[0];
        REQUIRE(e.state(path, opts.steps)[0] == Catch::Approx(x).margin(1e-10));
    }
}

TEST_CASE("transformed walk matches its recursion and stays coupled") {
    double c = 0.8, lambda = 2.0, T = 0.5;
    Grid g(1, 2.0, 0.05, T, 0.002);
    SdeProblem p;
    p.b = SpaceTimeField::sample(g, 1, 1.0, 2.0,
                                 [=](double, const double*, int) { return c; }, true);
    p.x0 = {-0.3};
    Transform tr = build_transform(transform_input(p), lambda);

    SimOptions opts;
    opts.steps = 250;
    opts.paths = 4;
    opts.seed = 3;
    CoupledEnsembles pair = simulate_coupled(p, tr, opts);
    REQUIRE(pair.original.noise_checksum == pair.transformed.noise_checksum);
    REQUIRE(pair.transformed.scheme == "transformed");

    // the reported start is psi(0, phi(0, x0)), a fixed point round trip
    REQUIRE(pair.transformed.state(0, 0)[0] == Catch::Approx(-0.3).margin(1e-6));

    // U is spatially constant here, U(s) = c exp_int(lambda, s), so the
    // transformed walk has the closed recursion
    //   y_{j+1} = y_j + lambda U(T - t_j) dt + dW_j,  x_j = y_j - U(T - t_j)
    auto U = [&](double s) { return c * exp_int(lambda, s); };
    double dt = pair.transformed.dt;
    double sup_coupling = 0.0;
    for (int path = 0; path < opts.paths; ++path) {
        BrownianPath w(opts.seed, static_cast<std::uint64_t>(path), 1, opts.steps, dt);
        double y = -0.3 + U(T);
        for (int j = 0; j < opts.steps; ++j) {
            double t = j * dt;
            y += lambda * U(T - t) * dt + w.increment(j)[0];
        }
        REQUIRE(pair.transformed.state(path, opts.steps)[0] == Catch::Approx(y - U(0.0)).margin(1e-9));
        for (int r = 0; r < pair.original.records(); ++r)
            sup_coupling = std::max(sup_coupling,
                                    std::abs(pair.original.state(path, r)[0] -
                                             pair.transformed.state(path, r)[0]));
    }
    // both walks discretize the same dynamics on shared noise; the gap is the
    // O(dt) mismatch of the two Euler discretizations, not O(1)
    REQUIRE(sup_coupling <= 5e-3);
}

TEST_CASE("record stride keeps every k-th step and the final one") {
    Grid g(1, 4.0, 0.1, 1.0, 0.01);
    SdeProblem p = driftless(g, {0.0});
    EulerScheme scheme(p);

    SimOptions opts;
    opts.steps = 10;
    opts.paths = 1;
    opts.record_stride = 3;
    PathEnsemble e = simulate(scheme, p.x0, opts);

    REQUIRE(e.records() == 5);
    REQUIRE(e.times[0] == 0.0);
    REQUIRE(e.times[1] == Catch::Approx(0.3).margin(1e-12));
    REQUIRE(e.times[4] == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("escape flag marks paths leaving the watch box") {
    Grid g(1, 1.0, 0.1, 1.0, 0.01);
    SdeProblem p;
    p.b = SpaceTimeField::sample(g, 1, 1.0, 2.0,
                                 [](double, const double*, int) { return 50.0; }, true);
    p.x0 = {0.0};
    EulerScheme scheme(p);

    SimOptions opts;
    opts.steps = 100;
    opts.paths = 2;
    PathEnsemble e = simulate(scheme, p.x0, opts);
    REQUIRE(e.escaped[0] == 1);
    REQUIRE(e.escaped[1] == 1);

    Grid calm(1, 1.0, 0.1, 0.25, 0.01);
    SdeProblem q = driftless(calm, {0.0});
    EulerScheme quiet(q);
    opts.steps = 50;
    PathEnsemble e2 = simulate(quiet, q.x0, opts);
    REQUIRE(e2.escaped[0] == 0);
}

TEST_CASE("flow map of a linear contraction is monotone with shared noise") {
    Grid g(1, 8.0, 0.25, 1.0, 0.01);
    SdeProblem p;
    p.b = SpaceTimeField::sample(g, 1, 1.0, 2.0,
                                 [](double, const double* x, int) { return -x[0]; }, true);
    p.x0 = {0.0};
    EulerScheme scheme(p);

    SimOptions opts;
    opts.steps = 200;
    opts.paths = 5;
    opts.seed = 17;
    std::vector<double> x0s = {-1.0, -0.3, 0.5, 1.2};
    FlowEnsemble flow = flow_grid(scheme, x0s, opts);
    REQUIRE(flow.count() == 4);

    // the Euler map is x -> (1 - dt) x + dW, so displacements contract by
    // exactly (1 - dt)^steps and order is preserved path by path
    double rate = std::pow(1.0 - 1.0 / opts.steps, opts.steps);
    for (int path = 0; path < opts.paths; ++path)
        for (int i = 0; i + 1 < flow.count(); ++i) {
            double lo = flow.final_state(i, path)[0];
            double hi = flow.final_state(i + 1, path)[0];
            REQUIRE(hi > lo);
            REQUIRE(hi - lo == Catch::Approx((x0s[i + 1] - x0s[i]) * rate).margin(1e-9));
        }

    SimOptions huge = opts;
    huge.paths = 100000000;  // ~3 GB of finals, rejected before allocation
    REQUIRE_THROWS_AS(flow_grid(scheme, x0s, huge), ConfigError);
}

TEST_CASE("ensembles do not depend on the worker count") {
    Grid g(1, 8.0, 0.25, 1.0, 0.01);
    SdeProblem p;
    p.b = SpaceTimeField::sample(g, 1, 1.0, 2.0,
                                 [](double, const double* x, int) { return -x[0]; }, true);
    p.x0 = {0.4};
    EulerScheme scheme(p);

    SimOptions opts;
    opts.steps = 100;
    opts.paths = 6;

    setenv("ZVONKIN_WORKERS", "1", 1);
    PathEnsemble serial = simulate(scheme, p.x0, opts);
    setenv("ZVONKIN_WORKERS", "3", 1);
    PathEnsemble threaded = simulate(scheme, p.x0, opts);
    unsetenv("ZVONKIN_WORKERS");

    REQUIRE(serial.noise_checksum == threaded.noise_checksum);
    REQUIRE(serial.states == threaded.states);
}

TEST_CASE("matrix diffusion applies sigma to the increments") {
    Grid g(2, 2.0, 0.25, 1.0, 0.1);
    SdeProblem p;
    p.b = SpaceTimeField::sample(g, 2, 1.0, 2.0,
                                 [](double, const double*, int) { return 0.0; }, true);
    p.sigma = SpaceTimeField::sample(
        g, 4, 1.0, 2.0,
        [](double, const double*, int ch) {
            const double m[4] = {1.0, 0.3, 0.0, 1.0};
            return m[ch];
        },
        true);
    p.x0 = {0.0, 0.0};
    EulerScheme scheme(p);

    double state[2] = {0.0, 0.0};
    double dw[2] = {0.5, -0.2};
    scheme.advance(0.0, 0.1, dw, state);
    REQUIRE(state[0] == Catch::Approx(0.5 + 0.3 * -0.2).margin(1e-15));
    REQUIRE(state[1] == Catch::Approx(-0.2).margin(1e-15));
}

TEST_CASE("sigma squared forms the diffusion matrix") {
    Grid g(2, 1.0, 0.5, 0.5, 0.25);
    SpaceTimeField sigma = SpaceTimeField::sample(
        g, 4, 1.0, 2.0,
        [](double, const double*, int ch) {
            const double m[4] = {1.0, 0.3, 0.0, 1.0};
            return m[ch];
        },
        true);
    SpaceTimeField a = sigma_squared(sigma);
    REQUIRE(a.at(0, 0, 0) == Catch::Approx(1.09).margin(1e-15));
    REQUIRE(a.at(0, 0, 1) == Catch::Approx(0.3).margin(1e-15));
    REQUIRE(a.at(0, 0, 2) == Catch::Approx(0.3).margin(1e-15));
    REQUIRE(a.at(0, 0, 3) == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("simulation configuration is validated") {
    Grid g(1, 2.0, 0.1, 0.5, 0.01);
    SdeProblem p = driftless(g, {0.0, 0.0});  // wrong x0 size for d = 1
    REQUIRE_THROWS_AS(EulerScheme(p), ConfigError);

    SdeProblem ok = driftless(g, {0.0});
    EulerScheme scheme(ok);
    SimOptions opts;
    opts.steps = 2000000;
    opts.paths = 100;
    REQUIRE_THROWS_AS(simulate(scheme, ok.x0, opts), ConfigError);

    // horizon mismatch between the transform and the problem
    Grid g2(1, 2.0, 0.1, 1.0, 0.01);
    SdeProblem longer = driftless(g2, {0.0});
    DriftDiffusion in{SpaceTimeField::sample(g, 1, 1.0, 2.0,
                                             [](double, const double*, int) { return 0.0; }, true),
                      std::nullopt};
    Transform tr = build_transform(in, 2.0);
    REQUIRE_THROWS_AS(TransformedScheme(tr, longer), ConfigError);
}

TEST_CASE("dyadic start grids enumerate scaled binary fractions") {
    std::vector<double> unit = dyadic_points(2);
    REQUIRE(unit == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
    std::vector<double> wide = dyadic_points(3, -1.0, 1.0);
    REQUIRE(wide.size() == 9);
    REQUIRE(wide[0] == -1.0);
    REQUIRE(wide[4] == 0.0);
    REQUIRE(wide[8] == 1.0);
    REQUIRE_THROWS_AS(dyadic_points(-1), ConfigError);
}

TEST_CASE("rigid flow keeps every pair separation at its starting value") {
    Grid g(1, 4.0, 0.1, 1.0, 0.01);
    SdeProblem p = driftless(g, {0.0});
    EulerScheme scheme(p);

    SimOptions opts;
    opts.steps = 100;
    opts.paths = 3;
    FlowEnsemble flow = flow_grid_dyadic(scheme, 2, 0.0, 1.0, opts);
    REQUIRE(flow.depth == 2);
    REQUIRE(flow.count() == 5);
    REQUIRE(flow.pairs() == 10);

    for (int k = 0; k < flow.pairs(); ++k) {
        double gap = std::abs(flow.x0s[flow.pair_b[k]] - flow.x0s[flow.pair_a[k]]);
        for (int path = 0; path < opts.paths; ++path)
            REQUIRE(flow.sup_distance(k, path) == Catch::Approx(gap).margin(1e-12));
    }
    REQUIRE(flow.pair_index(3, 1) == flow.pair_index(1, 3));
}

TEST_CASE("mollified simulation of constant coefficients is plain euler") {
    Grid g(1, 2.0, 0.05, 0.5, 0.01);
    SdeProblem p;
    p.b = SpaceTimeField::sample(g, 1, 1.0, 2.0,
                                 [](double, const double*, int) { return 0.4; }, true);
    p.x0 = {0.1};

    SimOptions opts;
    opts.steps = 50;
    opts.paths = 2;
    EulerScheme plain(p);
    PathEnsemble direct = simulate(plain, p.x0, opts);
    PathEnsemble smooth = simulate_mollified(p, 8, opts);

    REQUIRE(smooth.mollification == 8);
    REQUIRE(direct.mollification == -1);
    REQUIRE(smooth.states == direct.states);
}

TEST_CASE("mollification does not grow the drift sup norm") {
    Grid g(1, 2.0, 0.01, 0.5, 0.1);
    SpaceTimeField b = SpaceTimeField::sample(
        g, 1, 0.5, 2.0,
        [](double, const double* x, int) {
            double a = std::min(std::sqrt(std::abs(x[0])), 1.0);
            return x[0] < 0 ? -a : a;
        },
        true);
    double sup = slice_sup_norm(b, 0);
    for (int n : {4, 8, 16}) {
        SpaceTimeField bn = mollify(b, Mollifier(n));
        REQUIRE(slice_sup_norm(bn, 0) <= sup + 1e-12);
    }
}

TEST_CASE("transformed run returns the walk and its mapped back positions") {
    double c = 0.6, lambda = 2.0, T = 0.5;
    Grid g(1, 2.0, 0.05, T, 0.002);
    SdeProblem p;
    p.b = SpaceTimeField::sample(g, 1, 1.0, 2.0,
                                 [=](double, const double*, int) { return c; }, true);
    p.x0 = {0.2};
    Transform tr = build_transform(transform_input(p), lambda);

    SimOptions opts;
    opts.steps = 125;
    opts.paths = 2;
    TransformedRun run = simulate_transformed(tr, p, opts);

    REQUIRE(run.y.scheme == "transformed-y");
    REQUIRE(run.x.scheme == "transformed");
    REQUIRE(run.y.transform_lambda == lambda);
    REQUIRE(run.y.noise_checksum == run.x.noise_checksum);

    // Y_0 = Phi(0, x0) = x0 + U(T) and X_0 = Psi(0, Y_0) = x0
    REQUIRE(run.y.state(0, 0)[0] == Catch::Approx(0.2 + c * exp_int(lambda, T)).margin(1e-12));
    REQUIRE(run.x.state(0, 0)[0] == Catch::Approx(0.2).margin(1e-6));

    // records are linked by the inverse map at every time
    double y127 = run.y.state(1, 125)[0];
    REQUIRE(run.x.state(1, 125)[0] == Catch::Approx(y127 - c * exp_int(lambda, 0.0)).margin(1e-9));
}

TEST_CASE("non-finite states abort with the offending path and step") {
    Grid g(1, 1.0, 0.5, 5.0, 1.0);
    SdeProblem p;
    p.b = SpaceTimeField::sample(g, 1, 1.0, 2.0,
                                 [](double, const double*, int) { return 1e308; }, true);
    p.x0 = {0.5};
    EulerScheme scheme(p);

    SimOptions opts;
    opts.steps = 5;
    opts.paths = 1;
    bool threw = false;
    try {
        simulate(scheme, p.x0, opts);
    } catch (const SimulationError& e) {
        threw = true;
        REQUIRE(std::string(e.what()).find("step") != std::string::npos);
    }
    REQUIRE(threw);
}
