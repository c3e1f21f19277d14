#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "zvonkin/transform.hpp"

using namespace zvonkin;

namespace {

Grid grid1(double L, double hx, double T, double ht) { return Grid(1, L, hx, T, ht); }

SpaceTimeField const_drift(const Grid& g, double c) {
    return SpaceTimeField::sample(g, 1, 1.0, 2.0, [=](double, const double*, int) { return c; },
                                  true);
}

}  // namespace

TEST_CASE("zero drift gives the identity transform") {
    Grid g = grid1(1.0, 0.1, 0.5, 0.05);
    DriftDiffusion in{const_drift(g, 0.0), std::nullopt};
    Transform tr = build_transform(in, 2.0);

    REQUIRE(tr.certificate().sup_grad_u == 0.0);
    REQUIRE(tr.certificate().admissible());
    REQUIRE(tr.solution().iterations == 1);

    double x = 0.37, out = 0.0;
    tr.phi(0.2, &x, &out);
    REQUIRE(out == Catch::Approx(x).margin(1e-15));
    tr.psi(0.2, &x, &out);
    REQUIRE(out == Catch::Approx(x).margin(1e-15));
}

TEST_CASE("constant drift displaces by the damped drift integral") {
    // Spatially constant U solves U' = -lambda U + c in reversed time, so
    // U(s) = c (1 - exp(-lambda s)) / lambda and the grid recursion hits it
    // exactly (the cell response telescopes).
    double c = 0.7, lambda = 1.5, T = 1.0;
    Grid g = grid1(1.0, 0.05, T, 0.002);
    DriftDiffusion in{const_drift(g, c), std::nullopt};
    Transform tr = build_transform(in, lambda);

    double x = 0.22, u = 0.0;
    tr.eval_u(0.3, &x, &u);  // reversed time s = 0.7
    REQUIRE(u == Catch::Approx(c * exp_int(lambda, 0.7)).margin(1e-12));

    double out = 0.0;
    tr.phi(0.3, &x, &out);
    REQUIRE(out == Catch::Approx(x + c * exp_int(lambda, 0.7)).margin(1e-12));

    // gradient of a spatially constant field vanishes identically
    REQUIRE(tr.certificate().sup_grad_u <= 1e-13);

    double back = 0.0;
    tr.psi(0.3, &out, &back);
    REQUIRE(back == Catch::Approx(x).margin(1e-12));
}

TEST_CASE("time varying drift is integrated in reversed time") {
    // c(t) = 1 + t, piecewise constant on cells. The solve runs in s = T - t,
    // so slice j of the reversed source is c at slice nt-1-j, and U follows
    // the damped one-cell recursion exactly.
    double lambda = 2.0, T = 0.5, ht = 0.05;
    Grid g = grid1(1.0, 0.1, T, ht);
    SpaceTimeField b = SpaceTimeField::sample(
        g, 1, 1.0, 2.0, [](double t, const double*, int) { return 1.0 + t; });
    DriftDiffusion in{b, std::nullopt};
    Transform tr = build_transform(in, lambda);

    int cells = g.time_count() - 1;
    auto staircase = [&](int steps) {
        double u = 0.0;
        for (int j = 0; j < steps; ++j) {
            double src = 1.0 + (cells - j) * ht;  // reversed slice j
            u = std::exp(-lambda * ht) * u + exp_int(lambda, ht) * src;
        }
        return u;
    };

    double x = 0.0, u = 0.0;
    tr.eval_u(0.0, &x, &u);  // s = T, all cells applied
    REQUIRE(u == Catch::Approx(staircase(cells)).margin(1e-12));
    tr.eval_u(0.25, &x, &u);  // s = 0.25, five cells
    REQUIRE(u == Catch::Approx(staircase(5)).margin(1e-12));
    tr.eval_u(T, &x, &u);  // s = 0, untouched initial condition
    REQUIRE(u == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("small cosine drift matches the linearized response") {
    // For b = eps cos(kx) the quadratic term b . grad U is O(eps^2), so
    // U(s, x) ~ eps cos(kx) (1 - exp(-(lambda + k^2/2) s)) / (lambda + k^2/2).
    double eps = 0.05, k = 1.0, lambda = 2.0, T = 0.25;
    Grid g = grid1(4.0, 0.02, T, 1e-3);
    SpaceTimeField b = SpaceTimeField::sample(
        g, 1, 1.0, 2.0, [=](double, const double* x, int) { return eps * std::cos(k * x[0]); },
        true);
    DriftDiffusion in{b, std::nullopt};
    Transform tr = build_transform(in, lambda);

    double resp = exp_int(lambda + 0.5 * k * k, T);
    for (double x = -1.0; x <= 1.0 + 1e-12; x += 0.1) {
        double u = 0.0, du = 0.0;
        tr.eval_u(0.0, &x, &u);
        tr.eval_grad_u(0.0, &x, &du);
        REQUIRE(u == Catch::Approx(eps * resp * std::cos(k * x)).margin(1.5e-4));
        REQUIRE(du == Catch::Approx(-eps * k * resp * std::sin(k * x)).margin(1.5e-4));
    }
    REQUIRE(tr.certificate().admissible());
}

TEST_CASE("inverse round trips through the forward map") {
    double amp = 2.0, lambda = 5.0, T = 0.25;
    Grid g = grid1(3.0, 0.025, T, 1e-3);
    SpaceTimeField b = SpaceTimeField::sample(
        g, 1, 0.5, 2.0, [=](double, const double* x, int) { return amp * std::cos(x[0]); }, true);
    DriftDiffusion in{b, std::nullopt};
    Transform tr = build_transform(in, lambda);
    REQUIRE(tr.certificate().admissible());
    REQUIRE(tr.certificate().sup_grad_u > 0.1);  // the map is genuinely non affine

    double tol = 1e-6;
    for (double t : {0.0, 0.1, 0.24}) {
        for (double y : {0.37, -1.2, 2.3, 5.5}) {
            double x = 0.0, fwd = 0.0;
            tr.psi(t, &y, &x);
            tr.phi(t, &x, &fwd);
            REQUIRE(fwd == Catch::Approx(y).margin(tol));
        }
        for (double x : {0.0, 0.8, -1.7}) {
            double fwd = 0.0, back = 0.0;
            tr.phi(t, &x, &fwd);
            tr.psi(t, &fwd, &back);
            REQUIRE(back == Catch::Approx(x).margin(tol));
        }
    }
}

TEST_CASE("certificate drives the damping selection") {
    double amp = 4.0, T = 0.2;
    Grid g = grid1(2.0, 0.025, T, 1e-3);
    SpaceTimeField b = SpaceTimeField::sample(
        g, 1, 0.5, 2.0, [=](double, const double* x, int) { return amp * std::cos(x[0]); }, true);
    DriftDiffusion in{b, std::nullopt};

    std::vector<std::string> log;
    Transform tr = select_lambda(in, {}, &log);

    REQUIRE(tr.certificate().admissible());
    REQUIRE(tr.lambda() >= 2.0);  // amp 4 is too strong for lambda = 1
    int expo = 0;
    REQUIRE(std::frexp(tr.lambda(), &expo) == 0.5);  // doubling from 1 stays a power of two
    REQUIRE(log.size() >= 2);
    // sweep stops at the first admissible damping: the previous one failed
    REQUIRE(log[log.size() - 2].find("sup_grad_u") != std::string::npos);
}

TEST_CASE("select lambda reports failure when contraction is unattainable") {
    Grid g = grid1(1.0, 0.2, 0.2, 0.04);
    SpaceTimeField b = SpaceTimeField::sample(
        g, 1, 1.0, 2.0, [](double, const double* x, int) { return 1e6 * std::cos(2.0 * x[0]); },
        true);
    DriftDiffusion in{b, std::nullopt};

    bool threw = false;
    try {
        select_lambda(in);
    } catch (const CertificateError& e) {
        threw = true;
        REQUIRE(std::string(e.what()).find("resolvent decay not observed") != std::string::npos);
    }
    REQUIRE(threw);
}

TEST_CASE("variable diffusion routes to the implicit backend") {
    double c = 0.7, lambda = 1.5, T = 0.4, ht = 0.01;
    Grid g = grid1(1.0, 0.1, T, ht);
    DriftDiffusion in;
    in.b = const_drift(g, c);
    in.a = SpaceTimeField::sample(g, 1, 1.0, 2.0,
                                  [](double, const double*, int) { return 1.2; }, true);
    Transform tr = build_transform(in, lambda);
    REQUIRE(tr.solution().backend == "fd");

    // spatially constant, so the implicit step reduces to
    // u_{j+1} = (u_j + ht c) / (1 + ht lambda)
    double u = 0.0;
    int cells = g.time_count() - 1;
    for (int j = 0; j < cells; ++j) u = (u + ht * c) / (1.0 + ht * lambda);

    double x = 0.0, got = 0.0;
    tr.eval_u(0.0, &x, &got);
    REQUIRE(got == Catch::Approx(u).margin(1e-7));
    REQUIRE(tr.certificate().sup_grad_u <= 1e-8);
}

TEST_CASE("two dimensional constant drift transforms channelwise") {
    double lambda = 2.0, T = 0.2, ht = 0.005;
    Grid g(2, 0.8, 0.08, T, ht);
    double c0 = 0.4, c1 = -0.25;
    SpaceTimeField b = SpaceTimeField::sample(
        g, 2, 1.0, 2.0, [=](double, const double*, int ch) { return ch == 0 ? c0 : c1; }, true);
    DriftDiffusion in{b, std::nullopt};
    Transform tr = build_transform(in, lambda);

    double x[2] = {0.13, -0.4}, u[2] = {0.0, 0.0};
    tr.eval_u(0.0, x, u);
    REQUIRE(u[0] == Catch::Approx(c0 * exp_int(lambda, T)).margin(1e-12));
    REQUIRE(u[1] == Catch::Approx(c1 * exp_int(lambda, T)).margin(1e-12));

    double fwd[2], back[2];
    tr.phi(0.05, x, fwd);
    tr.psi(0.05, fwd, back);
    REQUIRE(back[0] == Catch::Approx(x[0]).margin(1e-10));
    REQUIRE(back[1] == Catch::Approx(x[1]).margin(1e-10));
}
