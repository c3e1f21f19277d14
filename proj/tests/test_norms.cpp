#include <catch2/catch_amalgamated.hpp>

#include "zvonkin/norms.hpp"

using namespace zvonkin;

namespace {

SpaceTimeField odd_sqrt_field(const Grid& g) {
    // f(x) = sign(x) min(sqrt|x|, 1): 1/2-Holder, seminorm sqrt(2) attained
    // across the origin (|f(h)-f(-h)| / (2h)^{1/2} = 2 sqrt(h) / sqrt(2h)).
    return SpaceTimeField::sample(
        g, 1, 0.5, 2.0,
        [](double, const double* x, int) {
            double s = x[0] < 0.0 ? -1.0 : (x[0] > 0.0 ? 1.0 : 0.0);
            return s * std::min(std::sqrt(std::abs(x[0])), 1.0);
        },
        true);
}

}  // namespace

TEST_CASE("sup norm uses the euclidean channel norm") {
    Grid g(2, 1.0, 0.5, 1.0, 0.5);
    auto f = SpaceTimeField::sample(
        g, 2, 1.0, 2.0, [](double, const double*, int c) { return c == 0 ? 3.0 : 4.0; }, true);
    REQUIRE(slice_sup_norm(f, 0) == Catch::Approx(5.0));
}

TEST_CASE("odd square root has seminorm sqrt 2") {
    Grid g(1, 2.0, 0.125, 1.0, 0.5);
    auto f = odd_sqrt_field(g);
    SeminormOptions ex{true};
    REQUIRE(slice_holder_seminorm(f, 0, 0.5, ex) == Catch::Approx(std::sqrt(2.0)).epsilon(1e-12));
    // the neighbour-plus-dyadic default must find the same pair here
    REQUIRE(slice_holder_seminorm(f, 0, 0.5, SeminormOptions{}) ==
            Catch::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("even square root cap has seminorm one") {
    Grid g(1, 2.0, 0.125, 1.0, 0.5);
    auto f = SpaceTimeField::sample(
        g, 1, 0.5, 2.0,
        [](double, const double* x, int) { return std::min(std::sqrt(std::abs(x[0])), 1.0); },
        true);
    SeminormOptions ex{true};
    // sup over pairs of |sqrt b - sqrt a| / |b - a|^{1/2} = 1, attained at a = 0
    REQUIRE(slice_holder_seminorm(f, 0, 0.5, ex) == Catch::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("default seminorm is bounded by the exhaustive one") {
    Grid g(1, 1.0, 0.0625, 1.0, 0.5);
    auto f = SpaceTimeField::sample(
        g, 1, 0.7, 2.0,
        [](double, const double* x, int) { return std::cos(3.0 * x[0]) + 0.3 * x[0] * x[0]; },
        true);
    double lo = slice_holder_seminorm(f, 0, 0.7, SeminormOptions{});
    double hi = slice_holder_seminorm(f, 0, 0.7, SeminormOptions{true});
    REQUIRE(lo <= hi + 1e-14);
    REQUIRE(lo >= 0.5 * hi);  // the scan keeps a usable fraction of the true value
}

TEST_CASE("constant field lebesgue norm") {
    Grid g(1, 1.0, 0.5, 1.0, 0.25);
    auto f = SpaceTimeField::sample(
        g, 1, 0.5, 2.0, [](double, const double*, int) { return 2.0; }, true);
    // (sup + seminorm)^q integrated over [0,1]: 2 * 1^{1/2}
    REQUIRE(lebesgue_holder_norm(f, 2.0) == Catch::Approx(2.0));
    REQUIRE(lebesgue_holder_norm(f, 1.0) == Catch::Approx(2.0));
}

TEST_CASE("integrable singular amplitude") {
    // f(t,x) = t^{-1/4} with cell averaged amplitudes; || f ||_{L^2(0,1;C^0)}
    // = sqrt(2). Left endpoint quadrature on 1000 cells undershoots by well
    // under a percent.
    Grid g(1, 1.0, 0.5, 1.0, 1e-3);
    double gamma = 0.25, ht = g.ht;
    int cells = g.time_count() - 1;
    std::vector<double> amp(static_cast<std::size_t>(cells + 1));
    for (int j = 0; j <= cells; ++j) {
        double t0 = j * ht, t1 = t0 + ht;
        amp[static_cast<std::size_t>(j)] =
            (std::pow(t1, 1.0 - gamma) - std::pow(t0, 1.0 - gamma)) / ((1.0 - gamma) * ht);
    }
    auto f = SpaceTimeField::sample_product(
        g, 1, 0.5, 2.0, [&](int j) { return amp[static_cast<std::size_t>(j)]; },
        [](const double*, int) { return 1.0; });
    double norm = lebesgue_holder_norm(f, 2.0);
    REQUIRE(norm == Catch::Approx(std::sqrt(2.0)).epsilon(0.01));
    REQUIRE(norm < std::sqrt(2.0));  // Jensen: averaged amplitudes undershoot
}

TEST_CASE("lebesgue norm rejects q below one") {
    Grid g(1, 1.0, 0.5, 1.0, 0.5);
    auto f = SpaceTimeField::sample(
        g, 1, 0.5, 2.0, [](double, const double*, int) { return 1.0; }, true);
    REQUIRE_THROWS_AS(lebesgue_holder_norm(f, 0.5), ConfigError);
}
