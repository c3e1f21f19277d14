#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "zvonkin/sde.hpp"
#include "zvonkin/transform.hpp"

namespace zvonkin {

// A named, fully resolved experiment: coefficient families with their
// declared regularity, the PDE grid, and the simulation and analysis knobs.
// Everything here is plain data so a run is a pure function of (scenario,
// seed).
struct Scenario {
    std::string id;
    std::string drift_family = "zero";          // zero|constant|linear|holder|time-singular
    std::string diffusion_family = "identity";  // identity|holder-perturbed|constant-matrix
    double drift_scale = 1.0;
    double diffusion_scale = 1.0;
    double alpha = 1.0;    // spatial Holder exponent of the declared class
    double q = 2.0;        // time integrability order
    double gamma = 0.0;    // t^-gamma amplitude for the time-singular family
    double ellipticity = 1.0;  // two-sided bound constant: ell <= eig(a) <= 1/ell

    // PDE grid and transform controls
    int dim = 1;
    double half_width = 3.0;
    double hx = 0.02;
    double horizon = 1.0;
    double ht = 1e-3;
    std::string backend = "mild";  // mild|fd
    double margin = 0.05;
    double lambda0 = 1.0;
    double lambda_cap = 1048576.0;

    // simulation
    std::vector<double> x0 = {0.0};
    int steps = 1000;
    int paths = 1000;
    int record_stride = 10;
    int mollify_level = 16;
    double box_factor = 2.0;
    double memory_budget_mb = 256.0;
    std::uint64_t seed = 1;

    // flow statistics
    int flow_depth = 4;
    double flow_lo = 0.0;
    double flow_hi = 1.0;
    int flow_paths = 200;
    int flow_steps = 400;
    bool flow_transformed = false;  // run the flow through the mapped scheme

    // analysis requests
    double density_time = 1.0;
    std::vector<double> norm_orders = {1.0, 2.0, 4.0};
    double chain_s = 4.0;
    double chain_beta = 0.4;
    std::vector<int> chain_levels = {};  // empty = every level up to flow_depth
    std::vector<double> deltas = {0.1, 0.05, 0.025, 0.0125};
    int derivative_paths = 200;
    double pair_a = 0.0;
    double pair_b = 0.5;
    int nonconfluence_paths = 1000;
    int nonconfluence_steps = 2000;

    std::function<double(double)> sigma_witness;  // monotone phi for the diffusion audit
    std::function<double(double)> drift_witness;  // monotone phi for the drift audit
    std::string hypotheses;  // one line for the listing: what the scenario claims
};

namespace detail {

inline double holder_profile(double x, double a) {
    double m = std::min(std::pow(std::abs(x), a), 1.0);
    return x < 0.0 ? -m : m;
}

}  // namespace detail

// Scenario ids must parse and validate before any field is sampled; the
// admissible declarations follow the time-integrable regime the solver is
// built for.
inline void validate(const Scenario& sc) {
    require(!sc.id.empty(), "scenario: id must not be empty");
    require(sc.alpha > 0.0 && sc.alpha <= 1.0, "scenario: alpha must lie in (0, 1]");
    require(sc.q > 2.0 / (1.0 + sc.alpha) && sc.q <= 2.0,
            "scenario: q=" + format_double(sc.q) + " outside the admissible range (" +
                format_double(2.0 / (1.0 + sc.alpha)) +
                ", 2] for alpha=" + format_double(sc.alpha));
    require(sc.dim >= 1 && sc.dim <= 3, "scenario: dim must be 1, 2 or 3");
    require(sc.gamma >= 0.0 && sc.gamma < 0.5,
            "scenario: time singularity exponent must lie in [0, 1/2)");
    require(sc.ellipticity > 0.0 && sc.ellipticity <= 1.0,
            "scenario: the two-sided ellipticity constant must lie in (0, 1]");
    bool drift_known = sc.drift_family == "zero" || sc.drift_family == "constant" ||
                       sc.drift_family == "linear" || sc.drift_family == "holder" ||
                       sc.drift_family == "time-singular";
    require(drift_known, "scenario: unknown drift family '" + sc.drift_family + "'");
    bool diff_known = sc.diffusion_family == "identity" ||
                      sc.diffusion_family == "holder-perturbed" ||
                      sc.diffusion_family == "constant-matrix";
    require(diff_known, "scenario: unknown diffusion family '" + sc.diffusion_family + "'");
    require(sc.diffusion_family != "holder-perturbed" || sc.dim == 1,
            "scenario: the perturbed diffusion family is one dimensional");
    require(static_cast<int>(sc.x0.size()) == sc.dim, "scenario: x0 must have dim entries");
}

inline SpaceTimeField make_drift(const Scenario& sc) {
    Grid g(sc.dim, sc.half_width, sc.hx, sc.horizon, sc.ht);
    double a = sc.alpha, scale = sc.drift_scale;
    if (sc.drift_family == "zero")
        return SpaceTimeField::sample(g, sc.dim, a, sc.q,
                                      [](double, const double*, int) { return 0.0; }, true);
    if (sc.drift_family == "constant")
        return SpaceTimeField::sample(g, sc.dim, a, sc.q,
                                      [scale](double, const double*, int) { return scale; },
                                      true);
    if (sc.drift_family == "linear")
        return SpaceTimeField::sample(
            g, sc.dim, a, sc.q,
            [scale](double, const double* x, int c) { return -scale * x[c]; }, true);
    if (sc.drift_family == "holder")
        return SpaceTimeField::sample(
            g, sc.dim, a, sc.q,
            [scale, a](double, const double* x, int c) {
                return scale * detail::holder_profile(x[c], a);
            },
            true);
    // time-singular: the amplitude of each slice is the exact average of
    // t^-gamma over that time cell, which keeps the discrete drift
    // integrable instead of evaluating at the singular left endpoint
    double gm = sc.gamma, ht = sc.ht;
    return SpaceTimeField::sample_product(
        g, sc.dim, a, sc.q,
        [gm, ht](int slice) {
            double t = slice * ht;
            return (std::pow(t + ht, 1.0 - gm) - std::pow(t, 1.0 - gm)) / ((1.0 - gm) * ht);
        },
        [scale, a](const double* x, int c) {
            return scale * detail::holder_profile(x[c], a);
        });
}

inline std::optional<SpaceTimeField> make_diffusion(const Scenario& sc) {
    if (sc.diffusion_family == "identity") return std::nullopt;
    Grid g(sc.dim, sc.half_width, sc.hx, sc.horizon, sc.ht);
    int ch = sc.dim * sc.dim;
    if (sc.diffusion_family == "constant-matrix") {
        double scale = sc.diffusion_scale;
        int d = sc.dim;
        return SpaceTimeField::sample(
            g, ch, sc.alpha, sc.q,
            [scale, d](double, const double*, int c) { return c % d == c / d ? scale : 0.0; },
            true);
    }
    double a = sc.alpha;
    return SpaceTimeField::sample(
        g, ch, a, sc.q,
        [a](double, const double* x, int) {
            return 1.0 + std::min(std::pow(std::abs(x[0]), a), 1.0) / 2.0;
        },
        true);
}

inline SdeProblem make_problem(const Scenario& sc) {
    validate(sc);
    SdeProblem p;
    p.b = make_drift(sc);
    p.sigma = make_diffusion(sc);
    p.x0 = sc.x0;
    p.validate();
    return p;
}

inline DriftDiffusion make_transform_input(const Scenario& sc, const SdeProblem& p) {
    return transform_input(p, sc.ellipticity);
}

// The built-in experiments. Ids sort alphabetically; each entry states what
// its coefficients are and which of the library's claims it exercises.
inline const std::vector<Scenario>& scenario_library() {
    static const std::vector<Scenario> lib = [] {
        std::vector<Scenario> v;

        Scenario additive;
        additive.id = "additive-identity";
        additive.drift_family = "zero";
        additive.diffusion_family = "identity";
        additive.alpha = 1.0;
        additive.hypotheses =
            "zero drift, unit noise; every estimator hits a closed form";
        additive.sigma_witness = [](double x) { return x; };
        additive.drift_witness = [](double) { return 0.0; };
        additive.flow_depth = 3;
        additive.chain_s = 2.0;
        v.push_back(additive);

        Scenario constant;
        constant.id = "constant-drift";
        constant.drift_family = "constant";
        constant.drift_scale = 0.8;
        constant.diffusion_family = "constant-matrix";
        constant.diffusion_scale = 1.2;
        constant.ellipticity = 0.5;
        constant.backend = "fd";
        constant.hypotheses =
            "constant coefficients; gaussian closed forms with drifted mean";
        constant.sigma_witness = [](double x) { return x; };
        constant.drift_witness = [](double) { return 0.0; };
        constant.flow_depth = 3;
        constant.chain_s = 2.0;
        v.push_back(constant);

        Scenario h05;
        h05.id = "holder-05-identity";
        h05.drift_family = "holder";
        h05.alpha = 0.5;
        h05.diffusion_family = "identity";
        h05.hypotheses =
            "holder drift (alpha=0.5), unit noise; density, flow and derivative claims hold";
        h05.sigma_witness = [](double x) { return x; };
        h05.drift_witness = [](double x) { return detail::holder_profile(x, 0.5); };
        h05.flow_transformed = true;
        h05.flow_depth = 5;
        v.push_back(h05);

        Scenario h06;
        h06.id = "holder-06-diffusion";
        h06.drift_family = "holder";
        h06.drift_scale = 0.5;
        h06.alpha = 0.6;
        h06.diffusion_family = "holder-perturbed";
        h06.backend = "fd";
        h06.ellipticity = 0.4;
        h06.hypotheses =
            "holder drift and perturbed noise (alpha=0.6); separation audit has its witnesses";
        // (sigma(x)-sigma(y))^2 <= (x-y)(phi(x)-phi(y)) with room to spare
        h06.sigma_witness = [](double x) {
            double m = std::pow(std::min(std::abs(x), 1.0), 0.2);
            return 2.0 * (x < 0.0 ? -m : m);
        };
        h06.drift_witness = [](double x) { return 0.5 * detail::holder_profile(x, 0.6); };
        h06.flow_transformed = true;
        h06.flow_depth = 4;
        v.push_back(h06);

        Scenario ou;
        ou.id = "ou-baseline";
        ou.drift_family = "linear";
        ou.diffusion_family = "identity";
        ou.alpha = 1.0;
        ou.x0 = {1.0};
        ou.hypotheses =
            "linear drift, unit noise; mean, variance and derivative have exact decay";
        ou.sigma_witness = [](double x) { return x; };
        ou.drift_witness = [](double x) { return x; };
        ou.flow_depth = 3;
        ou.chain_s = 2.0;
        v.push_back(ou);

        Scenario ts;
        ts.id = "time-singular-drift";
        ts.drift_family = "time-singular";
        ts.drift_scale = 0.5;
        ts.alpha = 0.5;
        ts.gamma = 0.4;
        ts.diffusion_family = "identity";
        ts.hypotheses =
            "drift integrable in time only (q=2); certificate and density claims, no flow claims";
        ts.sigma_witness = [](double x) { return x; };
        ts.flow_depth = 3;
        v.push_back(ts);

        for (const Scenario& sc : v) validate(sc);
        return v;
    }();
    return lib;
}

inline const Scenario& find_scenario(const std::string& id) {
    for (const Scenario& sc : scenario_library())
        if (sc.id == id) return sc;
    std::string known;
    for (const Scenario& sc : scenario_library()) {
        if (!known.empty()) known += ", ";
        known += sc.id;
    }
    throw ConfigError("unknown scenario '" + id + "' (known: " + known + ")");
}

}  // namespace zvonkin
