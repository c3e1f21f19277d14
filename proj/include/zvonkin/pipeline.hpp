#pragma once

#include <algorithm>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "zvonkin/analysis.hpp"
#include "zvonkin/config.hpp"
#include "zvonkin/io.hpp"
#include "zvonkin/norms.hpp"
#include "zvonkin/scenario.hpp"

namespace zvonkin {

// A failed end-of-run invariant. Artifacts are still written so the numbers
// behind the failure can be inspected.
struct AssertionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunOptions {
    std::string out_dir = "out";
    std::string stage = "all";  // solve | certify | simulate | analyze | all
    std::uint64_t seed = 0;     // nonzero replaces the scenario seed
    bool exhaustive_norms = false;
};

namespace detail {

inline int stage_rank(const std::string& s) {
    if (s == "solve") return 0;
    if (s == "certify") return 1;
    if (s == "simulate") return 2;
    if (s == "analyze" || s == "all") return 3;
    throw ConfigError("unknown stage '" + s +
                      "' (expected solve, certify, simulate, analyze or all)");
}

inline std::vector<int> to_int_list(const std::vector<double>& vs, const std::string& what) {
    std::vector<int> out;
    for (double v : vs) {
        int n = static_cast<int>(v);
        require(static_cast<double>(n) == v, what + ": expected integers");
        out.push_back(n);
    }
    return out;
}

inline std::string utc_now() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

// mean and variance of one recorded coordinate over unflagged paths
struct SeriesStats {
    std::vector<double> mean, var;
    int used = 0;
};

inline SeriesStats record_stats(const PathEnsemble& e, int coord) {
    SeriesStats s;
    s.mean.assign(e.records(), 0.0);
    s.var.assign(e.records(), 0.0);
    for (int p = 0; p < e.paths(); ++p)
        if (!e.escaped[p]) ++s.used;
    if (s.used == 0) return s;
    for (int r = 0; r < e.records(); ++r) {
        double m = 0.0;
        for (int p = 0; p < e.paths(); ++p)
            if (!e.escaped[p]) m += e.state(p, r)[coord];
        m /= s.used;
        double v = 0.0;
        for (int p = 0; p < e.paths(); ++p)
            if (!e.escaped[p]) {
                double d = e.state(p, r)[coord] - m;
                v += d * d;
            }
        s.mean[r] = m;
        s.var[r] = s.used > 1 ? v / (s.used - 1) : 0.0;
    }
    return s;
}

}  // namespace detail

// Resolve a run configuration: pick the base scenario by id, then apply
// overrides section by section. Unknown keys anywhere are an error.
inline Scenario configure_scenario(const Config& c) {
    std::string id = c.get_string("scenario", "id", "");
    require(!id.empty(), "config: [scenario] id is required");
    Scenario sc = find_scenario(id);

    sc.drift_family = c.get_string("scenario", "drift_family", sc.drift_family);
    sc.diffusion_family = c.get_string("scenario", "diffusion_family", sc.diffusion_family);
    sc.drift_scale = c.get_double("scenario", "drift_scale", sc.drift_scale);
    sc.diffusion_scale = c.get_double("scenario", "diffusion_scale", sc.diffusion_scale);
    sc.alpha = c.get_double("scenario", "alpha", sc.alpha);
    sc.q = c.get_double("scenario", "q", sc.q);
    sc.gamma = c.get_double("scenario", "gamma", sc.gamma);
    sc.ellipticity = c.get_double("scenario", "ellipticity", sc.ellipticity);

    sc.half_width = c.get_double("grid", "half_width", sc.half_width);
    sc.hx = c.get_double("grid", "hx", sc.hx);
    sc.horizon = c.get_double("grid", "horizon", sc.horizon);
    sc.ht = c.get_double("grid", "ht", sc.ht);
    sc.backend = c.get_string("grid", "backend", sc.backend);
    sc.margin = c.get_double("grid", "margin", sc.margin);
    sc.lambda0 = c.get_double("grid", "lambda0", sc.lambda0);
    sc.lambda_cap = c.get_double("grid", "lambda_cap", sc.lambda_cap);

    sc.x0 = c.get_list("simulation", "x0", sc.x0);
    sc.steps = static_cast<int>(c.get_int("simulation", "steps", sc.steps));
    sc.paths = static_cast<int>(c.get_int("simulation", "paths", sc.paths));
    sc.record_stride =
        static_cast<int>(c.get_int("simulation", "record_stride", sc.record_stride));
    sc.mollify_level =
        static_cast<int>(c.get_int("simulation", "mollify_level", sc.mollify_level));
    sc.box_factor = c.get_double("simulation", "box_factor", sc.box_factor);
    sc.memory_budget_mb =
        c.get_double("simulation", "memory_budget_mb", sc.memory_budget_mb);
    sc.seed = c.get_u64("simulation", "seed", sc.seed);

    sc.flow_depth = static_cast<int>(c.get_int("flow", "depth", sc.flow_depth));
    sc.flow_lo = c.get_double("flow", "lo", sc.flow_lo);
    sc.flow_hi = c.get_double("flow", "hi", sc.flow_hi);
    sc.flow_paths = static_cast<int>(c.get_int("flow", "paths", sc.flow_paths));
    sc.flow_steps = static_cast<int>(c.get_int("flow", "steps", sc.flow_steps));
    sc.flow_transformed = c.get_bool("flow", "transformed", sc.flow_transformed);

    sc.density_time = c.get_double("analysis", "density_time", sc.density_time);
    sc.norm_orders = c.get_list("analysis", "norm_orders", sc.norm_orders);
    sc.chain_s = c.get_double("analysis", "chain_s", sc.chain_s);
    sc.chain_beta = c.get_double("analysis", "chain_beta", sc.chain_beta);
    if (c.has("analysis", "chain_levels"))
        sc.chain_levels =
            detail::to_int_list(c.get_list("analysis", "chain_levels", {}), "chain_levels");
    sc.deltas = c.get_list("analysis", "deltas", sc.deltas);
    sc.derivative_paths =
        static_cast<int>(c.get_int("analysis", "derivative_paths", sc.derivative_paths));
    sc.pair_a = c.get_double("analysis", "pair_a", sc.pair_a);
    sc.pair_b = c.get_double("analysis", "pair_b", sc.pair_b);
    sc.nonconfluence_paths = static_cast<int>(
        c.get_int("analysis", "nonconfluence_paths", sc.nonconfluence_paths));
    sc.nonconfluence_steps = static_cast<int>(
        c.get_int("analysis", "nonconfluence_steps", sc.nonconfluence_steps));

    c.reject_unconsumed();
    validate(sc);
    require(sc.backend == "mild" || sc.backend == "fd",
            "config: backend must be mild or fd");
    return sc;
}

struct RunResult {
    Scenario scenario;
    std::string out_dir;
    std::vector<std::string> files;  // artifact names in write order

    // certify
    Certificate certificate;
    bool cache_hit = false;
    std::vector<std::string> selection_log;

    // simulate
    double coupling_mean = 0.0;
    double coupling_max = 0.0;
    int coupling_paths = 0;
    double escape_fraction = 0.0;
    std::uint64_t noise_checksum = 0;

    // analyze
    DensityEstimate density;
    std::vector<double> density_norms;
    SemigroupReport semigroup_halfspace;
    SemigroupReport semigroup_cos;
    ChainReport chain;
    WeakDerivativeReport weak;
    NonconfluenceReport separation;
    HomeomorphismReport homeo;
    std::vector<std::pair<std::string, bool>> checks;
};

// The end-to-end run: sample fields, certify a damping, simulate the original
// and transformed walks on shared noise, then run every estimator. Stages are
// cumulative; each one appends its artifacts under out_dir and the manifest
// is written last with a hash of every file.
inline RunResult run_pipeline(const Scenario& sc, const RunOptions& ro) {
    int upto = detail::stage_rank(ro.stage);
    Scenario eff = sc;
    if (ro.seed != 0) eff.seed = ro.seed;
    validate(eff);

    std::filesystem::create_directories(ro.out_dir);
    auto at = [&](const std::string& f) { return ro.out_dir + "/" + f; };

    RunResult res;
    res.scenario = eff;
    res.out_dir = ro.out_dir;

    // ---------------- solve: sample the declared coefficients
    SdeProblem prob = make_problem(eff);
    const Grid& g = prob.grid();
    SeminormOptions sopts;
    sopts.exhaustive = ro.exhaustive_norms;
    {
        std::ofstream out(at("fields.txt"));
        require(static_cast<bool>(out), "run: cannot write fields.txt");
        KvWriter w(out);
        w.block("scenario");
        w.kv("id", eff.id);
        w.kv("drift_family", eff.drift_family);
        w.kv("diffusion_family", eff.diffusion_family);
        w.kv("drift_scale", eff.drift_scale);
        w.kv("diffusion_scale", eff.diffusion_scale);
        w.kv("alpha", eff.alpha);
        w.kv("q", eff.q);
        w.kv("gamma", eff.gamma);
        w.kv("ellipticity", eff.ellipticity);
        w.kv("hypotheses", eff.hypotheses);
        w.block("grid");
        w.kv("dim", g.dim);
        w.kv("half_width", g.half_width);
        w.kv("hx", g.hx);
        w.kv("horizon", g.horizon);
        w.kv("ht", g.ht);
        w.kv("nodes_per_axis", g.nodes_per_axis());
        w.kv("time_slices", g.time_count());
        w.block("drift");
        w.kv("channels", prob.b.channels());
        w.kv("time_constant", prob.b.time_constant());
        double sup = 0.0;
        for (int s = 0; s < prob.b.time_slices(); ++s)
            sup = std::max(sup, slice_sup_norm(prob.b, s));
        w.kv("sup_norm", sup);
        w.kv("holder_seminorm_t0", slice_holder_seminorm(prob.b, 0, eff.alpha, sopts));
        w.kv("time_lq_norm", lebesgue_holder_norm(prob.b, sopts));
        w.kv("exhaustive", ro.exhaustive_norms);
        if (prob.sigma) {
            w.block("diffusion");
            w.kv("channels", prob.sigma->channels());
            w.kv("time_constant", prob.sigma->time_constant());
            double ssup = 0.0;
            for (int s = 0; s < prob.sigma->time_slices(); ++s)
                ssup = std::max(ssup, slice_sup_norm(*prob.sigma, s));
            w.kv("sup_norm", ssup);
            w.kv("holder_seminorm_t0",
                 slice_holder_seminorm(*prob.sigma, 0, eff.alpha, sopts));
        }
        res.files.push_back("fields.txt");
    }
    if (g.dim == 1) {
        int n = g.nodes_per_axis();
        std::vector<double> xs(n), b0(n), bT(n);
        int last = prob.b.time_slices() - 1;
        for (int i = 0; i < n; ++i) {
            xs[i] = g.coord(i);
            b0[i] = prob.b.at(0, i, 0);
            bT[i] = prob.b.at(last, i, 0);
        }
        write_table(at("drift_profile.dat"), "x b_first_slice b_last_slice", {xs, b0, bT});
        res.files.push_back("drift_profile.dat");
        if (prob.sigma) {
            std::vector<double> s0(n);
            for (int i = 0; i < n; ++i) s0[i] = prob.sigma->at(0, i, 0);
            write_table(at("sigma_profile.dat"), "x sigma_first_slice", {xs, s0});
            res.files.push_back("sigma_profile.dat");
        }
    }

    // ---------------- certify: pick the damping, certified by the gradient
    std::optional<Transform> tr;
    if (upto >= 1) {
        DriftDiffusion in = make_transform_input(eff, prob);
        if (eff.backend == "fd" && !in.a) {
            // an explicit unit diffusion routes the solve to the graded
            // finite difference backend
            int d = g.dim;
            in.a = SpaceTimeField::sample(
                g, d * d, eff.alpha, eff.q,
                [d](double, const double*, int c) { return c % d == c / d ? 1.0 : 0.0; },
                true);
        }
        require(eff.backend == "mild" || eff.backend == "fd",
                "run: backend must be mild or fd");
        require(!(eff.backend == "mild" && in.a),
                "run: the mild backend needs identity diffusion; use backend = fd");

        TransformOptions topts;
        topts.margin = eff.margin;
        topts.lambda0 = eff.lambda0;
        topts.lambda_cap = eff.lambda_cap;

        std::uint64_t key = hash_field(in.b);
        if (in.a) key = hash_field(*in.a, key);
        double knobs[9] = {in.ellipticity,
                           topts.margin,
                           topts.lambda0,
                           topts.lambda_cap,
                           topts.mild.tol,
                           static_cast<double>(topts.mild.max_iter),
                           static_cast<double>(topts.mild.quad.nodes_per_unit),
                           topts.fd.tol,
                           static_cast<double>(topts.fd.max_sweeps)};
        key = fnv1a64(knobs, sizeof knobs, key);

        std::vector<std::string> notes;
        tr = load_transform(at("transform_u.txt"), key, &notes);
        res.cache_hit = tr.has_value();
        if (!tr) {
            notes.clear();
            tr = select_lambda(in, topts, &notes);
            save_transform(at("transform_u.txt"), key, *tr, notes);
        }
        res.selection_log = notes;
        res.certificate = tr->certificate();

        std::ofstream out(at("certificate.txt"));
        require(static_cast<bool>(out), "run: cannot write certificate.txt");
        KvWriter w(out);
        w.block("certificate");
        w.kv("lambda", res.certificate.lambda);
        w.kv("sup_grad_u", res.certificate.sup_grad_u);
        w.kv("margin", res.certificate.margin);
        w.kv("admissible", res.certificate.admissible());
        w.kv("backend", tr->solution().backend);
        w.kv("iterations", tr->solution().iterations);
        w.kv("residual", tr->solution().residual);
        w.block("selection");
        w.kv("tries", static_cast<int>(notes.size()));
        for (const std::string& n : notes) w.kv("try", n);
        res.files.push_back("certificate.txt");
        res.files.push_back("transform_u.txt");
    }

    // ---------------- simulate: both walks on shared noise, plus the flow
    PathEnsemble orig;
    FlowEnsemble flow;
    std::optional<EulerScheme> euler_flow;
    std::optional<TransformedScheme> mapped_flow;
    const Scheme* flow_scheme = nullptr;
    if (upto >= 2) {
        SimOptions so;
        so.steps = eff.steps;
        so.paths = eff.paths;
        so.seed = eff.seed;
        so.record_stride = eff.record_stride;
        so.box_factor = eff.box_factor;
        so.memory_budget_mb = eff.memory_budget_mb;

        orig = simulate_mollified(prob, eff.mollify_level, so);
        TransformedRun trun = simulate_transformed(*tr, prob, so);
        if (orig.noise_checksum != trun.y.noise_checksum)
            throw SimulationError("run: coupled ensembles drew different noise");
        res.noise_checksum = orig.noise_checksum;

        int flagged = 0;
        for (int p = 0; p < orig.paths(); ++p)
            if (orig.escaped[p] || trun.x.escaped[p]) ++flagged;
        res.escape_fraction = static_cast<double>(flagged) / orig.paths();

        // coupling: the mapped walk should shadow Phi applied to the
        // mollified original, up to scheme and smoothing error
        double cmean = 0.0, cmax = 0.0;
        int cused = 0;
        for (int p = 0; p < orig.paths(); ++p) {
            if (orig.escaped[p] || trun.y.escaped[p]) continue;
            double supd = 0.0;
            for (int r = 0; r < orig.records(); ++r) {
                double mapped[3];
                tr->phi(orig.times[r], orig.state(p, r), mapped);
                for (int k = 0; k < g.dim; ++k)
                    supd = std::max(supd,
                                    std::abs(mapped[k] - trun.y.state(p, r)[k]));
            }
            cmean += supd;
            cmax = std::max(cmax, supd);
            ++cused;
        }
        res.coupling_mean = cused ? cmean / cused : 0.0;
        res.coupling_max = cmax;
        res.coupling_paths = cused;

        detail::SeriesStats os = detail::record_stats(orig, 0);
        detail::SeriesStats ms = detail::record_stats(trun.x, 0);
        write_table(at("path_mean.dat"),
                    "t original_mean original_var mapped_mean mapped_var",
                    {orig.times, os.mean, os.var, ms.mean, ms.var});
        res.files.push_back("path_mean.dat");

        {
            std::ofstream out(at("ensembles.txt"));
            require(static_cast<bool>(out), "run: cannot write ensembles.txt");
            KvWriter w(out);
            w.block("original");
            w.kv("scheme", orig.scheme);
            w.kv("mollification", orig.mollification);
            w.kv("paths", orig.paths());
            w.kv("steps", orig.steps);
            w.kv("dt", orig.dt);
            w.kv("record_stride", orig.record_stride);
            w.kv("seed", orig.seed);
            w.kv("noise_checksum", to_hex(orig.noise_checksum));
            w.kv("escaped", static_cast<int>(std::count(orig.escaped.begin(),
                                                        orig.escaped.end(), 1)));
            w.kv("final_mean", os.mean.back());
            w.kv("final_var", os.var.back());
            w.block("transformed");
            w.kv("scheme", trun.x.scheme);
            w.kv("lambda", trun.x.transform_lambda);
            w.kv("paths", trun.x.paths());
            w.kv("noise_checksum", to_hex(trun.x.noise_checksum));
            w.kv("escaped", static_cast<int>(std::count(trun.x.escaped.begin(),
                                                        trun.x.escaped.end(), 1)));
            w.kv("final_mean", ms.mean.back());
            w.kv("final_var", ms.var.back());
            w.block("coupling");
            w.kv("paths_used", res.coupling_paths);
            w.kv("sup_distance_mean", res.coupling_mean);
            w.kv("sup_distance_max", res.coupling_max);
            res.files.push_back("ensembles.txt");
        }

        SimOptions fo = so;
        fo.steps = eff.flow_steps;
        fo.paths = eff.flow_paths;
        fo.record_stride = 1;
        if (eff.flow_transformed) {
            mapped_flow.emplace(*tr, prob);
            flow_scheme = &*mapped_flow;
        } else {
            euler_flow.emplace(prob);
            flow_scheme = &*euler_flow;
        }
        flow = flow_grid_dyadic(*flow_scheme, eff.flow_depth, eff.flow_lo, eff.flow_hi, fo);

        int count = flow.count();
        std::vector<double> fx(count), fmean(count), fsd(count);
        for (int i = 0; i < count; ++i) {
            fx[i] = flow.start(i)[0];
            double m = 0.0;
            for (int p = 0; p < flow.paths; ++p) m += flow.final_state(i, p)[0];
            m /= flow.paths;
            double v = 0.0;
            for (int p = 0; p < flow.paths; ++p) {
                double d = flow.final_state(i, p)[0] - m;
                v += d * d;
            }
            fmean[i] = m;
            fsd[i] = flow.paths > 1 ? std::sqrt(v / (flow.paths - 1)) : 0.0;
        }
        write_table(at("flow_finals.dat"), "x0 final_mean final_sd", {fx, fmean, fsd});
        res.files.push_back("flow_finals.dat");
    }

    // ---------------- analyze: estimators, report and end-of-run checks
    if (upto >= 3) {
        double dtime = eff.density_time > 0.0 ? eff.density_time : g.horizon;
        res.density = transition_density(orig, dtime);
        for (double s : eff.norm_orders)
            res.density_norms.push_back(lebesgue_norm(res.density, s));
        write_table(at("density.dat"), "y p", {res.density.ys, res.density.ps});
        res.files.push_back("density.dat");

        res.semigroup_halfspace = semigroup(flow, half_space_indicator(0.0));
        res.semigroup_cos = semigroup(flow, bounded_cos({1.0}));
        {
            int count = flow.count();
            std::vector<double> xs(count);
            for (int i = 0; i < count; ++i) xs[i] = flow.start(i)[0];
            write_table(at("semigroup.dat"),
                        "x0 halfspace_mean halfspace_stderr cos_mean cos_stderr",
                        {xs, res.semigroup_halfspace.means, res.semigroup_halfspace.stderrs,
                         res.semigroup_cos.means, res.semigroup_cos.stderrs});
            res.files.push_back("semigroup.dat");
        }

        res.chain = chain_holder(flow, eff.chain_s, eff.chain_beta, eff.chain_levels);
        {
            std::vector<double> scale(res.chain.levels.size());
            for (std::size_t i = 0; i < res.chain.levels.size(); ++i)
                scale[i] = std::ldexp(1.0, -res.chain.levels[i]);
            write_table(at("chain_moments.dat"), "scale k_moment",
                        {scale, res.chain.k_moments});
            res.files.push_back("chain_moments.dat");
        }

        SimOptions wo;
        wo.steps = eff.flow_steps;
        wo.paths = eff.derivative_paths;
        wo.seed = eff.seed;
        wo.box_factor = eff.box_factor;
        wo.memory_budget_mb = eff.memory_budget_mb;
        res.weak = weak_derivative(*flow_scheme, eff.x0, eff.deltas, wo);
        write_table(at("weak_quotients.dat"), "delta quotient_norm",
                    {res.weak.deltas, res.weak.norms});
        res.files.push_back("weak_quotients.dat");

        SimOptions no;
        no.steps = eff.nonconfluence_steps;
        no.paths = eff.nonconfluence_paths;
        no.seed = eff.seed;
        no.box_factor = eff.box_factor;
        no.memory_budget_mb = eff.memory_budget_mb;
        EulerScheme raw(prob);
        MonotoneWitnesses wit{eff.sigma_witness, eff.drift_witness};
        res.separation = nonconfluence(raw, prob, eff.pair_a, eff.pair_b, no, wit);

        res.homeo = homeomorphism_audit(flow);

        auto check = [&](const std::string& name, bool ok) {
            res.checks.emplace_back(name, ok);
        };
        check("density_mass_matches_unflagged_fraction",
              std::abs(res.density.mass -
                       static_cast<double>(res.density.used) / orig.paths()) <= 0.02);
        check("escape_fraction_below_one_percent", res.escape_fraction < 0.01);
        check("chain_bound_never_violated", res.chain.violations == 0);
        check("semigroup_means_respect_sup",
              res.semigroup_halfspace.bound <= 1.0 + 1e-12 &&
                  res.semigroup_cos.bound <= 1.0 + 1e-12);
        check("derivative_quotients_finite",
              std::isfinite(res.weak.bound) && res.weak.bound > 0.0);
        check("diffusion_nondegenerate_on_grid", res.separation.h2_ok);
        if (res.separation.h1_checked)
            check("diffusion_witness_inequality", res.separation.h1_ok);
        if (res.separation.h3_checked)
            check("drift_witness_inequality", res.separation.h3_ok);
        check("no_paths_collide", res.homeo.min_image_gap > 0.0);
        if (!eff.flow_transformed)
            check("flow_preserves_order", res.homeo.order_violations == 0);

        {
            std::ofstream out(at("reports.txt"));
            require(static_cast<bool>(out), "run: cannot write reports.txt");
            KvWriter w(out);
            w.block("density");
            w.kv("time", res.density.time);
            w.kv("used", res.density.used);
            w.kv("flagged", res.density.flagged);
            w.kv("bandwidth", res.density.bandwidth);
            w.kv("mean", res.density.mean);
            w.kv("sd", res.density.sd);
            w.kv("mass", res.density.mass);
            w.kv("degenerate", res.density.degenerate);
            w.list("norm_orders", eff.norm_orders);
            w.list("norms", res.density_norms);
            w.block("semigroup");
            w.kv("paths", res.semigroup_halfspace.paths);
            w.kv("halfspace_modulus", res.semigroup_halfspace.modulus);
            w.kv("halfspace_modulus_err", res.semigroup_halfspace.modulus_err);
            w.kv("halfspace_bound", res.semigroup_halfspace.bound);
            w.kv("cos_modulus", res.semigroup_cos.modulus);
            w.kv("cos_modulus_err", res.semigroup_cos.modulus_err);
            w.kv("cos_bound", res.semigroup_cos.bound);
            w.block("chain");
            w.kv("depth", res.chain.depth);
            w.kv("s", res.chain.s);
            w.kv("beta", res.chain.beta);
            w.kv("slope", res.chain.slope);
            w.kv("beta_eff", res.chain.beta_eff);
            w.kv("chain_mean", res.chain.chain_mean);
            w.kv("chain_max", res.chain.chain_max);
            w.kv("chain_bound", res.chain.chain_bound);
            w.kv("violations", res.chain.violations);
            w.list("k_moments", res.chain.k_moments);
            w.block("weak-derivative");
            w.kv("paths", res.weak.paths);
            w.list("deltas", res.weak.deltas);
            w.list("norms", res.weak.norms);
            w.list("gaps", res.weak.gaps);
            w.kv("bound", res.weak.bound);
            w.kv("gaps_decreasing", res.weak.gaps_decreasing);
            w.block("separation");
            w.kv("paths", res.separation.paths);
            w.kv("dt", res.separation.dt);
            w.kv("threshold", res.separation.threshold);
            w.kv("min_separation", res.separation.min_separation);
            w.kv("paths_below_threshold", res.separation.paths_below);
            w.kv("h1_checked", res.separation.h1_checked);
            w.kv("h1_ok", res.separation.h1_ok);
            w.kv("h2_ok", res.separation.h2_ok);
            w.kv("sigma_min", res.separation.sigma_min);
            w.kv("h3_checked", res.separation.h3_checked);
            w.kv("h3_ok", res.separation.h3_ok);
            for (const std::string& warn : res.separation.warnings) w.kv("warning", warn);
            w.block("homeomorphism");
            w.kv("order_violations", res.homeo.order_violations);
            w.kv("min_image_gap", res.homeo.min_image_gap);
            w.kv("neg_moment_worst", res.homeo.neg_moment_worst);
            w.kv("clipped", res.homeo.clipped);
            w.block("coupling");
            w.kv("paths_used", res.coupling_paths);
            w.kv("sup_distance_mean", res.coupling_mean);
            w.kv("sup_distance_max", res.coupling_max);
            w.block("checks");
            for (const auto& [name, ok] : res.checks) w.kv(name, ok ? "pass" : "fail");
            res.files.push_back("reports.txt");
        }
    }

    // ---------------- manifest, always last; the only place with a clock
    {
        std::ofstream out(at("manifest.txt"));
        require(static_cast<bool>(out), "run: cannot write manifest.txt");
        KvWriter w(out);
        w.block("manifest");
        w.kv("version", library_version);
        w.kv("scenario", eff.id);
        w.kv("seed", eff.seed);
        w.kv("stage", ro.stage);
        w.kv("created", detail::utc_now());
        w.block("files");
        for (const std::string& f : res.files) w.kv(f, to_hex(hash_file(at(f))));
    }

    std::string failed;
    for (const auto& [name, ok] : res.checks)
        if (!ok) failed += (failed.empty() ? "" : ", ") + name;
    if (!failed.empty()) throw AssertionError("end-of-run checks failed: " + failed);
    return res;
}

inline RunResult run_pipeline(const Config& c, const RunOptions& ro) {
    return run_pipeline(configure_scenario(c), ro);
}

}  // namespace zvonkin
