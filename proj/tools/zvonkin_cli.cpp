// Command-line front end: `run` executes a configured scenario through the
// pipeline stages, `list-scenarios` prints the built-in library. Exit codes
// separate the failure classes so scripts can react to each:
//   0 success            2 bad config or usage   3 pde solver failure
//   4 no certificate     5 simulation failure    6 end-of-run check failed
#include <CLI11.hpp>
#include <iostream>

#include "zvonkin/pipeline.hpp"

namespace {

void list_scenarios() {
    for (const zvonkin::Scenario& sc : zvonkin::scenario_library()) {
        std::cout << sc.id << "\n";
        std::cout << "  drift " << sc.drift_family << " (scale "
                  << zvonkin::format_double(sc.drift_scale) << "), diffusion "
                  << sc.diffusion_family << ", alpha " << zvonkin::format_double(sc.alpha)
                  << ", q " << zvonkin::format_double(sc.q);
        if (sc.gamma > 0.0)
            std::cout << ", time singularity " << zvonkin::format_double(sc.gamma);
        std::cout << "\n";
        std::cout << "  backend " << sc.backend << ", flow "
                  << (sc.flow_transformed ? "transformed" : "euler") << " depth "
                  << sc.flow_depth << ", witnesses "
                  << (sc.sigma_witness ? (sc.drift_witness ? "sigma+drift" : "sigma")
                                       : "none")
                  << "\n";
        std::cout << "  " << sc.hypotheses << "\n";
    }
}

int run(const std::string& config_path, const zvonkin::RunOptions& ro) {
    zvonkin::Config cfg = zvonkin::Config::parse_file(config_path);
    zvonkin::Scenario sc = zvonkin::configure_scenario(cfg);
    std::cout << "scenario " << sc.id << ", seed "
              << (ro.seed ? ro.seed : sc.seed) << ", stage " << ro.stage << ", out "
              << ro.out_dir << "\n";

    zvonkin::RunResult res = zvonkin::run_pipeline(sc, ro);

    if (ro.stage != "solve") {
        std::cout << "certificate: lambda " << zvonkin::format_double(res.certificate.lambda)
                  << ", sup grad " << zvonkin::format_double(res.certificate.sup_grad_u)
                  << (res.cache_hit ? " (cache hit)" : "") << "\n";
    }
    if (ro.stage != "solve" && ro.stage != "certify") {
        std::cout << "ensembles: escape fraction "
                  << zvonkin::format_double(res.escape_fraction) << ", coupling sup mean "
                  << zvonkin::format_double(res.coupling_mean) << "\n";
    }
    if (!res.checks.empty()) {
        int pass = 0;
        for (const auto& [name, ok] : res.checks) pass += ok ? 1 : 0;
        std::cout << "checks: " << pass << "/" << res.checks.size() << " pass\n";
    }
    std::cout << "artifacts: " << res.out_dir << " (" << res.files.size()
              << " files + manifest)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"holder drift removal: solve, certify, simulate, analyze"};
    app.require_subcommand(1);

    std::string config_path;
    zvonkin::RunOptions ro;
    CLI::App* cmd_run = app.add_subcommand("run", "execute a configured scenario");
    cmd_run->add_option("config", config_path, "path to the run configuration")->required();
    cmd_run->add_option("--out", ro.out_dir, "output directory (default: out)");
    cmd_run->add_option("--stage", ro.stage,
                        "run up to this stage: solve, certify, simulate, analyze, all");
    cmd_run->add_option("--seed", ro.seed, "replace the configured seed (nonzero)");
    cmd_run->add_flag("--exhaustive-norms", ro.exhaustive_norms,
                      "enumerate every node pair in the field seminorms");

    CLI::App* cmd_list =
        app.add_subcommand("list-scenarios", "print the built-in scenario library");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (cmd_list->parsed()) {
            list_scenarios();
            return 0;
        }
        return run(config_path, ro);
    } catch (const zvonkin::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const zvonkin::SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 3;
    } catch (const zvonkin::CertificateError& e) {
        std::cerr << "certificate error: " << e.what() << "\n";
        return 4;
    } catch (const zvonkin::SimulationError& e) {
        std::cerr << "simulation error: " << e.what() << "\n";
        return 5;
    } catch (const zvonkin::AssertionError& e) {
        std::cerr << "check failed: " << e.what() << "\n";
        return 6;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
