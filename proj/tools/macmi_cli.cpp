#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "macmi/bayes.hpp"
#include "macmi/config.hpp"
#include "macmi/grad.hpp"
#include "macmi/info.hpp"
#include "macmi/kernels.hpp"
#include "macmi/quadrature.hpp"
#include "macmi/sweep.hpp"
#include "macmi/system.hpp"
#include "macmi/version.hpp"

namespace {

int cmd_run(const std::string& config_path, int workers_override,
            const std::string& out_override) {
    const macmi::Config cfg = macmi::load_config(config_path);
    macmi::SweepSpec spec = macmi::sweep_from_config(cfg);
    if (workers_override >= 0) {
        spec.workers = workers_override;
        spec.solver.workers = workers_override;
    }
    if (!out_override.empty()) spec.out_path = out_override;
    const macmi::SweepResult res = macmi::run_sweep(spec);
    std::cout << res.summary << "\n";
    if (spec.out_path.empty()) std::cout << res.csv;
    return 0;
}

// built-in verification: the derivative identity, the closed-form
// gradients, and the mixture-score identity, each on a small interfering
// system with deterministic references where available
int cmd_check(uint64_t seed, uint64_t n_samples) {
    using namespace macmi;
    int failures = 0;
    const auto report = [&failures](const char* name, double value,
                                    double tol) {
        const bool ok = value <= tol;
        if (!ok) ++failures;
        std::printf("%-44s %11.3e  (tol %.0e)  %s\n", name, value, tol,
                    ok ? "PASS" : "FAIL");
    };

    const MacSystem sys = scalar_system(1.0, 1.0, 0.7, 1.0, 1.0);

    const ImmseReport immse = immse_identity_check(
        sys, {0.5, 1.0, 2.0, 5.0}, 0.0, seed, n_samples);
    report("immse identity, max rel error", immse.max_rel_error, 1e-2);

    double worst_grad = 0;
    const auto fn = [](const MacSystem& s) { return mi_quad(s); };
    for (const WrtMatrix wrt :
         {WrtMatrix::h1, WrtMatrix::h2, WrtMatrix::p1, WrtMatrix::p2}) {
        Eigen::MatrixXcd analytic;
        switch (wrt) {
            case WrtMatrix::h1: analytic = grad_h(sys, 1, seed, n_samples); break;
            case WrtMatrix::h2: analytic = grad_h(sys, 2, seed, n_samples); break;
            case WrtMatrix::p1: analytic = grad_p(sys, 1, seed, n_samples); break;
            case WrtMatrix::p2: analytic = grad_p(sys, 2, seed, n_samples); break;
        }
        const GradientReport rep =
            gradient_report(analytic, fd_gradient(sys, wrt, 0.0, fn));
        worst_grad = std::max(worst_grad, rep.rel_error);
    }
    report("gradients vs finite differences", worst_grad, 1e-5);

    double worst_score = 0;
    for (const ChannelSample& s : synthesize(sys, seed, 0, 16))
        worst_score = std::max(worst_score, score_identity_residual(sys, s.y));
    report("score identity, max residual", worst_score, 1e-9);

    if (failures == 0)
        std::printf("all checks passed\n");
    else
        std::printf("%d check(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-user Gaussian MAC mutual-information toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    int workers_override = -1;
    CLI::App* run =
        app.add_subcommand("run", "run a sweep experiment from a config file");
    run->add_option("config", config_path, "key=value config file")
        ->required();
    run->add_option("--workers", workers_override,
                    "override the worker count (results are identical for "
                    "any value)");
    run->add_option("--out", out_override, "override the output CSV path");

    uint64_t seed = 1;
    uint64_t n_samples = 200000;
    CLI::App* check =
        app.add_subcommand("check", "run the built-in verification suites");
    check->add_option("--seed", seed, "sampling seed");
    check->add_option("--n-samples", n_samples, "Monte-Carlo budget");

    CLI::App* version =
        app.add_subcommand("version", "print version and build information");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return cmd_run(config_path, workers_override, out_override);
        if (check->parsed()) return cmd_check(seed, n_samples);
        if (version->parsed()) {
            std::cout << "macmi " << macmi::kVersion
                      << " (kernels: " << macmi::active_kernels().name
                      << ")\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
