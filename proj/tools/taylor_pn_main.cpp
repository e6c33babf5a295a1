#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "taylorpn/errors.hpp"
#include "taylorpn/experiments.hpp"

int main(int argc, char** argv) {
    CLI::App app{"taylor-pn: probabilistic Taylor expansion experiments"};
    app.footer(
        "experiments: posterior-demo | tracking | logistic | fitzhugh-nagumo | convergence\n"
        "common overrides (--set key=value): lambda, sigma2, sigma_min, N, steps, seeds, q,\n"
        "gamma_std, init_cov, N_list (colon separated, e.g. 20:40:80)");

    std::string experiment;
    app.add_option("experiment", experiment, "experiment name")->required();
    std::uint64_t seed = 0;
    app.add_option("--seed", seed, "RNG seed (default 0)");
    std::string out_dir = ".";
    app.add_option("--out", out_dir, "output directory (default .)");
    std::vector<std::string> sets;
    app.add_option("--set", sets, "override as key=value; repeatable");

    CLI11_PARSE(app, argc, argv);

    taylorpn::ExperimentConfig config;
    config.experiment = experiment;
    config.seed = seed;
    config.out_dir = out_dir;
    for (const auto& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
            return 1;
        }
        config.overrides[kv.substr(0, eq)] = kv.substr(eq + 1);
    }

    try {
        const auto files = taylorpn::run_experiment(config);
        std::printf("wrote %zu files to %s\n", files.size(), config.out_dir.string().c_str());
        for (const auto& f : files) std::printf("  %s\n", f.filename().string().c_str());
        return 0;
    } catch (const taylorpn::ValidationError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 2;
    }
}
