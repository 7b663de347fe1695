#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rtandem/experiment.hpp"

namespace {

rtandem::ExperimentConfig load_with_overrides(const std::string& config_path,
                                              const std::string& out_override,
                                              std::uint64_t seed_override, bool seed_set) {
    rtandem::ExperimentConfig config = rtandem::load_config(config_path);
    if (!out_override.empty()) config.out_prefix = out_override;
    if (seed_set) config.seed = seed_override;
    return config;
}

void print_files(const std::vector<std::string>& files) {
    for (const auto& f : files) std::cout << "wrote " << f << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"robust-tandem: minimax hypothesis-testing chains under "
                 "epsilon-contamination"};
    app.require_subcommand(1);

    std::string config_path, out_prefix, objective = "asymptotic-dd", preset;
    std::uint64_t seed = 0;
    bool seed_set = false;

    const auto add_common = [&](CLI::App* cmd, bool config_required) {
        auto* opt = cmd->add_option("--config", config_path, "experiment config (JSON)");
        if (config_required) opt->required();
        cmd->add_option("--out", out_prefix, "output path prefix");
        cmd->add_option("--seed", seed, "override the config seed")
            ->each([&](const std::string&) { seed_set = true; });
    };

    auto* lfd = app.add_subcommand("lfd", "solve the least favorable pair and print it");
    add_common(lfd, true);
    auto* chain = app.add_subcommand("chain", "exact stage errors along the chain (CSV)");
    add_common(chain, true);
    auto* optimize = app.add_subcommand("optimize", "solve a design objective");
    add_common(optimize, true);
    optimize->add_option("--objective", objective, "finite-dd | asymptotic-dd | unknown-sl");
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo chain run (CSV + summary)");
    add_common(simulate, true);
    auto* figure = app.add_subcommand("figure", "standard experiment presets");
    add_common(figure, false);
    figure->add_option("--preset", preset, "fig-rules | fig-mean | fig-eps")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (lfd->parsed()) {
            const auto config = load_with_overrides(config_path, out_prefix, seed, seed_set);
            const auto files = rtandem::run_lfd(config, config.out_prefix);
            std::ifstream in(files[0]);
            std::cout << in.rdbuf();
            print_files(files);
        } else if (chain->parsed()) {
            const auto config = load_with_overrides(config_path, out_prefix, seed, seed_set);
            print_files(rtandem::run_chain(config, config.out_prefix));
        } else if (optimize->parsed()) {
            const auto config = load_with_overrides(config_path, out_prefix, seed, seed_set);
            rtandem::Objective obj;
            if (objective == "finite-dd")
                obj = rtandem::Objective::kFiniteDd;
            else if (objective == "asymptotic-dd")
                obj = rtandem::Objective::kAsymptoticDd;
            else if (objective == "unknown-sl")
                obj = rtandem::Objective::kUnknownSl;
            else
                throw std::invalid_argument("unknown objective '" + objective + "'");
            print_files(rtandem::run_optimize(config, obj, config.out_prefix));
        } else if (simulate->parsed()) {
            const auto config = load_with_overrides(config_path, out_prefix, seed, seed_set);
            print_files(rtandem::run_simulate(config, config.out_prefix));
        } else if (figure->parsed()) {
            std::string prefix = out_prefix;
            if (prefix.empty() && !config_path.empty())
                prefix = rtandem::load_config(config_path).out_prefix;
            if (prefix.empty()) prefix = "out/figure";
            print_files(rtandem::run_figure(preset, prefix));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
