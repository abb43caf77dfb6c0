#include "hatax/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>

int main(int argc, char** argv) {
    CLI::App app{"hatax: stationary equilibria, wealth distributions, optimal flat-tax mixes "
                 "and transition paths for a heterogeneous-agent economy with idiosyncratic "
                 "capital-return risk"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand

    hatax::cli::RunManifest manifest;
    std::vector<std::string> overrides;

    app.add_option("--config", manifest.config_path, "configuration file (key = value lines)");
    app.add_option("--out", manifest.out_dir, "output directory")->capture_default_str();
    app.add_option("--seed", manifest.seed, "random seed for the verification oracles")
        ->capture_default_str();
    app.add_option("--threads", manifest.threads, "worker threads (0 = hardware default)");
    app.add_option("--set", overrides, "config override key=value (repeatable)")
        ->take_all();
    app.set_version_flag("--version", hatax::cli::kVersion);

    auto* calibrate = app.add_subcommand("calibrate", "emit the discretized ability process");
    auto* equilibrium = app.add_subcommand(
        "equilibrium", "baseline stationary equilibrium, wealth distribution and shares");
    auto* frontier = app.add_subcommand(
        "frontier", "revenue-preserving labor/capital frontier without a consumption tax");
    auto* optimize =
        app.add_subcommand("optimize", "global welfare optimum over all three tax rates");
    auto* sweep = app.add_subcommand("sweep", "re-optimize along a parameter sweep");
    std::string sweep_param, sweep_mode = "full";
    double sweep_from = 0.0, sweep_to = 0.0, sweep_step = 0.0;
    sweep->add_option("--param", sweep_param, "gamma or sigma")->required();
    sweep->add_option("--from", sweep_from, "sweep start");
    sweep->add_option("--to", sweep_to, "sweep end");
    sweep->add_option("--step", sweep_step, "sweep step");
    sweep->add_option("--mode", sweep_mode, "full | no_consumption_tax")
        ->capture_default_str();
    auto* transition =
        app.add_subcommand("transition", "perfect-foresight path to the optimal-tax regime");
    auto* verify = app.add_subcommand("verify", "Monte Carlo oracle suite");
    auto* plot = app.add_subcommand("plot-data", "emit figure data from stored artifacts");
    std::string figure;
    plot->add_option("--figure", figure, "figure id (fig2a ... fig11f)")->required();

    CLI11_PARSE(app, argc, argv);

    for (const auto& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "config error: --set expects key=value, got '%s'\n",
                         ov.c_str());
            return hatax::cli::kConfigError;
        }
        manifest.overrides.emplace_back(ov.substr(0, eq), ov.substr(eq + 1));
    }

    if (calibrate->parsed()) manifest.command = "calibrate";
    if (equilibrium->parsed()) manifest.command = "equilibrium";
    if (frontier->parsed()) manifest.command = "frontier";
    if (optimize->parsed()) manifest.command = "optimize";
    if (sweep->parsed()) {
        manifest.command = "sweep";
        manifest.args.emplace_back("param", sweep_param);
        manifest.args.emplace_back("mode", sweep_mode);
        if (sweep->count("--from")) manifest.args.emplace_back("from", std::to_string(sweep_from));
        if (sweep->count("--to")) manifest.args.emplace_back("to", std::to_string(sweep_to));
        if (sweep->count("--step")) manifest.args.emplace_back("step", std::to_string(sweep_step));
    }
    if (transition->parsed()) manifest.command = "transition";
    if (verify->parsed()) manifest.command = "verify";
    if (plot->parsed()) {
        manifest.command = "plot-data";
        manifest.args.emplace_back("figure", figure);
    }

    return hatax::cli::run(manifest);
}
