// Command-line front end: validate and run scenario configs, print presets.
//
// Exit codes: 0 success, 1 validation error, 2 runtime or estimation failure
// beyond the 5% threshold. Worker count comes from TWICS_WORKERS; all science
// parameters live in the config file.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "twics/twics.hpp"

namespace {

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            std::optional<std::size_t> reps, std::optional<std::string> out_dir) {
    twics::ScenarioConfig config;
    try {
        config = twics::load_and_validate_config(config_path);
    } catch (const twics::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        for (const auto& issue : e.issues) std::cerr << "  - " << issue << "\n";
        return 1;
    }
    if (seed) config.master_seed = *seed;
    if (reps) config.replications = *reps;
    if (out_dir) config.output_dir = *out_dir;

    try {
        const unsigned workers = twics::worker_count_from_env();
        const twics::ScenarioResult result = twics::run_scenario(config, workers);
        const auto sweep_runs = twics::run_sweep(config, workers);
        const auto manifest =
            twics::emit_reports(config, result, sweep_runs, config.output_dir);
        for (const auto& f : manifest)
            std::cout << config.output_dir << "/" << f << "\n";
        if (twics::exceeded_failure_threshold(result)) {
            std::cerr << "error: estimation failures exceeded the 5% threshold\n";
            return 2;
        }
        for (const auto& run : sweep_runs)
            if (twics::exceeded_failure_threshold(run.result)) {
                std::cerr << "error: estimation failures exceeded the 5% threshold "
                             "in a sweep run\n";
                return 2;
            }
        return 0;
    } catch (const twics::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

int cmd_presets(const std::string& name) {
    if (name.empty()) {
        for (const auto& p : twics::preset_catalog()) std::cout << p.name << "\n";
        return 0;
    }
    const auto preset = twics::find_preset(name);
    if (!preset) {
        std::cerr << "error: unknown preset '" << name << "'\n";
        return 1;
    }
    std::cout << twics::to_json(preset->config).dump(2) << "\n";
    return 0;
}

int cmd_validate(const std::string& config_path) {
    try {
        (void)twics::load_and_validate_config(config_path);
        std::cout << "ok\n";
        return 0;
    } catch (const twics::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        for (const auto& issue : e.issues) std::cerr << "  - " << issue << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Trial-within-cohorts simulation and design engine"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> reps;
    std::optional<std::string> out_dir;
    auto* run = app.add_subcommand("run", "run a scenario config and emit reports");
    run->add_option("config", config_path, "path to a scenario JSON config")->required();
    run->add_option("--seed", seed, "override master_seed");
    run->add_option("--reps", reps, "override replications");
    run->add_option("--out", out_dir, "override output directory");

    std::string preset_name;
    auto* presets = app.add_subcommand("presets", "list presets or print one as JSON");
    presets->add_option("name", preset_name, "preset name (prints its config)");

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "validate a scenario config");
    validate->add_option("config", validate_path, "path to a scenario JSON config")->required();

    auto* version = app.add_subcommand("version", "print the engine version");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return cmd_run(config_path, seed, reps, out_dir);
    if (presets->parsed()) return cmd_presets(preset_name);
    if (validate->parsed()) return cmd_validate(validate_path);
    if (version->parsed()) {
        std::cout << twics::kVersion << "\n";
        return 0;
    }
    return 0;
}
