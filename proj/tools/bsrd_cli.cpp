// Command-line front end: simulate, check, and browse scenario presets.
//
// Exit codes: 0 success, 2 check failure, 3 blow-up detected,
// 4 configuration error, 5 runtime failure.

#include <bsrd/bsrd.hpp>

#include <CLI11.hpp>

#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace {

enum ExitCode : int {
    kOk = 0,
    kCheckFailed = 2,
    kBlowup = 3,
    kConfigError = 4,
    kRuntimeFailure = 5,
};

int cmd_simulate(const std::string& config_path, const std::string& out_dir, std::optional<int> threads)
{
    bsrd::ScenarioConfig config;
    std::optional<bsrd::BuiltScenario> built;
    bsrd::ScenarioChecks checks;
    try {
        config = bsrd::load_scenario(config_path);
        if (threads) config.solver.threads = *threads;
        config.solver.validate();
        built = bsrd::build_problem(config);
        checks = bsrd::run_checks(config);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    }
    for (const auto& w : built->warnings) std::cerr << "warning: " << w << "\n";

    bsrd::RunOutcome outcome;
    try {
        outcome = bsrd::run(built->problem, config.solver);
    } catch (const std::exception& e) {
        std::cerr << "runtime failure: " << e.what() << "\n";
        return kRuntimeFailure;
    }

    const std::filesystem::path dir = out_dir.empty() ? std::filesystem::path(config.outputs.directory) : std::filesystem::path(out_dir);
    try {
        bsrd::write_outputs(outcome, config, built->problem, checks, dir);
    } catch (const std::exception& e) {
        std::cerr << "output failure: " << e.what() << "\n";
        return kRuntimeFailure;
    }

    std::cout << config.name << ": " << bsrd::to_string(outcome.status) << " at t = "
              << bsrd::format_double(outcome.final_state.t) << " (" << outcome.final_state.step_count
              << " steps), outputs in " << dir.string() << "\n";
    if (!outcome.detail.empty()) std::cout << "  " << outcome.detail << "\n";

    switch (outcome.status) {
    case bsrd::RunStatus::completed: return kOk;
    case bsrd::RunStatus::blowup_detected: return kBlowup;
    default: return kRuntimeFailure;
    }
}

int cmd_check(const std::string& config_path, std::optional<int> dimension)
{
    bsrd::ScenarioConfig config;
    bsrd::ScenarioChecks checks;
    try {
        config = bsrd::load_scenario(config_path);
        if (dimension) {
            if (*dimension < 2) throw bsrd::ConfigError("--dimension", "must be at least 2");
            config.checks.dimension = *dimension;
        }
        checks = bsrd::run_checks(config);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    }
    std::cout << bsrd::to_json(checks, config).dump(2) << "\n";
    return checks.all_passed() ? kOk : kCheckFailed;
}

int cmd_scenario_list()
{
    for (const auto& p : bsrd::preset_list()) std::cout << p.name << "\t" << p.summary << "\n";
    return kOk;
}

int cmd_scenario_show(const std::string& name)
{
    if (!bsrd::is_preset(name)) {
        std::cerr << "config error: unknown preset '" << name << "'\n";
        return kConfigError;
    }
    std::cout << bsrd::preset_json(name).dump(2) << "\n";
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Bulk-surface reaction-diffusion solver and structural checker"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::optional<int> threads;
    auto* simulate = app.add_subcommand("simulate", "Run a scenario and write diagnostics");
    simulate->add_option("--config", config_path, "Scenario JSON file, manifest.json, or preset name")->required();
    simulate->add_option("--out", out_dir, "Output directory (default: outputs.directory of the config)");
    simulate->add_option("--threads", threads, "Worker threads for the implicit solves")->check(CLI::PositiveNumber);

    std::optional<int> dimension;
    auto* check = app.add_subcommand("check", "Run the structural condition checks and print a JSON report");
    check->add_option("--config", config_path, "Scenario JSON file, manifest.json, or preset name")->required();
    check->add_option("--dimension", dimension, "Space dimension n for the growth thresholds (default from config)");

    auto* scenario = app.add_subcommand("scenario", "Inspect built-in scenario presets");
    scenario->require_subcommand(1);
    auto* list = scenario->add_subcommand("list", "List preset names");
    std::string show_name;
    auto* show = scenario->add_subcommand("show", "Print a preset as a JSON config");
    show->add_option("name", show_name, "Preset name")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }

    if (simulate->parsed()) return cmd_simulate(config_path, out_dir, threads);
    if (check->parsed()) return cmd_check(config_path, dimension);
    if (list->parsed()) return cmd_scenario_list();
    if (show->parsed()) return cmd_scenario_show(show_name);
    return kConfigError;
}
