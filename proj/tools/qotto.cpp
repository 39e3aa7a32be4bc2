// Command-line front end: run a scenario config, list the registry, or
// validate a config without running it.
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qotto/scenarios.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumeric = 2;

int cmd_run(const std::string& config_path, const std::string& out_dir,
            const std::string& preset_override, int jobs_override) {
    qotto::ScenarioConfig cfg;
    try {
        cfg = qotto::load_config(config_path);
        if (!preset_override.empty()) cfg.preset = preset_override;
        if (jobs_override > 0) cfg.jobs = jobs_override;
    } catch (const qotto::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    try {
        qotto::run_scenario(cfg, out_dir);
    } catch (const qotto::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    }
    std::cout << "wrote " << (out_dir.empty() ? "." : out_dir) << "/"
              << cfg.output_path << "\n";
    return kExitOk;
}

int cmd_validate(const std::string& config_path) {
    try {
        qotto::validate_config(config_path);
    } catch (const qotto::ConfigError& e) {
        std::cerr << "invalid: " << e.what() << "\n";
        return kExitConfig;
    }
    std::cout << "ok\n";
    return kExitOk;
}

int cmd_list() {
    for (const auto& s : qotto::scenario_infos())
        std::printf("%-26s %s\n", s.name.c_str(), s.description.c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"driven three/four-level battery and two-stroke engine "
                 "simulations"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", preset;
    int jobs = 0;

    auto* run = app.add_subcommand("run", "run a scenario config");
    run->add_option("config", config_path, "scenario config file")
        ->required();
    run->add_option("--out", out_dir, "output directory (default .)");
    run->add_option("--preset", preset, "override the preset")
        ->check(CLI::IsMember({"paper", "desk"}));
    run->add_option("--jobs", jobs, "parallel workers (default: all cores)");

    auto* validate =
        app.add_subcommand("validate", "check a config without running");
    validate->add_option("config", config_path, "scenario config file")
        ->required();

    app.add_subcommand("list-scenarios", "list available scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    if (run->parsed()) return cmd_run(config_path, out_dir, preset, jobs);
    if (validate->parsed()) return cmd_validate(config_path);
    return cmd_list();
}
