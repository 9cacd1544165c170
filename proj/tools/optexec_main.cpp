#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "optexec/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Optimal execution with S-shaped market impact"};
    app.set_version_flag("--version", std::string(optexec::kVersion));
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string output_dir;

    const std::map<std::string, std::string> descriptions{
        {"twap", "Closed-form TWAP strategy and value"},
        {"mixed-power", "Closed-form solution for the mixed-power model"},
        {"levy-nu", "Critical speed of the Levy effective impact"},
        {"extreme-compare", "Extreme impact comparison for a shifted-convex model"},
        {"solve-hjb", "Solve the reduced HJB equation on a grid"},
        {"simulate", "Monte Carlo simulation of one strategy"},
        {"compare", "Compare strategies on common random numbers"},
        {"hamiltonian-check", "Closed-form Hamiltonian against brute force"},
        {"impact-plot", "Tabulate g and h and report the S-shape conditions"},
    };
    std::vector<std::pair<std::string, CLI::App*>> subs;
    for (const auto& name : optexec::command_names()) {
        auto* sub = app.add_subcommand(name, descriptions.count(name) ? descriptions.at(name) : "");
        sub->add_option("-c,--config", config_path, "INI config file");
        sub->add_option("-s,--set", overrides, "Override as section.key=value")->take_all();
        sub->add_option("-o,--output-dir", output_dir, "Output directory ([output] dir)");
        subs.emplace_back(name, sub);
    }
    auto* replay = app.add_subcommand("replay", "Re-run from a manifest.ini");
    std::string manifest_path;
    replay->add_option("manifest", manifest_path, "manifest.ini written by a previous run")
        ->required();
    replay->add_option("-o,--output-dir", output_dir, "Output directory ([output] dir)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : optexec::kExitConfig;
    }

    try {
        std::string command;
        optexec::RunConfig config;
        if (replay->parsed()) {
            config = optexec::RunConfig::from_file(manifest_path);
            command = config.get_string("run", "command");
        } else {
            for (const auto& [name, sub] : subs) {
                if (sub->parsed()) command = name;
            }
            if (!config_path.empty()) config = optexec::RunConfig::from_file(config_path);
            for (const auto& o : overrides) config.apply_override(o);
        }
        if (!output_dir.empty()) config.set("output", "dir", output_dir);
        return optexec::run_command(command, config, std::cout, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "error (config): " << e.what() << '\n';
        return optexec::kExitConfig;
    }
}
