#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "modfun/errors.hpp"

int main(int argc, char** argv) {
    using namespace modfun::app;

    CLI::App app{"Modulating-function estimation and feedback toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<double> dt;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_option("--seed", seed, "RNG seed");
    app.add_option("--dt", dt, "sampling step")->check(CLI::PositiveNumber);
    app.add_option("--set", overrides, "config override key=value (repeatable, dotted keys)");

    const std::vector<std::pair<std::string, std::string>> help{
        {"nullcontrol", "compute modulating pairs (adjoint null controls) and write pair bundles"},
        {"estimate", "evaluate pair bundles on recorded or simulated data"},
        {"feedback", "run the plant under modulating-function feedback"},
        {"simulate", "open-loop simulation of a testbed"},
        {"demo-wave", "delayed-output stabilization of the vibrating string"},
        {"demo-heat", "moving-horizon reconstruction of the 2D heat state"},
    };
    for (const auto& [name, text] : help) app.add_subcommand(name, text)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kValidationFailure;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    RunConfig cfg;
    try {
        cfg = load_config(config_path.empty() ? std::nullopt : std::optional<fs::path>(config_path), overrides, out_dir,
                          seed, dt);
    } catch (const modfun::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return kValidationFailure;
    }
    return run_command(command, cfg, std::cerr);
}
