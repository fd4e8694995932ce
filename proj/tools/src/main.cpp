#include "meanforce/cli/config.hpp"
#include "meanforce/cli/run.hpp"
#include "meanforce/version.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>

int main(int argc, char** argv) {
    using namespace meanforce::cli;

    CLI::App app{"Mean-force thermodynamics of a damped oscillator in a Lorentzian bath"};
    std::string config_path;
    std::string output;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::string format;
    app.add_option("--config", config_path, "YAML run configuration")->required()->check(CLI::ExistingFile);
    auto* output_opt = app.add_option("--output", output, "Output directory (overrides the config)");
    auto* seed_opt = app.add_option("--seed", seed, "Langevin seed (overrides the config)");
    app.add_option("--threads", threads, "Worker threads")
        ->envname("MEANFORCE_THREADS")
        ->check(CLI::PositiveNumber);
    auto* format_opt = app.add_option("--format", format, "Output format")
                           ->check(CLI::IsMember({"csv", "json", "both"}));
    app.set_version_flag("--version", std::string(meanforce::kVersion));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    RunConfig config;
    try {
        config = load_config(config_path);
    } catch (const std::exception& e) {
        std::cerr << error_json(e).dump() << '\n';
        return kExitConfigError;
    }
    if (*output_opt) config.output_path = output;
    if (*seed_opt) config.simulation.seed = seed;
    if (*format_opt) {
        config.format = format == "csv" ? OutputFormat::csv
                        : format == "json" ? OutputFormat::json
                                           : OutputFormat::both;
    }

    try {
        return run(config, RunOptions{threads});
    } catch (const std::exception& e) {
        std::cerr << error_json(e).dump() << '\n';
        return kExitTaskFailed;
    }
}
