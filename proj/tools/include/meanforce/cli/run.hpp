#pragma once

#include "meanforce/cli/config.hpp"

#include <json.hpp>

#include <exception>
#include <string>

namespace meanforce::cli {

struct RunOptions {
    unsigned threads = 1;
};

/// Everything a task produces, before anything touches the disk.
struct RunOutcome {
    /// 0 when the task succeeded and every check it performs passed.
    int exit_code = 0;
    nlohmann::json report;
    std::string csv;
};

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitTaskFailed = 1;
inline constexpr int kExitConfigError = 2;

/// Runs the configured task. Module errors propagate as exceptions.
RunOutcome execute(const RunConfig& config, const RunOptions& options = {});

/// Runs the task and writes results.csv and/or report.json under config.output_path.
/// Module errors are caught and written as structured error JSON; returns the exit code.
int run(const RunConfig& config, const RunOptions& options = {});

/// {"status": "error", "error": {"kind", "message", ...}} for any exception.
nlohmann::json error_json(const std::exception& error);

/// Library and toolchain versions recorded in every report.
nlohmann::json versions_json();

/// %.17g formatting used for every number written to CSV.
std::string format_number(double value);

} // namespace meanforce::cli
