#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "config.hpp"

namespace modfun::app {

enum ExitCode : int { kSuccess = 0, kValidationFailure = 2, kNumericalFailure = 3 };

struct CommandResult {
    OutputSet outputs;
    int exit_code = kSuccess;
    std::vector<std::string> messages;
};

CommandResult cmd_nullcontrol(const RunConfig& cfg);
CommandResult cmd_estimate(const RunConfig& cfg);
CommandResult cmd_feedback(const RunConfig& cfg);
CommandResult cmd_simulate(const RunConfig& cfg);
CommandResult cmd_demo_wave(const RunConfig& cfg);
CommandResult cmd_demo_heat(const RunConfig& cfg);

const std::vector<std::string>& command_names();

/// Runs a command, writes its outputs (plus the effective config) and returns the exit code.
/// Validation errors map to 2 and numerical failures to 3; in both cases nothing is written.
/// Diagnostics go to `log`.
int run_command(const std::string& name, const RunConfig& cfg, std::ostream& log);

}  // namespace modfun::app
