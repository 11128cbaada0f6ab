#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace sdiff {

struct CommandResult {
  nlohmann::json report;
  /// Raw artifact text (dump-christoffel without an output path).
  std::string text;
  /// 0 pass, 1 check failure.
  int status = 0;
};

const std::vector<std::string>& command_names();

/// Validates `config` and dispatches. Invalid configuration throws
/// Error(invalid_argument) naming the offending field.
CommandResult run_command(const std::string& command, const nlohmann::json& config);

}  // namespace sdiff
