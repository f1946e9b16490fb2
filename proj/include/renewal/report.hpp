#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "renewal/scenario.hpp"

namespace renewal {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitStatistical = 2;
inline constexpr int kExitConfig = 3;

struct RunResult {
  nlohmann::json report;
  /// kExitOk, kExitStatistical, or kExitValidation from run_validate. Other
  /// failures surface as ValidationError / ConfigError.
  int exit_code = kExitOk;
  /// (file name, contents) pairs for --format csv.
  std::vector<std::pair<std::string, std::string>> csv;
};

/// Lists every problem with the scenario instead of stopping at the first.
RunResult run_validate(const Scenario& scenario);
RunResult run_simulate(const Scenario& scenario, unsigned workers);
RunResult run_exact(const Scenario& scenario);
RunResult run_condition_check(const Scenario& scenario, unsigned workers);
RunResult run_bound(const Scenario& scenario, unsigned workers);
RunResult run_compare(const Scenario& scenario, unsigned workers);
/// Bound report on the alpha = 0.75 birth-death pair plus the E1/E2 comparison.
RunResult run_reproduce_sec3(const Scenario& scenario, unsigned workers);

/// Dispatch by subcommand name; throws ConfigError for unknown names.
RunResult run_command(const std::string& command, const Scenario& scenario, unsigned workers);

}  // namespace renewal
