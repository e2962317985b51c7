#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "kinetics/ibvp_stability.hpp"
#include "kinetics/run_config.hpp"

namespace kinetics {

enum ExitCode : int { exit_pass = 0, exit_numerical = 1, exit_config = 2 };

/// Runs one subcommand (steady, stability, verify, kernels, cycles, print-config).
/// Summaries go to `log`; CSV and snapshots go to the paths in the config.
/// Config errors propagate as ConfigError.
int run(const std::string& subcommand, const RunConfig& config, std::ostream& log);

/// Same, mapping exceptions to exit codes (ConfigError -> 2, anything else -> 1).
int run_guarded(const std::string& subcommand, const RunConfig& config, std::ostream& log);

/// One row per bootstrap rung and per outer iteration:
/// stage, iter, lambda, residual, contraction.
void write_solver_csv(const std::string& path, const SolverReport& report);
void render_summary(std::ostream& os, const SolverReport& report);
void render_summary(std::ostream& os, const StabilityRun& run, const DecayFit& fit);

struct CheckResult {
  std::string name;
  std::string tag;  // trivial, derived or paper
  bool pass = false;
  std::string detail;
};
/// Property checks behind `verify`; `suite` is trivial, derived, paper or all.
std::vector<CheckResult> run_suite(const std::string& suite, const RunConfig& config);

}  // namespace kinetics
