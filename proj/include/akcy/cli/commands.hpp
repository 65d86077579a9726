#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "akcy/cli/config.hpp"
#include "akcy/suites.hpp"

namespace akcy::cli {

/// Process exit codes.
enum ExitCode : int { exit_success = 0, exit_invariant_failure = 2, exit_solver_failure = 3, exit_config_error = 4 };

struct ScenarioData {
  AKTriple<double> triple;
  ScalarField<double> F; ///< normalized source
};

/// Sum of the configured cosine terms.
ScalarField<double> build_source(const Grid &grid, const std::vector<FourierTerm> &terms);

/// Triple and normalized F of a configuration; throws ScenarioInvalid.
ScenarioData build_scenario(const RunConfig &c);

/// Result of one command. It is produced on success and on failure alike;
/// `failed_stage` names the stage that raised when `exit_code` is nonzero
/// for that reason.
struct RunReport {
  std::string command;
  nlohmann::json config;
  int exit_code = exit_success;
  std::string failed_stage;
  std::string error;
  std::vector<SuiteResult> criteria;
  std::vector<SuiteResult> logged; ///< measured and reported, never asserted
  nlohmann::json final_residuals = nlohmann::json::object();
  nlohmann::json artifacts = nlohmann::json::object();
  nlohmann::json extra = nlohmann::json::object();
  std::vector<std::pair<std::string, double>> timings;

  bool success() const { return exit_code == exit_success; }
  nlohmann::json to_json() const;
};

RunReport run(const RunConfig &c);
RunReport check(const RunConfig &c);
RunReport diagnose(const std::string &dump_path, const RunConfig &c, double t = 1);
RunReport sweep(const RunConfig &c, const std::vector<double> &eps, bool solve = true);

/// Writes `<output dir>/<command>_report.json` and records its path.
std::string write_report(RunReport &r, const std::string &output_dir);

/// Convergence log columns, one row per accepted step.
const std::vector<std::string> &csv_columns();
std::string csv_row(const DiagnosticsRecord<double> &r);

} // namespace akcy::cli
