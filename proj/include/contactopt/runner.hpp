#pragma once

// Batch driver behind the command line: one optimization run per config, and
// statistics over finished runs.

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "contactopt/config.hpp"
#include "contactopt/scenarios.hpp"

namespace contactopt::runner {

inline constexpr const char* kToolName = "contactopt";
inline constexpr const char* kVersion = "0.1.0";
/// Bumped whenever a CSV column changes.
inline constexpr int kCsvSchemaVersion = 1;

/// Environment variable that, when set, prefixes relative output directories.
inline constexpr const char* kOutputRootEnv = "CONTACTOPT_OUT";

std::unique_ptr<scenarios::Scenario> make_scenario(const config::RunConfig& cfg);

/// output_dir (or runs/<scenario>-<method>-seed<seed> when empty), under the
/// output root when it is relative and the environment variable is set.
std::filesystem::path resolve_output_dir(const config::RunConfig& cfg);

struct RunResult {
  int exit_code = 0;  // 0 converged / feasible, 2 not converged or no feasible design
  std::string status;
  std::filesystem::path dir;
};

/// Runs one optimization and writes manifest.json, iterates.csv (gradient) or
/// samples.csv (cbo), profile_initial.csv, profile_final.csv and summary.json.
/// Throws UsageError for invalid configurations.
RunResult run(const config::RunConfig& cfg, std::ostream& log);

struct CompareReport {
  std::string scenario;
  std::vector<std::filesystem::path> runs;
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;  // sample standard deviation, 0 for a single run
  std::optional<std::filesystem::path> reference_run;
  Eigen::VectorXd reference;
  Eigen::VectorXd relative_error;  // |mean - reference| / |reference|

  nlohmann::json to_json() const;
};

/// Statistics of the final designs of finished runs. A directory without
/// summary.json is searched one level down (repeat runs). Throws UsageError
/// when the runs (or the reference) disagree on the scenario.
CompareReport compare(const std::vector<std::filesystem::path>& dirs,
                      const std::optional<std::filesystem::path>& reference = std::nullopt);

}  // namespace contactopt::runner
