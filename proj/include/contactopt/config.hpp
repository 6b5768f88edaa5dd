#pragma once

// Run configuration: a typed struct behind a flat schema of section.key
// entries. Read from INI (sections, key = value) or JSON (nested objects);
// unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace contactopt::config {

struct RunConfig {
  // [run]
  std::string scenario = "wedge";  // wedge | clamp-lite | quadratic | circle | quadratic-1d
  std::string method = "gradient";  // gradient | cbo
  std::uint64_t seed = 0;
  std::string output_dir;  // empty: runs/<scenario>-<method>-seed<seed>

  // [gradient]
  int max_iter = 100;
  double dual_tol = 1e-4;
  double compl_tol = 1e-7;
  double viol_tol = 1e-6;
  double mu_init = 0.1;

  // [cbo]
  int budget = 50;
  int n_init = 8;
  int n_candidates = 10000;
  double xi = 0.01;
  bool polish = false;

  // [wedge]
  double wedge_theta_min = 30.0;
  double wedge_theta_max = 60.0;
  double wedge_p1_min = 0.5;
  double wedge_p1_max = 1.5;
  double wedge_lambda_lower = 1.0;
  double wedge_lambda_upper = 20.0;
  int wedge_lower_segments = 4;
  double wedge_p2 = 2.0;
  double wedge_support_stiffness = 0.02;
  double wedge_youngs = 200.0;
  double wedge_poisson = 0.3;
  int wedge_left_along = 20;
  int wedge_right_along = 22;
  int wedge_across = 8;
  std::vector<double> wedge_initial{39.0, 41.0, 1.0};
  std::vector<double> wedge_seed{36.0, 42.0, 1.2};

  // [clamp-lite]
  std::vector<double> clamp_lower{0.35, 0.35, 0.443, 0.3834};
  std::vector<double> clamp_upper{0.408, 0.354, 0.47, 0.44};
  double clamp_seal_min = 30.0;
  double clamp_element_lower = 300.0;
  double clamp_element_upper = 650.0;
  double clamp_p_norm = 8.0;
  std::string clamp_aggregation = "pnorm";  // gradient path: pnorm | max
  double clamp_band_stiffness = 1e3;
  double clamp_youngs = 2e6;
  double clamp_poisson = 0.3;
  int clamp_flange_along = 40;
  int clamp_retainer_along = 32;
  std::vector<double> clamp_initial{0.35, 0.32, 0.45, 0.41};
  std::vector<double> clamp_seed{0.4015, 0.3515, 0.4440, 0.3994};

  bool operator==(const RunConfig&) const = default;
};

/// One documented configuration key.
struct KeyInfo {
  std::string section;
  std::string key;
  std::string default_value;
  std::string doc;
};

/// Every accepted key with its default, in serialization order.
std::vector<KeyInfo> schema();

/// Reads INI or JSON (chosen by extension, .json is JSON). A JSON run
/// manifest is accepted too: its "config" member is used. Throws UsageError
/// with the offending line or key.
RunConfig load(const std::filesystem::path& path);
RunConfig parse_ini(const std::string& text);
RunConfig parse_json(const std::string& text);
RunConfig from_json(const nlohmann::json& j);

std::string to_ini(const RunConfig& cfg);
nlohmann::json to_json(const RunConfig& cfg);

/// Throws UsageError on values outside their domain.
void validate(const RunConfig& cfg);

}  // namespace contactopt::config
