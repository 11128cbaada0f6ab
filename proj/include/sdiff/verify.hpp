#pragma once

// Named verification suites with machine-readable verdicts, and the golden
// constants that pin the normalisation choices (gamma, rho, Ricci signs,
// Koszul convention).

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace sdiff {

struct GoldenConstants {
  /// (sum nabla nabla - R^N) B_m = -gamma c_N |m|^2 B_m
  double gamma = 1.0;
  /// |ricci_truncated| / |closed form| at s = 0 (representative-set factor)
  double rho = 1.0;
  /// sign of ricci_truncated relative to the closed form
  int ricci_orientation = -1;
  /// sign of R^N inside the bracket of the geodesic equation (L + sign/2 R)
  int ricci_term_sign = -1;
  std::string koszul = "left";
};

GoldenConstants builtin_golden();
GoldenConstants load_golden(const std::string& path);
void save_golden(const std::string& path, const GoldenConstants& g);
nlohmann::json golden_to_json(const GoldenConstants& g);

struct Check {
  std::string name;
  double measured = 0.0;
  double expected = 0.0;
  double tol = 0.0;
  bool pass = true;
  /// Informational checks are reported but do not affect the verdict.
  bool gating = true;
  std::string note;
};

struct SuiteParams {
  double n = 3.0;
  std::vector<double> s_values{0.0};
  double nu = 0.1;
  double T = 1.0;
  double dt = 1e-3;
  std::size_t n_paths = 10000;
  std::size_t n_particles = 64;
  std::uint64_t seed = 1;
  int workers = 1;
  int grid = 64;
  bool calibrate = false;
  /// Empty: built-in constants, nothing persisted.
  std::string golden_path;
  /// Overrides keyed by check-name prefix.
  std::map<std::string, double> tolerances;
};

struct SuiteReport {
  std::string suite;
  nlohmann::json params;
  std::vector<Check> checks;
  GoldenConstants golden;
  bool calibrated = false;
  std::vector<std::string> warnings;

  bool pass() const;
  std::size_t failures() const;
  nlohmann::json to_json() const;
};

const std::vector<std::string>& suite_names();

/// Throws for an unknown suite name (the message lists the suites).
SuiteReport run_suite(const std::string& name, const SuiteParams& params);

}  // namespace sdiff
