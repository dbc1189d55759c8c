#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "qerg/models.hpp"

namespace qerg {

struct DiagnosticRequest {
  std::string name;
  std::vector<double> p;  // quasi_ergodic norm indices
  std::vector<double> C;  // gsd_profile levels
  double a = std::numeric_limits<double>::quiet_NaN();
  double b = std::numeric_limits<double>::quiet_NaN();
  std::string base;     // exhausting-family base state; empty = state nearest the origin
  double slope = 1.0;   // exhausting-family radius r(t) = slope * t
  std::string sigma;    // initial state id for point-mass sigma; empty = first state
  int line = -1;
};

struct Tolerances {
  double qsd_residual = 1e-9;
  double find_qsd = 1e-8;
  double duality = 1e-10;
  double eigen_residual = 1e-8;
  double rate_rel = 0.10;
  double tail_fraction = 1.0;
  double zero_floor = 1e-13;  // series entirely below this count as exact
  double mc_z = 3.0;
};

struct McConfig {
  std::size_t n = 10000;
  std::uint64_t seed = 20261016;
  std::string x0;  // empty = first state
};

struct ExperimentConfig {
  std::string model = "swap2";
  Matrix custom_Q;  // model == "custom"
  Vector custom_mu;
  Vector custom_V;
  std::vector<double> t_grid;
  bool physical_time = false;  // t_grid in physical units (multiplied by the model time scale)
  double t0 = 1.0;
  std::vector<DiagnosticRequest> diagnostics;
  std::optional<McConfig> mc;
  std::string output_dir = "qerg-out";
  Tolerances tol;

  /// Throws ConfigError carrying the offending line when known.
  static ExperimentConfig parse(const std::string& yaml_text);
  static ExperimentConfig load(const std::string& path);
  void validate() const;
  /// Effective configuration with every default spelled out.
  std::string to_yaml() const;
};

const std::vector<std::string>& diagnostic_names();

struct Verdict {
  std::string claim;
  bool pass = false;
  std::string detail;
};

struct ReportBundle {
  std::string output_dir;
  std::vector<Verdict> verdicts;
  int exit_code = 0;  // 0 all pass, 2 any FAIL
};

/// Builds the model, spectral data and operators on the t-grid, evaluates the
/// requested diagnostics and writes series.csv, summary.csv, spectral.txt,
/// verdict.txt, config.yaml and (with an mc block) mc.csv into output_dir.
/// QERG_OUTPUT_DIR and QERG_THREADS override the output directory and thread count.
ReportBundle run_experiment(ExperimentConfig config);

/// Model described by the config (zoo id or custom matrices).
MarkovModel build_config_model(const ExperimentConfig& config);

/// Writes "# qerg <what> generated <UTC timestamp>".
std::string timestamp_header(const std::string& what);

}  // namespace qerg
