#pragma once

#include "pnct/fidelity.hpp"
#include "pnct/geometry.hpp"
#include "pnct/phantom.hpp"
#include "pnct/regularizer.hpp"
#include "pnct/solvers.hpp"

#include <json.hpp>

#include <map>
#include <string>
#include <vector>

namespace pnct {

enum class SolverKind { PnExact, PnLbfgs, Fista };

SolverKind parse_solver(const std::string& name);
std::string to_string(SolverKind kind);

struct ExperimentConfig {
  int size = 64;
  int angles = 90;
  int rays = 90;
  double fov_mm = 512.0;
  double span_deg = 180.0;
  double i0 = 1e5;
  /// Regularization weight at 64 x 64; scaled by size / 64 when lambda_scaling is on.
  double lambda = 1e-4;
  bool lambda_scaling = true;
  std::uint64_t seed = 1;
  bool noisy = true;
  /// Largest line integral through the scaled phantom.
  double max_line_integral = 4.0;
  bool i0_in_hessian = true;
  int lbfgs_memory = 50;
  double clip_max = 10.0;
  SolverKind solver = SolverKind::PnExact;
  SolverConfig solver_cfg;
  ProxConfig prox;
  std::string out_dir = "out";
  bool write_outputs = true;

  double effective_lambda() const;
  void validate() const;
  nlohmann::json to_json() const;
};

/// Applies "key=value" settings (same names as the CLI flags, without dashes).
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);
/// Reads a key=value file; '#' starts a comment.
void load_config_file(ExperimentConfig& cfg, const std::string& path);

/// Everything a reconstruction needs besides the solver.
struct Scenario {
  Geometry geometry;
  SystemMatrix system;
  Image phantom;
  double attenuation = 0.0;
  Image x_true;
  Sinogram noiseless;
  Sinogram measured;
};

Scenario build_scenario(const ExperimentConfig& cfg);

struct RunOutcome {
  SolverKind solver = SolverKind::PnExact;
  Vector x;
  ConvergenceTrace trace;
  OracleCounters counters;
};

/// Runs one solver from x0 = 0 on the scenario's measured data.
RunOutcome run_solver(const Scenario& scenario, const ExperimentConfig& cfg, SolverKind kind,
                      const SolverConfig& solver_cfg);

struct ExperimentReport {
  nlohmann::json summary;
  std::vector<std::string> artifacts;
  /// Traces by label, e.g. "pn-exact" or "pn-exact_64".
  std::map<std::string, ConvergenceTrace> traces;
  bool ok = true;
};

/// Objective of the last row recorded no later than `seconds`; the initial
/// objective when none is.
double objective_at_time(const ConvergenceTrace& trace, double seconds);
/// Time of the first row with f <= target, or infinity.
double time_to_objective(const ConvergenceTrace& trace, double target);
/// Iteration of the first row with f <= target, or -1.
int iterations_to_objective(const ConvergenceTrace& trace, double target);

ExperimentReport run_reconstruction(const ExperimentConfig& cfg);
ExperimentReport experiment_pn_vs_fista(const ExperimentConfig& cfg);
ExperimentReport experiment_scalability(const ExperimentConfig& cfg,
                                        const std::vector<int>& sizes = {32, 64, 128, 256});
/// `tight_tol_f` > 0 adds a second pair of runs at that objective tolerance.
ExperimentReport experiment_hessian_variants(const ExperimentConfig& cfg,
                                             const std::vector<int>& sizes,
                                             double tight_tol_f = 0.0);

}  // namespace pnct
