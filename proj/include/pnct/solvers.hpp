#pragma once

#include "pnct/problem.hpp"
#include "pnct/trace.hpp"

#include <optional>
#include <string>

namespace pnct {

struct SolverConfig {
  // Outer loop.
  double tol_f = 1e-4;
  double tol_x = 1e-5;
  int max_outer = 500;

  // Subproblem.
  double inner_tol = 1e-8;
  int max_inner = 500;
  bool adaptive_stop = true;
  int power_iters = 20;
  double power_tol = 1e-2;
  double lipschitz_safety = 1.05;

  // Sufficient-decrease line search.
  double ls_a = 0.5;
  double ls_shrink = 0.7;
  double ls_min_step = 1e-8;

  /// Prox step inside the stationarity residual |x - P(x - s grad)| / s.
  double residual_prox_scale = 1.0;

  // FISTA baseline.
  double fista_tol = 1e-8;
  int fista_max_iter = 20000;
  double fista_initial_lipschitz = 1.0;
  double fista_backtrack = 2.0;
  double fista_shrink = 0.9;

  /// Stop as soon as f(x_k) <= target (used to time runs to a given objective).
  std::optional<double> target_objective;
  /// Record the surrogate objective after every inner iteration.
  bool record_inner = false;

  void validate() const;
};

struct CompositeProblem {
  SmoothTerm* smooth = nullptr;
  NonSmoothTerm* nonsmooth = nullptr;
  /// Only used by the proximal Newton solver.
  CurvatureModel* curvature = nullptr;

  Eigen::Index dimension() const { return smooth->dimension(); }
};

struct SolveResult {
  Vector x;
  ConvergenceTrace trace;
};

/// Accelerated proximal gradient with backtracking on the local Lipschitz constant.
SolveResult fista(const CompositeProblem& problem, const Vector& x0, const SolverConfig& cfg);

/// Proximal Newton outer loop (surrogate solve, backtracking, adaptive inner accuracy).
SolveResult pn_solve(const CompositeProblem& problem, const Vector& x0, const SolverConfig& cfg);

enum class InnerStop { RelativeChange, Adaptive, MaxIterations };

struct SubproblemResult {
  Vector direction;
  /// H_k * direction, reused by the forcing term.
  Vector curvature_direction;
  int iterations = 0;
  InnerStop stop = InnerStop::MaxIterations;
  double lipschitz = 0.0;
  std::vector<double> surrogate;
};

/// Tolerance pair for the adaptive inner stop: |y - P(y - grad_model(y))| <= eta * residual.
struct AdaptiveTarget {
  double eta = 0.1;
  double residual = 0.0;
};

/// Minimizes grad^T d + 0.5 d^T H d + h(x_k + d) by FISTA in y = x_k + d.
///
/// The step is 1/L with L a power-method estimate of the top eigenvalue of H
/// times `lipschitz_safety`. `power_start` carries the power iteration vector
/// across calls and may be empty. No smooth-term oracle calls are made.
SubproblemResult solve_subproblem(const Vector& grad, CurvatureModel& curvature,
                                  const Vector& x_k, const NonSmoothTerm& h,
                                  const SolverConfig& cfg,
                                  std::optional<AdaptiveTarget> adaptive = std::nullopt,
                                  Vector* power_start = nullptr);

/// Largest eigenvalue estimate of a symmetric PSD operator by power iteration.
double power_max_eigenvalue(CurvatureModel& op, Vector& v, int max_iter, double rel_tol);

struct LineSearchResult {
  bool accepted = false;
  double step = 0.0;
  double l = 0.0;
  double h = 0.0;
  int trials = 0;
  /// grad^T d + h(x + d) - h(x); the direction is rejected when >= 0.
  double model_decrease = 0.0;
};

/// Largest t in {1, shrink, shrink^2, ...} >= min_step with
/// f(x + t d) <= f(x) + a t (grad^T d + h(x + d) - h(x)).
LineSearchResult line_search(SmoothTerm& l, const NonSmoothTerm& h, const Vector& x,
                             const Vector& d, double f_x, double h_x, const Vector& grad,
                             const SolverConfig& cfg);

/// |x - P(x - s grad)| / s with P the prox of h at step s.
double prox_gradient_residual(const Vector& x, const Vector& grad, const NonSmoothTerm& h,
                              double scale = 1.0);

inline constexpr double kInitialForcing = 0.1;

/// min{0.1, gap / previous_residual}, where gap = |P(x_k - grad l(x_k)) - P(x_k - grad l~_{k-1}(x_k))|.
/// Falls back to 0.1 when the denominator vanishes or the ratio is not positive.
double forcing_term(double prox_point_gap, double previous_residual);

}  // namespace pnct
