#include "pnct/solvers.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace pnct {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double relative_change(const Vector& now, const Vector& before) {
  const double diff = (now - before).norm();
  if (diff == 0.0) return 0.0;
  const double ref = before.norm();
  return ref > 0.0 ? diff / ref : std::numeric_limits<double>::infinity();
}

std::int64_t fidelity_calls(const SmoothTerm& l) {
  const auto c = l.counters();
  return c.value_evals + c.gradient_evals;
}

void check_problem(const CompositeProblem& problem, const Vector& x0, bool needs_curvature) {
  if (problem.smooth == nullptr || problem.nonsmooth == nullptr) {
    throw std::invalid_argument("CompositeProblem: smooth and non-smooth terms are required");
  }
  if (needs_curvature && problem.curvature == nullptr) {
    throw std::invalid_argument("CompositeProblem: proximal Newton needs a curvature model");
  }
  if (x0.size() != problem.dimension()) {
    throw std::invalid_argument("initial point has wrong dimension");
  }
  if (!x0.allFinite()) throw std::invalid_argument("initial point is not finite");
}

}  // namespace

void SolverConfig::validate() const {
  if (!(tol_f > 0.0) || !(tol_x > 0.0) || !(inner_tol > 0.0) || !(fista_tol > 0.0)) {
    throw std::invalid_argument("SolverConfig: tolerances must be > 0");
  }
  if (max_outer < 1 || max_inner < 1 || fista_max_iter < 1) {
    throw std::invalid_argument("SolverConfig: iteration limits must be >= 1");
  }
  if (!(ls_a > 0.0 && ls_a <= 0.5)) throw std::invalid_argument("SolverConfig: a must be in (0, 0.5]");
  if (!(ls_shrink > 0.0 && ls_shrink < 1.0)) {
    throw std::invalid_argument("SolverConfig: shrink must be in (0, 1)");
  }
  if (!(ls_min_step > 0.0 && ls_min_step <= 1.0)) {
    throw std::invalid_argument("SolverConfig: min step must be in (0, 1]");
  }
  if (!(residual_prox_scale > 0.0)) throw std::invalid_argument("SolverConfig: residual scale must be > 0");
  if (!(fista_initial_lipschitz > 0.0) || !(fista_backtrack > 1.0) ||
      !(fista_shrink > 0.0 && fista_shrink <= 1.0)) {
    throw std::invalid_argument("SolverConfig: invalid FISTA step parameters");
  }
  if (power_iters < 1 || !(power_tol > 0.0) || !(lipschitz_safety >= 1.0)) {
    throw std::invalid_argument("SolverConfig: invalid power-method parameters");
  }
}

double prox_gradient_residual(const Vector& x, const Vector& grad, const NonSmoothTerm& h,
                              double scale) {
  return (x - h.prox(x - scale * grad, scale)).norm() / scale;
}

double forcing_term(double prox_point_gap, double previous_residual) {
  if (!(previous_residual >= 1e-15)) return kInitialForcing;
  const double ratio = prox_point_gap / previous_residual;
  if (!(ratio > 0.0)) return kInitialForcing;
  return std::min(kInitialForcing, ratio);
}

double power_max_eigenvalue(CurvatureModel& op, Vector& v, int max_iter, double rel_tol) {
  if (v.norm() == 0.0 || !v.allFinite()) v.setOnes();
  v.normalize();
  double estimate = 0.0;
  for (int i = 0; i < max_iter; ++i) {
    Vector w = op.apply(v);
    const double next = v.dot(w);
    const double norm = w.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) return next;
    v = w / norm;
    const bool done = i > 0 && std::abs(next - estimate) <= rel_tol * std::abs(next);
    estimate = next;
    if (done) break;
  }
  return estimate;
}

SubproblemResult solve_subproblem(const Vector& grad, CurvatureModel& curvature,
                                  const Vector& x_k, const NonSmoothTerm& h,
                                  const SolverConfig& cfg, std::optional<AdaptiveTarget> adaptive,
                                  Vector* power_start) {
  const Eigen::Index n = x_k.size();
  if (grad.size() != n) throw std::invalid_argument("solve_subproblem: dimension mismatch");

  SubproblemResult out;
  Vector local_start;
  Vector& start = power_start != nullptr ? *power_start : local_start;
  if (start.size() != n) start = Vector::Ones(n);
  double lip = cfg.lipschitz_safety * power_max_eigenvalue(curvature, start, cfg.power_iters,
                                                           cfg.power_tol);
  if (!(lip > 0.0) || !std::isfinite(lip)) lip = 1.0;
  const double h_k = h.value(x_k);
  int total = 0;

  // A power-method underestimate of the top eigenvalue makes the iteration
  // overshoot; the result is then no better than d = 0 and the run is repeated
  // with a doubled constant.
  for (int attempt = 0;; ++attempt) {
    out.surrogate.clear();
    const double step = 1.0 / lip;

    // u: prox iterate, w: extrapolated point; hu = H (u - x_k), hw = H (w - x_k).
    Vector u = x_k;
    Vector hu = Vector::Zero(n);
    Vector w = u;
    Vector hw = hu;
    double t = 1.0;
    int it = 0;
    out.stop = InnerStop::MaxIterations;
    while (it < cfg.max_inner) {
      ++it;
      const Vector u_next = h.prox(w - step * (hw + grad), step);
      const Vector hu_next = curvature.apply(u_next - x_k);

      if (cfg.record_inner) {
        const Vector d = u_next - x_k;
        out.surrogate.push_back(grad.dot(d) + 0.5 * d.dot(hu_next) + h.value(u_next));
      }

      const double change = relative_change(u_next, u);
      bool stop = false;
      if (change <= cfg.inner_tol) {
        out.stop = InnerStop::RelativeChange;
        stop = true;
      } else if (adaptive) {
        const double r = prox_gradient_residual(u_next, hu_next + grad, h, cfg.residual_prox_scale);
        if (r <= adaptive->eta * adaptive->residual) {
          out.stop = InnerStop::Adaptive;
          stop = true;
        }
      }

      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      const double beta = (t - 1.0) / t_next;
      t = t_next;
      w = u_next + beta * (u_next - u);
      hw = hu_next + beta * (hu_next - hu);
      u = u_next;
      hu = hu_next;
      if (stop) break;
    }
    total += it;
    out.direction = u - x_k;
    const double model = grad.dot(out.direction) + 0.5 * out.direction.dot(hu) + h.value(u) - h_k;
    out.curvature_direction = std::move(hu);
    out.lipschitz = lip;
    if (model < 0.0 || out.direction.norm() == 0.0 || attempt == 8) break;
    lip *= 2.0;
  }
  out.iterations = total;
  return out;
}

LineSearchResult line_search(SmoothTerm& l, const NonSmoothTerm& h, const Vector& x,
                             const Vector& d, double f_x, double h_x, const Vector& grad,
                             const SolverConfig& cfg) {
  LineSearchResult out;
  const double h_full = h.value(x + d);
  out.model_decrease = grad.dot(d) + h_full - h_x;
  if (!(out.model_decrease < 0.0)) return out;

  double t = 1.0;
  while (t >= cfg.ls_min_step) {
    ++out.trials;
    const Vector trial = x + t * d;
    const double lt = l.value(trial);
    const double ht = t == 1.0 ? h_full : h.value(trial);
    if (lt + ht <= f_x + cfg.ls_a * t * out.model_decrease) {
      out.accepted = true;
      out.step = t;
      out.l = lt;
      out.h = ht;
      return out;
    }
    t *= cfg.ls_shrink;
  }
  return out;
}

SolveResult fista(const CompositeProblem& problem, const Vector& x0, const SolverConfig& cfg) {
  cfg.validate();
  check_problem(problem, x0, false);
  SmoothTerm& l = *problem.smooth;
  const NonSmoothTerm& h = *problem.nonsmooth;
  const auto start = Clock::now();

  SolveResult res;
  auto& trace = res.trace;
  Vector x = x0;
  Vector y = x0;
  Vector grad;
  double lip = cfg.fista_initial_lipschitz;
  double t = 1.0;

  {
    const double l0 = l.value(x);
    const double h0 = h.value(x);
    TraceRow row;
    row.f = l0 + h0;
    row.l = l0;
    row.h = h0;
    row.grad_evals = l.counters().gradient_evals;
    row.seconds = seconds_since(start);
    trace.rows.push_back(row);
    if (cfg.target_objective && row.f <= *cfg.target_objective) {
      trace.status = SolverStatus::TargetReached;
      res.x = x;
      return res;
    }
  }

  for (int k = 1; k <= cfg.fista_max_iter; ++k) {
    const double l_y = l.value_and_gradient(y, grad);
    Vector u;
    double l_u = 0.0;
    for (int bt = 0; bt < 200; ++bt) {
      u = h.prox(y - grad / lip, 1.0 / lip);
      l_u = l.value(u);
      const Vector diff = u - y;
      const double bound = l_y + grad.dot(diff) + 0.5 * lip * diff.squaredNorm();
      if (l_u <= bound + 1e-12 * std::abs(l_y)) break;
      lip *= cfg.fista_backtrack;
    }
    const double h_u = h.value(u);
    const double f_u = l_u + h_u;
    if (!std::isfinite(f_u)) {
      trace.status = SolverStatus::NonFinite;
      trace.message = "fista: non-finite objective at iteration " + std::to_string(k) +
                      " (L = " + std::to_string(lip) + ")";
      break;
    }

    TraceRow row;
    row.iter = k;
    row.f = f_u;
    row.l = l_u;
    row.h = h_u;
    row.step = 1.0 / lip;
    row.residual = lip * (u - y).norm();
    row.grad_evals = l.counters().gradient_evals;
    row.seconds = seconds_since(start);
    trace.rows.push_back(row);

    const double change = relative_change(u, x);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = u + ((t - 1.0) / t_next) * (u - x);
    t = t_next;
    x = std::move(u);

    if (cfg.target_objective && f_u <= *cfg.target_objective) {
      trace.status = SolverStatus::TargetReached;
      break;
    }
    if (change <= cfg.fista_tol) {
      trace.status = SolverStatus::Converged;
      break;
    }
    lip *= cfg.fista_shrink;
  }
  if (trace.status == SolverStatus::Running) trace.status = SolverStatus::MaxIterations;
  res.x = std::move(x);
  return res;
}

SolveResult pn_solve(const CompositeProblem& problem, const Vector& x0, const SolverConfig& cfg) {
  cfg.validate();
  check_problem(problem, x0, true);
  SmoothTerm& l = *problem.smooth;
  const NonSmoothTerm& h = *problem.nonsmooth;
  CurvatureModel& curvature = *problem.curvature;
  const auto start = Clock::now();
  const double rscale = cfg.residual_prox_scale;

  SolveResult res;
  auto& trace = res.trace;
  Vector x = x0;
  Vector grad;
  double l_x = l.value_and_gradient(x, grad);
  double h_x = h.value(x);
  double f_x = l_x + h_x;
  curvature.update(x, grad);
  double residual = prox_gradient_residual(x, grad, h, rscale);
  double eta = kInitialForcing;
  Vector power_start;

  auto hess_count = [&] { return curvature.applies(); };
  {
    TraceRow row;
    row.f = f_x;
    row.l = l_x;
    row.h = h_x;
    row.eta = eta;
    row.residual = residual;
    row.grad_evals = l.counters().gradient_evals;
    row.hess_applies = hess_count();
    row.seconds = seconds_since(start);
    trace.rows.push_back(row);
  }
  if (!std::isfinite(f_x)) {
    trace.status = SolverStatus::NonFinite;
    trace.message = "pn: non-finite objective at the initial point";
    res.x = x;
    return res;
  }

  for (int k = 1; k <= cfg.max_outer; ++k) {
    std::optional<AdaptiveTarget> adaptive;
    if (cfg.adaptive_stop) adaptive = AdaptiveTarget{eta, residual};

    const auto calls_before = fidelity_calls(l);
    SubproblemResult sub = solve_subproblem(grad, curvature, x, h, cfg, adaptive, &power_start);
    const auto calls_inner = fidelity_calls(l) - calls_before;
    if (cfg.record_inner) trace.inner_surrogate.push_back(std::move(sub.surrogate));

    const double d_norm = sub.direction.norm();
    if (d_norm <= 1e-14 * (1.0 + x.norm())) {
      trace.status = SolverStatus::Converged;
      trace.message = "pn: null search direction";
      break;
    }

    const LineSearchResult ls = line_search(l, h, x, sub.direction, f_x, h_x, grad, cfg);
    if (!ls.accepted) {
      trace.status = SolverStatus::LineSearchFailed;
      trace.message = ls.model_decrease >= 0.0
                          ? "pn: direction is not a descent direction"
                          : "pn: backtracking reached the minimum step";
      break;
    }

    Vector x_next = x + ls.step * sub.direction;
    Vector grad_next;
    const double l_next = l.value_and_gradient(x_next, grad_next);
    const double h_next = ls.h;
    const double f_next = l_next + h_next;
    if (!std::isfinite(f_next)) {
      trace.status = SolverStatus::NonFinite;
      trace.message = "pn: non-finite objective at iteration " + std::to_string(k);
      break;
    }

    // Forcing term for the next subproblem. The model gradient of the step
    // just taken, evaluated at x_next, is t * H_k d + grad_k.
    const Vector model_grad = ls.step * sub.curvature_direction + grad;
    const Vector prox_true = h.prox(x_next - rscale * grad_next, rscale);
    const Vector prox_model = h.prox(x_next - rscale * model_grad, rscale);
    const double residual_next = (x_next - prox_true).norm() / rscale;
    const double gap = (prox_true - prox_model).norm() / rscale;
    const double eta_next = forcing_term(gap, residual);

    const double rel_f = std::abs(f_next - f_x) / std::abs(f_x);
    const double rel_x = relative_change(x_next, x);

    x = std::move(x_next);
    grad = std::move(grad_next);
    l_x = l_next;
    h_x = h_next;
    f_x = f_next;
    residual = residual_next;
    curvature.update(x, grad);

    TraceRow row;
    row.iter = k;
    row.f = f_x;
    row.l = l_x;
    row.h = h_x;
    row.step = ls.step;
    row.inner_iters = sub.iterations;
    row.eta = eta;
    row.residual = residual;
    row.grad_evals = l.counters().gradient_evals;
    row.hess_applies = hess_count();
    row.seconds = seconds_since(start);
    row.subproblem_fidelity_calls = calls_inner;
    trace.rows.push_back(row);
    eta = eta_next;

    if (cfg.target_objective && f_x <= *cfg.target_objective) {
      trace.status = SolverStatus::TargetReached;
      break;
    }
    if (rel_f <= cfg.tol_f || rel_x <= cfg.tol_x) {
      trace.status = SolverStatus::Converged;
      break;
    }
  }
  if (trace.status == SolverStatus::Running) trace.status = SolverStatus::MaxIterations;
  res.x = std::move(x);
  return res;
}

}  // namespace pnct
