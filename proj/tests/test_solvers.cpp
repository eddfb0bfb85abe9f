#include "pnct/fidelity.hpp"
#include "pnct/lbfgs.hpp"
#include "pnct/phantom.hpp"
#include "pnct/regularizer.hpp"
#include "pnct/solvers.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace pnct;

namespace {

/// 0.5 (x - c)^T Q (x - c).
class Quadratic final : public SmoothTerm {
 public:
  Quadratic(Eigen::MatrixXd q, Vector c) : q_(std::move(q)), c_(std::move(c)) {}
  Eigen::Index dimension() const override { return q_.rows(); }
  double value(const Vector& x) override {
    ++n_.value_evals;
    const Vector r = x - c_;
    return 0.5 * r.dot(q_ * r);
  }
  double value_and_gradient(const Vector& x, Vector& g) override {
    ++n_.gradient_evals;
    const Vector r = x - c_;
    g = q_ * r;
    return 0.5 * r.dot(g);
  }
  OracleCounters counters() const override { return n_; }
  const Eigen::MatrixXd& q() const { return q_; }

 private:
  Eigen::MatrixXd q_;
  Vector c_;
  OracleCounters n_;
};

class DenseCurvature final : public CurvatureModel {
 public:
  explicit DenseCurvature(Eigen::MatrixXd h) : h_(std::move(h)) {}
  void update(const Vector&, const Vector&) override {}
  Vector apply(const Vector& v) override {
    ++applies_;
    return h_ * v;
  }
  std::int64_t applies() const override { return applies_; }

 private:
  Eigen::MatrixXd h_;
  std::int64_t applies_ = 0;
};

Vector soft(const Vector& z, double tau) {
  Vector out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    out[i] = std::copysign(std::max(std::abs(z[i]) - tau, 0.0), z[i]);
  }
  return out;
}

struct CtInstance {
  Geometry geometry;
  SystemMatrix a;
  Image x_true;
  Vector counts;
};

CtInstance ct_instance(int n, bool noisy) {
  CtInstance in{build_geometry(n, 512, 2 * n, 180, 2 * n), {}, {}, {}};
  in.a = build_system_matrix(in.geometry);
  in.x_true = shepp_logan(n);
  in.x_true.values *= attenuation_scale(in.a, in.x_true.values, 4.0);
  Sinogram d = simulate_noiseless(in.a, in.geometry, in.x_true, 1e5);
  if (noisy) d = simulate_noisy(d, 3);
  in.counts = d.values;
  return in;
}

}  // namespace

TEST_CASE("fista: strongly convex quadratic converges to its minimizer") {
  const Vector c = (Vector(4) << 1.0, -2.0, 0.5, 3.0).finished();
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(4, 4);
  q.diagonal() << 1.0, 1.3, 1.7, 2.0;
  q(0, 1) = q(1, 0) = 0.2;
  Quadratic l(q, c);
  ZeroTerm h;
  SolverConfig cfg;
  cfg.fista_tol = 1e-14;
  cfg.fista_max_iter = 200;
  const SolveResult r = fista({&l, &h, nullptr}, Vector::Zero(4), cfg);
  CHECK((r.x - c).norm() <= 1e-8);
  CHECK(r.trace.outer_iterations() <= 200);
}

TEST_CASE("fista: lasso with identity design is soft thresholding") {
  const Vector b = (Vector(5) << 2.0, -0.3, 0.05, -1.5, 0.7).finished();
  Quadratic l(Eigen::MatrixXd::Identity(5, 5), b);
  L1Term h(0.5);
  SolverConfig cfg;
  cfg.fista_tol = 1e-14;
  const SolveResult r = fista({&l, &h, nullptr}, Vector::Zero(5), cfg);
  CHECK((r.x - soft(b, 0.5)).norm() <= 1e-10);
}

TEST_CASE("fista: objective gap within 2 L |x0 - x*|^2 / (k + 1)^2") {
  std::mt19937_64 rng(1);
  const int n = 20;
  Eigen::MatrixXd m = Eigen::MatrixXd::Random(n, n);
  Eigen::MatrixXd q = m * m.transpose() / n + 1e-3 * Eigen::MatrixXd::Identity(n, n);
  const double lip = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(q).eigenvalues().maxCoeff();
  const Vector c = Vector::Random(n);
  Quadratic l(q, c);
  ZeroTerm h;
  SolverConfig cfg;
  cfg.fista_initial_lipschitz = lip;
  cfg.fista_shrink = 1.0;
  cfg.fista_tol = 1e-300;
  cfg.fista_max_iter = 300;
  const SolveResult r = fista({&l, &h, nullptr}, Vector::Zero(n), cfg);
  const double r0 = c.squaredNorm();
  for (const TraceRow& row : r.trace.rows) {
    if (row.iter == 0) continue;
    CHECK(row.f <= 2 * lip * r0 / ((row.iter + 1.0) * (row.iter + 1.0)) + 1e-14);
    CHECK(row.step == doctest::Approx(1.0 / lip));
  }
}

TEST_CASE("solve_subproblem: trivial cases") {
  const int n = 5;
  DenseCurvature eye(Eigen::MatrixXd::Identity(n, n));
  ZeroTerm zero;
  SolverConfig cfg;
  const Vector x = Vector::LinSpaced(n, -1.0, 1.0);

  const SubproblemResult none = solve_subproblem(Vector::Zero(n), eye, x, zero, cfg);
  CHECK(none.direction.norm() == 0.0);

  const Vector g = (Vector(n) << 0.3, -1.0, 2.0, 0.0, 0.7).finished();
  const SubproblemResult newton = solve_subproblem(g, eye, x, zero, cfg);
  CHECK((newton.direction + g).norm() <= 1e-7 * g.norm());
  CHECK((newton.curvature_direction - newton.direction).norm() <= 1e-14 * g.norm());
  CHECK(newton.lipschitz == doctest::Approx(1.05).epsilon(1e-6));
}

TEST_CASE("solve_subproblem: 1 x 3 TV model matches a refined grid search") {
  Eigen::MatrixXd hm(3, 3);
  hm << 2.0, 0.5, 0.0, 0.5, 1.5, 0.3, 0.0, 0.3, 1.0;
  DenseCurvature curv(hm);
  const TvTerm h(3, 1, 0.4, ProxConfig{20000, 1e-13});
  const Vector x = (Vector(3) << 0.2, 0.9, -0.1).finished();
  const Vector g = (Vector(3) << -0.5, 0.4, 0.3).finished();
  SolverConfig cfg;
  cfg.inner_tol = 1e-13;
  cfg.max_inner = 20000;
  const SubproblemResult sub = solve_subproblem(g, curv, x, h, cfg);

  auto model = [&](const Vector& d) {
    const Vector u = x + d;
    return g.dot(d) + 0.5 * d.dot(hm * d) + 0.4 * (std::abs(u[1] - u[0]) + std::abs(u[2] - u[1]));
  };
  Vector best = Vector::Zero(3);
  double width = 2.0;
  for (int level = 0; level < 4; ++level) {
    const int steps = 40;
    const double step = 2 * width / steps;
    Vector centre = best;
    double best_val = model(best);
    for (int i = 0; i <= steps; ++i) {
      for (int j = 0; j <= steps; ++j) {
        for (int k = 0; k <= steps; ++k) {
          const Vector d = centre + Vector::Constant(3, -width) + step * Vector(Eigen::Vector3d(i, j, k));
          const double v = model(d);
          if (v < best_val) {
            best_val = v;
            best = d;
          }
        }
      }
    }
    width = 2 * step;
  }
  CHECK((sub.direction - best).norm() <= 1e-4);
  CHECK(model(sub.direction) <= model(best) + 1e-9);
}

TEST_CASE("solve_subproblem: an underestimated curvature bound still returns a descent direction") {
  // Power iteration started on an eigenvector of the small eigenvalue sees only
  // that eigenvalue, so the first step 1 / L overshoots badly.
  Eigen::MatrixXd hm = Eigen::MatrixXd::Zero(2, 2);
  hm.diagonal() << 1.0, 100.0;
  DenseCurvature curv(hm);
  ZeroTerm zero;
  SolverConfig cfg;
  Vector start = Vector::Unit(2, 0);
  const Vector g = (Vector(2) << 1.0, 1.0).finished();
  const SubproblemResult sub = solve_subproblem(g, curv, Vector::Zero(2), zero, cfg, std::nullopt, &start);
  const Vector& d = sub.direction;
  // Optimal model value is -0.5 (1 + 1 / 100).
  CHECK(g.dot(d) + 0.5 * d.dot(hm * d) <= -0.5);
  CHECK(sub.lipschitz > 2.0);
}

TEST_CASE("line_search: unit step, backtracked step and rejected direction") {
  // f(x) = x^2 around x = 1.
  Quadratic l(2.0 * Eigen::MatrixXd::Identity(1, 1), Vector::Zero(1));
  ZeroTerm h;
  SolverConfig cfg;
  const Vector x = Vector::Ones(1);
  const Vector grad = Vector::Constant(1, 2.0);

  const LineSearchResult full = line_search(l, h, x, Vector::Constant(1, -1.0), 1.0, 0.0, grad, cfg);
  CHECK(full.accepted);
  CHECK(full.step == 1.0);
  CHECK(full.model_decrease == -2.0);

  // d = -2 overshoots to -1; sufficient decrease first holds at t = 0.7^2.
  const LineSearchResult back = line_search(l, h, x, Vector::Constant(1, -2.0), 1.0, 0.0, grad, cfg);
  CHECK(back.accepted);
  CHECK(back.step == doctest::Approx(0.49).epsilon(1e-15));
  CHECK(back.trials == 3);
  CHECK(back.l == doctest::Approx(0.0004));

  const LineSearchResult up = line_search(l, h, x, Vector::Constant(1, 1.0), 1.0, 0.0, grad, cfg);
  CHECK_FALSE(up.accepted);
  CHECK(up.trials == 0);
  CHECK(up.model_decrease >= 0.0);
}

TEST_CASE("prox_gradient_residual and forcing_term") {
  const Vector x = (Vector(3) << 1.0, -0.2, 0.0).finished();
  const Vector g = (Vector(3) << 0.5, 0.1, -3.0).finished();
  ZeroTerm zero;
  CHECK(prox_gradient_residual(x, g, zero) == doctest::Approx(g.norm()).epsilon(1e-15));

  L1Term l1(0.3);
  const double ref = (x - soft(x - g, 0.3)).norm();
  CHECK(std::abs(prox_gradient_residual(x, g, l1) - ref) <= 1e-10);
  const double ref_half = (x - soft(x - 0.5 * g, 0.15)).norm() / 0.5;
  CHECK(std::abs(prox_gradient_residual(x, g, l1, 0.5) - ref_half) <= 1e-10);

  CHECK(forcing_term(0.0, 1.0) == kInitialForcing);
  CHECK(forcing_term(1.0, 0.0) == kInitialForcing);
  CHECK(forcing_term(std::nan(""), 1.0) == kInitialForcing);
  CHECK(forcing_term(5.0, 1.0) == 0.1);
  CHECK(forcing_term(0.02, 1.0) == doctest::Approx(0.02));
}

TEST_CASE("pn_solve: quadratic with exact curvature takes one Newton step") {
  Eigen::MatrixXd q(3, 3);
  q << 4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0;
  const Vector c = (Vector(3) << 1.0, 2.0, -1.0).finished();
  Quadratic l(q, c);
  ZeroTerm h;
  DenseCurvature curv(q);
  SolverConfig cfg;
  cfg.adaptive_stop = false;
  cfg.inner_tol = 1e-14;
  // With a = 0.5 the exact Newton step meets sufficient decrease with equality.
  cfg.ls_a = 0.25;
  const SolveResult r = pn_solve({&l, &h, &curv}, Vector::Zero(3), cfg);
  CHECK((r.x - c).norm() <= 1e-10);
  CHECK(r.trace.rows[1].step == 1.0);
  CHECK(r.trace.outer_iterations() <= 3);
}

TEST_CASE("pn_solve: noiseless data, no regularizer, start at the truth") {
  const CtInstance in = ct_instance(8, false);
  FidelityOracle l(in.a, in.counts, 1e5);
  ZeroTerm h;
  ExactHessian curv(l);
  const SolveResult r = pn_solve({&l, &h, &curv}, in.x_true.values, SolverConfig{});
  CHECK(r.trace.status == SolverStatus::Converged);
  CHECK(r.trace.outer_iterations() <= 2);
  CHECK(r.trace.last().l <= 1e-6 * in.counts.sum());
}

TEST_CASE("pn_solve on a small CT problem: monotone, eta bounds, no oracle calls inside subproblems") {
  const CtInstance in = ct_instance(16, true);
  TvTerm h(16, 16, 1e-4 * 16 / 64.0);
  SolverConfig cfg;

  FidelityOracle l(in.a, in.counts, 1e5);
  ExactHessian curv(l);
  const SolveResult r = pn_solve({&l, &h, &curv}, Vector::Zero(256), cfg);
  CHECK(r.trace.status == SolverStatus::Converged);
  const auto& rows = r.trace.rows;
  REQUIRE(rows.size() >= 3);
  for (std::size_t k = 1; k < rows.size(); ++k) {
    CHECK(rows[k].f <= rows[k - 1].f);
    CHECK(rows[k].eta > 0.0);
    CHECK(rows[k].eta <= 0.1);
    CHECK(rows[k].subproblem_fidelity_calls == 0);
    CHECK(rows[k].grad_evals == rows[k - 1].grad_evals + 1);
    const double j = std::log(rows[k].step) / std::log(cfg.ls_shrink);
    CHECK(std::abs(j - std::round(j)) <= 1e-9);
    CHECK(rows[k].step >= cfg.ls_min_step);
  }
  CHECK(rows[1].eta == kInitialForcing);

  FidelityOracle l2(in.a, in.counts, 1e5);
  ExactHessian curv2(l2);
  const SolveResult again = pn_solve({&l2, &h, &curv2}, Vector::Zero(256), cfg);
  CHECK(again.x == r.x);
  CHECK(again.trace.outer_iterations() == r.trace.outer_iterations());

  FidelityOracle l3(in.a, in.counts, 1e5);
  LbfgsHessian quasi(l3);
  const SolveResult q = pn_solve({&l3, &h, &quasi}, Vector::Zero(256), cfg);
  CHECK(q.trace.status == SolverStatus::Converged);
  CHECK(std::abs(q.trace.last().f - r.trace.last().f) <= 1e-3 * std::abs(r.trace.last().f));
}

TEST_CASE("solver input validation") {
  Quadratic l(Eigen::MatrixXd::Identity(2, 2), Vector::Zero(2));
  ZeroTerm h;
  SolverConfig cfg;
  CHECK_THROWS_AS(pn_solve({&l, &h, nullptr}, Vector::Zero(2), cfg), std::invalid_argument);
  CHECK_THROWS_AS(fista({&l, &h, nullptr}, Vector::Zero(3), cfg), std::invalid_argument);
  cfg.ls_a = 0.7;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
