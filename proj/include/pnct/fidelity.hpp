#pragma once

#include "pnct/geometry.hpp"
#include "pnct/problem.hpp"

namespace pnct {

/// Poisson transmission I-divergence with Beer's-law means g(x) = i0 * exp(-A x).
///
///   l(x)     = sum_j d_j ln(d_j / g_j) - d_j + g_j   (d_j = 0 contributes g_j)
///   grad l   = A^T (d - g(x))
///   H(x) v   = A^T diag(g(x)) A v
///
/// The most recent forward projection is cached by iterate, so a value
/// evaluation followed by a gradient request at the same point costs one
/// projection. The Hessian scaling vector is cached separately and tagged with
/// the iterate it belongs to.
class FidelityOracle final : public SmoothTerm {
 public:
  /// `a` must outlive the oracle.
  FidelityOracle(const SystemMatrix& a, Vector counts, double i0);

  Eigen::Index dimension() const override { return a_->cols(); }
  double value(const Vector& x) override;
  double value_and_gradient(const Vector& x, Vector& grad) override;
  Vector gradient(const Vector& x);
  OracleCounters counters() const override { return counters_; }

  /// Computes and stores the scaling vector for iterate x_k.
  void prepare_hessian(const Vector& x_k);
  /// H(x_k) v. Refreshes the scaling vector if it was computed at another iterate.
  Vector hessian_apply(const Vector& x_k, const Vector& v);

  const Vector& scaling() const { return scaling_; }
  const Vector& scaling_iterate() const { return scaling_x_; }
  std::int64_t scaling_refreshes() const { return refreshes_; }

  /// When false, S = diag(exp(-A x)) without the i0 factor.
  void set_i0_in_hessian(bool on) { i0_in_hessian_ = on; scaling_x_.resize(0); }

  const SystemMatrix& system() const { return *a_; }
  const Vector& counts() const { return d_; }
  double i0() const { return i0_; }

 private:
  const Vector& projection(const Vector& x);
  double value_from_projection(const Vector& ax) const;

  const SystemMatrix* a_;
  Vector d_;
  double i0_;
  double log_i0_;
  bool i0_in_hessian_ = true;

  Vector cached_x_;
  Vector cached_ax_;

  Vector scaling_x_;
  Vector scaling_;
  std::int64_t refreshes_ = 0;

  OracleCounters counters_;
};

/// Exact matrix-free curvature H_k = A^T S_k A.
class ExactHessian final : public CurvatureModel {
 public:
  explicit ExactHessian(FidelityOracle& oracle) : oracle_(&oracle) {}

  void update(const Vector& x, const Vector& grad) override;
  Vector apply(const Vector& v) override;
  std::int64_t applies() const override { return applies_; }

 private:
  FidelityOracle* oracle_;
  Vector x_k_;
  std::int64_t applies_ = 0;
};

}  // namespace pnct
