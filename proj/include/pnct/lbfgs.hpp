#pragma once

#include "pnct/problem.hpp"

#include <Eigen/Dense>

namespace pnct {

/// Limited-memory BFGS approximation of the Hessian (not its inverse).
///
/// Uses the compact representation
///
///   B = theta I - W M W^T,   W = [Y, theta S],
///   M = [[-D, L^T], [L, theta S^T S]]^{-1},
///
/// where L holds s_i^T y_j for i > j and D = diag(s_i^T y_i). Pairs are kept
/// in chronological order; theta = y^T y / s^T y from the newest pair.
class LbfgsState {
 public:
  explicit LbfgsState(int capacity = 50, double curvature_eps = 1e-10);

  /// Appends (s, y) when s^T y > eps |s| |y|; returns whether it was accepted.
  bool update(const Vector& s, const Vector& y);
  Vector apply(const Vector& v) const;

  int size() const { return count_; }
  int capacity() const { return capacity_; }
  double theta() const { return theta_; }
  int rejected() const { return rejected_; }

  /// Stored pair i in chronological order (0 is the oldest).
  Vector s(int i) const { return s_.col(i); }
  Vector y(int i) const { return y_.col(i); }

 private:
  void refactor();

  int capacity_;
  double eps_;
  int count_ = 0;
  int rejected_ = 0;
  double theta_ = 1.0;
  Eigen::MatrixXd s_;
  Eigen::MatrixXd y_;
  Eigen::MatrixXd sts_;
  Eigen::MatrixXd sty_;
  Eigen::PartialPivLU<Eigen::MatrixXd> middle_;
};

LbfgsState lbfgs_update(LbfgsState state, const Vector& s, const Vector& y);
Vector lbfgs_apply(const LbfgsState& state, const Vector& v);

/// Curvature model fed with successive (step, gradient-change) pairs.
///
/// With an empty memory the scale of B is unknown, so the first update spends
/// one extra gradient evaluation on a short probe step along -grad and stores
/// the resulting pair.
class LbfgsHessian final : public CurvatureModel {
 public:
  LbfgsHessian(SmoothTerm& smooth, int capacity = 50, bool probe = true);

  void update(const Vector& x, const Vector& grad) override;
  Vector apply(const Vector& v) override;
  std::int64_t applies() const override { return applies_; }

  const LbfgsState& state() const { return state_; }

 private:
  SmoothTerm* smooth_;
  LbfgsState state_;
  bool probe_;
  Vector x_prev_;
  Vector g_prev_;
  std::int64_t applies_ = 0;
};

}  // namespace pnct
