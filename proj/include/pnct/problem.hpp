#pragma once

#include <Eigen/Core>

#include <cstdint>

namespace pnct {

using Vector = Eigen::VectorXd;

/// Oracle call counts reported in convergence traces.
struct OracleCounters {
  std::int64_t value_evals = 0;
  std::int64_t gradient_evals = 0;
  std::int64_t hessian_applies = 0;
  std::int64_t forward_projections = 0;
  std::int64_t back_projections = 0;
};

/// Smooth part l(x) of a composite objective.
class SmoothTerm {
 public:
  virtual ~SmoothTerm() = default;

  virtual Eigen::Index dimension() const = 0;
  virtual double value(const Vector& x) = 0;
  /// Returns l(x) and writes the gradient into `grad`.
  virtual double value_and_gradient(const Vector& x, Vector& grad) = 0;
  virtual OracleCounters counters() const = 0;
};

/// Non-smooth part h(x) with its proximal mapping.
class NonSmoothTerm {
 public:
  virtual ~NonSmoothTerm() = default;

  virtual double value(const Vector& x) const = 0;
  /// argmin_u 0.5 |u - z|^2 + scale * h(u).
  virtual Vector prox(const Vector& z, double scale) const = 0;
};

/// Curvature model H_k of the smooth term at the current outer iterate.
class CurvatureModel {
 public:
  virtual ~CurvatureModel() = default;

  /// Called once per accepted outer iterate with the gradient there.
  virtual void update(const Vector& x, const Vector& grad) = 0;
  virtual Vector apply(const Vector& v) = 0;
  virtual std::int64_t applies() const = 0;
};

/// h = 0.
class ZeroTerm final : public NonSmoothTerm {
 public:
  double value(const Vector&) const override { return 0.0; }
  Vector prox(const Vector& z, double) const override { return z; }
};

/// h = weight * |x|_1.
class L1Term final : public NonSmoothTerm {
 public:
  explicit L1Term(double weight) : weight_(weight) {}
  double value(const Vector& x) const override { return weight_ * x.lpNorm<1>(); }
  Vector prox(const Vector& z, double scale) const override {
    const double tau = scale * weight_;
    return z.unaryExpr([tau](double v) {
      return v > tau ? v - tau : (v < -tau ? v + tau : 0.0);
    });
  }

 private:
  double weight_;
};

}  // namespace pnct
