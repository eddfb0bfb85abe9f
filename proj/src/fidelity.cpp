#include "pnct/fidelity.hpp"

#include <cmath>
#include <stdexcept>

namespace pnct {

namespace {

bool same_iterate(const Vector& a, const Vector& b) {
  return a.size() == b.size() && a.size() > 0 && a == b;
}

}  // namespace

FidelityOracle::FidelityOracle(const SystemMatrix& a, Vector counts, double i0)
    : a_(&a), d_(std::move(counts)), i0_(i0), log_i0_(std::log(i0)) {
  if (!(i0 > 0.0)) throw std::invalid_argument("FidelityOracle: i0 must be > 0");
  if (d_.size() != a.rows()) {
    throw std::invalid_argument("FidelityOracle: counts do not match system matrix rows");
  }
  if ((d_.array() < 0.0).any()) throw std::invalid_argument("FidelityOracle: negative counts");
}

const Vector& FidelityOracle::projection(const Vector& x) {
  if (!same_iterate(x, cached_x_)) {
    cached_ax_ = a_->forward(x);
    cached_x_ = x;
    ++counters_.forward_projections;
  }
  return cached_ax_;
}

double FidelityOracle::value_from_projection(const Vector& ax) const {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < ax.size(); ++j) {
    const double log_g = log_i0_ - ax[j];
    const double dj = d_[j];
    if (dj > 0.0) {
      // d (r - 1 - ln r) with ln r = ln g - ln d, evaluated without cancellation in r - 1.
      const double u = log_g - std::log(dj);
      sum += dj * (std::expm1(u) - u);
    } else {
      sum += std::exp(log_g);
    }
  }
  return sum;
}

double FidelityOracle::value(const Vector& x) {
  ++counters_.value_evals;
  return value_from_projection(projection(x));
}

double FidelityOracle::value_and_gradient(const Vector& x, Vector& grad) {
  ++counters_.gradient_evals;
  const Vector& ax = projection(x);
  const double l = value_from_projection(ax);
  Vector residual(ax.size());
  for (Eigen::Index j = 0; j < ax.size(); ++j) residual[j] = d_[j] - i0_ * std::exp(-ax[j]);
  grad = a_->adjoint(residual);
  ++counters_.back_projections;
  return l;
}

Vector FidelityOracle::gradient(const Vector& x) {
  Vector g;
  value_and_gradient(x, g);
  return g;
}

void FidelityOracle::prepare_hessian(const Vector& x_k) {
  if (same_iterate(x_k, scaling_x_)) return;
  const Vector& ax = projection(x_k);
  const double factor = i0_in_hessian_ ? i0_ : 1.0;
  scaling_ = (-ax.array()).exp() * factor;
  scaling_x_ = x_k;
  ++refreshes_;
}

Vector FidelityOracle::hessian_apply(const Vector& x_k, const Vector& v) {
  if (v.size() != a_->cols()) throw std::invalid_argument("hessian_apply: dimension mismatch");
  prepare_hessian(x_k);
  ++counters_.hessian_applies;
  ++counters_.forward_projections;
  ++counters_.back_projections;
  Vector t = a_->forward(v);
  t.array() *= scaling_.array();
  return a_->adjoint(t);
}

void ExactHessian::update(const Vector& x, const Vector&) {
  x_k_ = x;
  oracle_->prepare_hessian(x_k_);
}

Vector ExactHessian::apply(const Vector& v) {
  if (x_k_.size() == 0) throw std::logic_error("ExactHessian: apply before update");
  ++applies_;
  return oracle_->hessian_apply(x_k_, v);
}

}  // namespace pnct
