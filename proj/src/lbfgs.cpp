#include "pnct/lbfgs.hpp"

#include <stdexcept>

namespace pnct {

LbfgsState::LbfgsState(int capacity, double curvature_eps)
    : capacity_(capacity), eps_(curvature_eps) {
  if (capacity < 1) throw std::invalid_argument("LbfgsState: capacity must be >= 1");
}

bool LbfgsState::update(const Vector& s, const Vector& y) {
  if (s.size() != y.size()) throw std::invalid_argument("lbfgs_update: dimension mismatch");
  const double sy = s.dot(y);
  if (!(sy > eps_ * s.norm() * y.norm())) {
    ++rejected_;
    return false;
  }
  if (count_ == 0) {
    s_.resize(s.size(), capacity_);
    y_.resize(s.size(), capacity_);
    sts_.setZero(capacity_, capacity_);
    sty_.setZero(capacity_, capacity_);
  } else if (s.size() != s_.rows()) {
    throw std::invalid_argument("lbfgs_update: dimension changed");
  }

  if (count_ == capacity_) {
    const int keep = capacity_ - 1;
    for (int i = 0; i < keep; ++i) {
      s_.col(i) = s_.col(i + 1);
      y_.col(i) = y_.col(i + 1);
    }
    sts_.topLeftCorner(keep, keep) = sts_.bottomRightCorner(keep, keep).eval();
    sty_.topLeftCorner(keep, keep) = sty_.bottomRightCorner(keep, keep).eval();
    count_ = keep;
  }

  const int k = count_;
  s_.col(k) = s;
  y_.col(k) = y;
  for (int i = 0; i <= k; ++i) {
    const double ss = s_.col(i).dot(s);
    sts_(i, k) = ss;
    sts_(k, i) = ss;
    sty_(i, k) = s_.col(i).dot(y);
    sty_(k, i) = s.dot(y_.col(i));
  }
  count_ = k + 1;
  theta_ = y.squaredNorm() / sy;
  refactor();
  return true;
}

void LbfgsState::refactor() {
  const int k = count_;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * k, 2 * k);
  for (int i = 0; i < k; ++i) {
    m(i, i) = -sty_(i, i);
    for (int j = 0; j < i; ++j) {
      // L(i, j) = s_i^T y_j for i > j.
      m(k + i, j) = sty_(i, j);
      m(j, k + i) = sty_(i, j);
    }
  }
  m.bottomRightCorner(k, k) = theta_ * sts_.topLeftCorner(k, k);
  middle_.compute(m);
}

Vector LbfgsState::apply(const Vector& v) const {
  if (count_ == 0) return theta_ * v;
  if (v.size() != s_.rows()) throw std::invalid_argument("lbfgs_apply: dimension mismatch");
  const int k = count_;
  Vector wtv(2 * k);
  wtv.head(k).noalias() = y_.leftCols(k).transpose() * v;
  wtv.tail(k).noalias() = theta_ * (s_.leftCols(k).transpose() * v);
  const Vector c = middle_.solve(wtv);
  Vector out = theta_ * v;
  out.noalias() -= y_.leftCols(k) * c.head(k);
  out.noalias() -= theta_ * (s_.leftCols(k) * c.tail(k));
  return out;
}

LbfgsState lbfgs_update(LbfgsState state, const Vector& s, const Vector& y) {
  state.update(s, y);
  return state;
}

Vector lbfgs_apply(const LbfgsState& state, const Vector& v) { return state.apply(v); }

LbfgsHessian::LbfgsHessian(SmoothTerm& smooth, int capacity, bool probe)
    : smooth_(&smooth), state_(capacity), probe_(probe) {}

void LbfgsHessian::update(const Vector& x, const Vector& grad) {
  if (x_prev_.size() > 0) {
    state_.update(x - x_prev_, grad - g_prev_);
  } else if (probe_ && grad.norm() > 0.0) {
    const double len = 1e-3 * std::max(1.0, x.norm());
    const Vector step = -(len / grad.norm()) * grad;
    Vector g_probe;
    smooth_->value_and_gradient(x + step, g_probe);
    state_.update(step, g_probe - grad);
  }
  x_prev_ = x;
  g_prev_ = grad;
}

Vector LbfgsHessian::apply(const Vector& v) {
  ++applies_;
  return state_.apply(v);
}

}  // namespace pnct
