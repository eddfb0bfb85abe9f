#include "pnct/regularizer.hpp"

#include <cmath>
#include <stdexcept>

namespace pnct {

namespace {

// Forward differences into (p, q); structural zeros on the far boundary.
void gradient(const Vector& x, int w, int h, Vector& p, Vector& q) {
  for (int a = 0; a < h; ++a) {
    for (int b = 0; b < w; ++b) {
      const Eigen::Index i = static_cast<Eigen::Index>(a) * w + b;
      p[i] = a + 1 < h ? x[i] - x[i + w] : 0.0;
      q[i] = b + 1 < w ? x[i] - x[i + 1] : 0.0;
    }
  }
}

// Adjoint of `gradient`.
void gradient_adjoint(const Vector& p, const Vector& q, int w, int h, Vector& out) {
  for (int a = 0; a < h; ++a) {
    for (int b = 0; b < w; ++b) {
      const Eigen::Index i = static_cast<Eigen::Index>(a) * w + b;
      double v = p[i] + q[i];
      if (a > 0) v -= p[i - w];
      if (b > 0) v -= q[i - 1];
      out[i] = v;
    }
  }
}

double relative_change(const Vector& now, const Vector& before) {
  const double diff = (now - before).norm();
  if (diff == 0.0) return 0.0;
  const double ref = before.norm();
  return ref > 0.0 ? diff / ref : diff;
}

}  // namespace

double tv_value(const Image& x, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("tv_value: lambda must be >= 0");
  if (lambda == 0.0) return 0.0;
  double sum = 0.0;
  const int w = x.width;
  const int h = x.height;
  for (int a = 0; a < h; ++a) {
    for (int b = 0; b < w; ++b) {
      const double dv = a + 1 < h ? x(a, b) - x(a + 1, b) : 0.0;
      const double dh = b + 1 < w ? x(a, b) - x(a, b + 1) : 0.0;
      sum += std::sqrt(dv * dv + dh * dh);
    }
  }
  return lambda * sum;
}

TvProxResult tv_prox_dual(const Image& z, double tau, const ProxConfig& cfg,
                          const GradientField* warm_start) {
  if (tau < 0.0) throw std::invalid_argument("tv_prox: tau must be >= 0");
  if (cfg.max_iter < 1 || !(cfg.rel_tol > 0.0)) {
    throw std::invalid_argument("tv_prox: invalid ProxConfig");
  }
  const int w = z.width;
  const int h = z.height;
  const Eigen::Index n = z.values.size();

  TvProxResult out{z, GradientField{w, h, Vector::Zero(n), Vector::Zero(n)}, 0};
  if (tau == 0.0) return out;

  Vector p = Vector::Zero(n);
  Vector q = Vector::Zero(n);
  if (warm_start != nullptr && warm_start->p.size() == n && warm_start->q.size() == n) {
    p = warm_start->p;
    q = warm_start->q;
  }

  Vector p_prev = p;
  Vector q_prev = q;
  Vector lt_p(n);
  gradient_adjoint(p, q, w, h, lt_p);
  Vector lt_p_prev = lt_p;
  Vector lt_r = lt_p;
  Vector rp = p;
  Vector rq = q;

  Vector u_prev = z.values - tau * lt_p;
  Vector u(n);
  Vector gp(n);
  Vector gq(n);
  const double step = cfg.dual_step / tau;
  double t = 1.0;

  int it = 0;
  while (it < cfg.max_iter) {
    ++it;
    u = z.values - tau * lt_r;
    gradient(u, w, h, gp, gq);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double pi = rp[i] + step * gp[i];
      const double qi = rq[i] + step * gq[i];
      const double scale = std::max(1.0, std::sqrt(pi * pi + qi * qi));
      p[i] = pi / scale;
      q[i] = qi / scale;
    }
    gradient_adjoint(p, q, w, h, lt_p);

    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double beta = (t - 1.0) / t_next;
    t = t_next;
    rp = p + beta * (p - p_prev);
    rq = q + beta * (q - q_prev);
    lt_r = lt_p + beta * (lt_p - lt_p_prev);
    p_prev = p;
    q_prev = q;
    lt_p_prev = lt_p;

    u = z.values - tau * lt_p;
    const double change = relative_change(u, u_prev);
    u_prev.swap(u);
    if (change <= cfg.rel_tol) break;
  }

  out.image.values = u_prev;
  out.dual.p = std::move(p);
  out.dual.q = std::move(q);
  out.iterations = it;
  return out;
}

Image tv_prox(const Image& z, double tau, const ProxConfig& cfg) {
  return tv_prox_dual(z, tau, cfg).image;
}

Image prox_h(const Image& z, double lambda, double scale, const ProxConfig& cfg) {
  return tv_prox(z, scale * lambda, cfg);
}

TvTerm::TvTerm(int width, int height, double lambda, ProxConfig cfg)
    : width_(width), height_(height), lambda_(lambda), cfg_(cfg) {
  if (lambda < 0.0) throw std::invalid_argument("TvTerm: lambda must be >= 0");
}

double TvTerm::value(const Vector& x) const {
  return tv_value(Image(width_, height_, x), lambda_);
}

Vector TvTerm::prox(const Vector& z, double scale) const {
  return prox_h(Image(width_, height_, z), lambda_, scale, cfg_).values;
}

}  // namespace pnct
