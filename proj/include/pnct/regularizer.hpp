#pragma once

#include "pnct/phantom.hpp"
#include "pnct/problem.hpp"

namespace pnct {

/// Budget for the dual fast gradient projection used by the TV prox.
struct ProxConfig {
  int max_iter = 100;
  double rel_tol = 1e-6;
  /// Step on the dual, relative to 1/tau. 1/8 bounds |div grad| in 2-D.
  double dual_step = 1.0 / 8.0;
};

/// Dual variables of the isotropic TV prox.
///
/// Both fields are stored on the full height x width grid. `p` pairs with the
/// difference to the next row and `q` with the difference to the next column;
/// entries with no such neighbour (last row of `p`, last column of `q`) are
/// structurally zero, which leaves the lone boundary component constrained to
/// [-1, 1] by the pairwise unit-ball projection.
struct GradientField {
  int width = 0;
  int height = 0;
  Vector p;
  Vector q;
};

struct TvProxResult {
  Image image;
  GradientField dual;
  int iterations = 0;
};

/// lambda * sum_{a,b} sqrt((x[a,b]-x[a+1,b])^2 + (x[a,b]-x[a,b+1])^2),
/// out-of-range differences taken as zero.
double tv_value(const Image& x, double lambda);

/// argmin_u 0.5 |u - z|^2 + tau * TV(u) by fast gradient projection on the dual.
Image tv_prox(const Image& z, double tau, const ProxConfig& cfg = {});

/// As tv_prox, optionally warm-started from a dual field; returns the final dual.
TvProxResult tv_prox_dual(const Image& z, double tau, const ProxConfig& cfg,
                          const GradientField* warm_start = nullptr);

/// Prox of h = lambda * TV with step `scale`: tv_prox(z, scale * lambda).
Image prox_h(const Image& z, double lambda, double scale, const ProxConfig& cfg = {});

/// h = lambda * TV on a fixed image shape, for use in composite problems.
class TvTerm final : public NonSmoothTerm {
 public:
  TvTerm(int width, int height, double lambda, ProxConfig cfg = {});

  double value(const Vector& x) const override;
  Vector prox(const Vector& z, double scale) const override;

  double lambda() const { return lambda_; }

 private:
  int width_;
  int height_;
  double lambda_;
  ProxConfig cfg_;
};

}  // namespace pnct
