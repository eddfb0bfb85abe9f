#pragma once

#include "pnct/geometry.hpp"

#include <cstdint>
#include <random>

namespace pnct {

/// Row-major 2-D grid. Attenuation images are in 1/mm.
struct Image {
  int width = 0;
  int height = 0;
  Vector values;

  Image() = default;
  Image(int w, int h) : width(w), height(h), values(Vector::Zero(static_cast<Eigen::Index>(w) * h)) {}
  Image(int w, int h, Vector v);

  double& operator()(int row, int col) { return values[static_cast<Eigen::Index>(row) * width + col]; }
  double operator()(int row, int col) const {
    return values[static_cast<Eigen::Index>(row) * width + col];
  }
};

/// Photon counts indexed by (view, detector bin), stored view-major.
struct Sinogram {
  int n_angles = 0;
  int n_rays = 0;
  Vector values;

  double operator()(int view, int bin) const {
    return values[static_cast<Eigen::Index>(view) * n_rays + bin];
  }
};

/// Modified Shepp-Logan head phantom (ten ellipses, values in [0, 1]).
Image shepp_logan(int n);

/// Factor that brings the largest line integral of `x` through `a` to `target`.
double attenuation_scale(const SystemMatrix& a, const Vector& x, double target);

/// d_j = i0 * exp(-(A x)_j).
Sinogram simulate_noiseless(const SystemMatrix& a, const Geometry& g, const Image& x_true,
                            double i0);

/// Independent Poisson draws with the noiseless counts as means.
Sinogram simulate_noisy(const Sinogram& noiseless, std::uint64_t seed);

/// min(-ln(max(d, 1) / i0), clip_max) laid out as an n_angles x n_rays image.
Image negative_log_display(const Sinogram& d, double i0, double clip_max);

/// Platform-independent Poisson sampler over a 64-bit Mersenne Twister.
///
/// Uses sequential inversion below mean 30 and transformed rejection with
/// squeeze (PTRS) above, drawing uniforms directly from the engine's bits so
/// that a seed produces the same stream on every conforming standard library.
class PoissonSampler {
 public:
  explicit PoissonSampler(std::uint64_t seed) : engine_(seed) {}

  double uniform();
  std::int64_t operator()(double mean);

 private:
  std::int64_t inversion(double mean);
  std::int64_t ptrs(double mean);

  std::mt19937_64 engine_;
};

}  // namespace pnct
