#include "pnct/phantom.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pnct {

namespace {

struct Ellipse {
  double intensity;
  double semi_x;
  double semi_y;
  double center_x;
  double center_y;
  double phi_deg;
};

// Modified Shepp-Logan table (contrast-enhanced intensities).
constexpr std::array<Ellipse, 10> kSheppLogan = {{
    {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
    {-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0},
    {-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0},
    {-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0},
    {0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0},
    {0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0},
    {0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0},
    {0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0},
    {0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0},
    {0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0},
}};

}  // namespace

Image::Image(int w, int h, Vector v) : width(w), height(h), values(std::move(v)) {
  if (values.size() != static_cast<Eigen::Index>(w) * h) {
    throw std::invalid_argument("Image: value count does not match width*height");
  }
}

Image shepp_logan(int n) {
  if (n < 2) throw std::invalid_argument("shepp_logan: n must be >= 2");
  Image img(n, n);
  const double half = (n - 1) / 2.0;
  for (int row = 0; row < n; ++row) {
    const double y = (half - row) / half;
    for (int col = 0; col < n; ++col) {
      const double x = (col - half) / half;
      double v = 0.0;
      for (const auto& e : kSheppLogan) {
        const double phi = e.phi_deg * std::numbers::pi / 180.0;
        const double c = std::cos(phi);
        const double s = std::sin(phi);
        const double dx = x - e.center_x;
        const double dy = y - e.center_y;
        const double u = (dx * c + dy * s) / e.semi_x;
        const double w = (dy * c - dx * s) / e.semi_y;
        if (u * u + w * w <= 1.0) v += e.intensity;
      }
      img(row, col) = std::max(v, 0.0);
    }
  }
  return img;
}

double attenuation_scale(const SystemMatrix& a, const Vector& x, double target) {
  const double peak = a.forward(x).maxCoeff();
  if (!(peak > 0.0)) throw std::invalid_argument("attenuation_scale: object has no line integral");
  return target / peak;
}

Sinogram simulate_noiseless(const SystemMatrix& a, const Geometry& g, const Image& x_true,
                            double i0) {
  if (!(i0 > 0.0)) throw std::invalid_argument("simulate_noiseless: i0 must be > 0");
  if (a.rows() != g.n_measurements()) {
    throw std::invalid_argument("simulate_noiseless: system matrix does not match geometry");
  }
  const Vector line = a.forward(x_true.values);
  Sinogram d{g.n_angles, g.n_rays, Vector(line.size())};
  for (Eigen::Index j = 0; j < line.size(); ++j) d.values[j] = i0 * std::exp(-line[j]);
  return d;
}

Sinogram simulate_noisy(const Sinogram& noiseless, std::uint64_t seed) {
  PoissonSampler sampler(seed);
  Sinogram d = noiseless;
  for (Eigen::Index j = 0; j < d.values.size(); ++j) {
    d.values[j] = static_cast<double>(sampler(noiseless.values[j]));
  }
  return d;
}

Image negative_log_display(const Sinogram& d, double i0, double clip_max) {
  if (!(clip_max > 0.0)) throw std::invalid_argument("negative_log_display: clip_max must be > 0");
  Image img(d.n_rays, d.n_angles);
  for (Eigen::Index j = 0; j < d.values.size(); ++j) {
    const double v = -std::log(std::max(d.values[j], 1.0) / i0);
    img.values[j] = std::min(v, clip_max);
  }
  return img;
}

double PoissonSampler::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::int64_t PoissonSampler::operator()(double mean) {
  if (!(mean >= 0.0)) throw std::invalid_argument("PoissonSampler: mean must be >= 0");
  if (mean == 0.0) return 0;
  return mean < 30.0 ? inversion(mean) : ptrs(mean);
}

std::int64_t PoissonSampler::inversion(double mean) {
  const double u = uniform();
  double p = std::exp(-mean);
  double cdf = p;
  std::int64_t k = 0;
  while (u > cdf && k < 1000) {
    ++k;
    p *= mean / static_cast<double>(k);
    cdf += p;
  }
  return k;
}

// Hormann (1993), transformed rejection with squeeze.
std::int64_t PoissonSampler::ptrs(double mean) {
  const double slam = std::sqrt(mean);
  const double loglam = std::log(mean);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = uniform() - 0.5;
    const double v = uniform();
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
        -mean + k * loglam - std::lgamma(k + 1.0)) {
      return static_cast<std::int64_t>(k);
    }
  }
}

}  // namespace pnct
