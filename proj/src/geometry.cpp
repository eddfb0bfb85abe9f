#include "pnct/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace pnct {

namespace {

constexpr double kParallelEps = 1e-12;

}  // namespace

double Geometry::angle_deg(int view) const {
  return view * angular_span_deg / n_angles;
}

double Geometry::detector_offset(int bin) const {
  return (bin + 0.5) / n_rays * fov_mm - fov_mm / 2.0;
}

Geometry build_geometry(int n_pixels, double fov_mm, int n_angles, double span_deg,
                        int n_rays) {
  if (n_pixels < 2) throw std::invalid_argument("build_geometry: n_pixels must be >= 2");
  if (n_angles < 1) throw std::invalid_argument("build_geometry: n_angles must be >= 1");
  if (n_rays < 1) throw std::invalid_argument("build_geometry: n_rays must be >= 1");
  if (!(fov_mm > 0.0)) throw std::invalid_argument("build_geometry: fov_mm must be > 0");
  if (!(span_deg > 0.0)) throw std::invalid_argument("build_geometry: span_deg must be > 0");
  return Geometry{n_pixels, fov_mm, n_angles, span_deg, n_rays};
}

std::vector<RaySegment> trace_ray(const Geometry& g, int view, int bin) {
  const double theta = g.angle_deg(view) * std::numbers::pi / 180.0;
  double ux = std::cos(theta);
  double uy = std::sin(theta);
  if (std::abs(ux) < kParallelEps) ux = 0.0;
  if (std::abs(uy) < kParallelEps) uy = 0.0;

  const double s = g.detector_offset(bin);
  const double px = -s * uy;
  const double py = s * ux;

  const double half = g.fov_mm / 2.0;
  const double delta = g.pixel_size();
  const int n = g.n_pixels;

  // Slab clipping against [-half, half]^2.
  double t_lo = -std::numeric_limits<double>::infinity();
  double t_hi = std::numeric_limits<double>::infinity();
  auto clip = [&](double p, double u) {
    if (u == 0.0) {
      if (p < -half || p > half) t_lo = t_hi = 0.0;
      return;
    }
    double t0 = (-half - p) / u;
    double t1 = (half - p) / u;
    if (t0 > t1) std::swap(t0, t1);
    t_lo = std::max(t_lo, t0);
    t_hi = std::min(t_hi, t1);
  };
  clip(px, ux);
  clip(py, uy);
  if (!(t_hi > t_lo)) return {};

  std::vector<double> ts;
  ts.reserve(2 * n + 4);
  ts.push_back(t_lo);
  ts.push_back(t_hi);
  for (int i = 0; i <= n; ++i) {
    const double line = -half + i * delta;
    if (ux != 0.0) {
      const double t = (line - px) / ux;
      if (t > t_lo && t < t_hi) ts.push_back(t);
    }
    if (uy != 0.0) {
      const double t = (line - py) / uy;
      if (t > t_lo && t < t_hi) ts.push_back(t);
    }
  }
  std::sort(ts.begin(), ts.end());

  std::vector<RaySegment> out;
  out.reserve(ts.size());
  const double min_len = 1e-12 * delta;
  for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
    const double len = ts[k + 1] - ts[k];
    if (len <= min_len) continue;
    const double tm = 0.5 * (ts[k] + ts[k + 1]);
    const double mx = px + tm * ux;
    const double my = py + tm * uy;
    const int col = std::clamp(static_cast<int>(std::floor((mx + half) / delta)), 0, n - 1);
    const int row = std::clamp(static_cast<int>(std::floor((half - my) / delta)), 0, n - 1);
    const int pixel = row * n + col;
    if (!out.empty() && out.back().pixel == pixel) {
      out.back().length += len;
    } else {
      out.push_back({pixel, len});
    }
  }
  return out;
}

SystemMatrix::SystemMatrix(Storage a) : a_(std::move(a)), at_(a_.transpose()) {
  a_.makeCompressed();
  at_.makeCompressed();
}

Vector SystemMatrix::forward(const Vector& x) const {
  if (x.size() != a_.cols()) {
    throw std::invalid_argument("forward_project: image has " + std::to_string(x.size()) +
                                " entries, expected " + std::to_string(a_.cols()));
  }
  return a_ * x;
}

Vector SystemMatrix::adjoint(const Vector& t) const {
  if (t.size() != a_.rows()) {
    throw std::invalid_argument("back_project: ray vector has " + std::to_string(t.size()) +
                                " entries, expected " + std::to_string(a_.rows()));
  }
  return at_ * t;
}

SystemMatrix build_system_matrix(const Geometry& g) {
  std::vector<Eigen::Triplet<double, int>> triplets;
  triplets.reserve(static_cast<std::size_t>(g.n_measurements()) * 2 * g.n_pixels);
  for (int v = 0; v < g.n_angles; ++v) {
    for (int k = 0; k < g.n_rays; ++k) {
      const int row = v * g.n_rays + k;
      for (const auto& seg : trace_ray(g, v, k)) {
        triplets.emplace_back(row, seg.pixel, seg.length);
      }
    }
  }
  SystemMatrix::Storage a(g.n_measurements(), g.n_image());
  a.setFromTriplets(triplets.begin(), triplets.end());
  return SystemMatrix(std::move(a));
}

Vector forward_project(const SystemMatrix& a, const Vector& x) { return a.forward(x); }

Vector back_project(const SystemMatrix& a, const Vector& t) { return a.adjoint(t); }

void export_triplets(const SystemMatrix& a, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_triplets: cannot open " + path);
  out.precision(17);
  out << "row,col,value\n";
  const auto& m = a.matrix();
  for (int r = 0; r < m.outerSize(); ++r) {
    for (SystemMatrix::Storage::InnerIterator it(m, r); it; ++it) {
      out << it.row() << ',' << it.col() << ',' << it.value() << '\n';
    }
  }
}

}  // namespace pnct
