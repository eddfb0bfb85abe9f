#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <string>
#include <vector>

namespace pnct {

using Vector = Eigen::VectorXd;

/// Parallel-beam acquisition over a square field of view.
///
/// Pixel (a, b) occupies row a from the top and column b from the left; the
/// image spans [-fov/2, fov/2] in both directions. Ray j = v * n_rays + k
/// travels along (cos theta_v, sin theta_v) at signed offset s_k on the
/// perpendicular (-sin theta_v, cos theta_v).
struct Geometry {
  int n_pixels = 0;
  double fov_mm = 0.0;
  int n_angles = 0;
  double angular_span_deg = 0.0;
  int n_rays = 0;

  double pixel_size() const { return fov_mm / n_pixels; }
  int n_image() const { return n_pixels * n_pixels; }
  int n_measurements() const { return n_angles * n_rays; }

  double angle_deg(int view) const;
  double detector_offset(int bin) const;
};

Geometry build_geometry(int n_pixels, double fov_mm, int n_angles, double span_deg,
                        int n_rays);

/// Intersections of one ray with the pixel grid, in traversal order.
struct RaySegment {
  int pixel;
  double length;
};

/// Exact line/grid intersection lengths for one ray (Siddon traversal).
std::vector<RaySegment> trace_ray(const Geometry& g, int view, int bin);

/// Sparse ray-path-length operator. Rows are rays, columns pixels.
///
/// Stores A and its transpose in row-major form so that both forward and back
/// projection stream over contiguous rows. Immutable after construction.
class SystemMatrix {
 public:
  using Storage = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

  SystemMatrix() = default;
  explicit SystemMatrix(Storage a);

  Eigen::Index rows() const { return a_.rows(); }
  Eigen::Index cols() const { return a_.cols(); }
  Eigen::Index nonzeros() const { return a_.nonZeros(); }

  Vector forward(const Vector& x) const;
  Vector adjoint(const Vector& t) const;

  const Storage& matrix() const { return a_; }
  const Storage& transpose() const { return at_; }

  /// Dense copy for small reference computations.
  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(a_); }

 private:
  Storage a_;
  Storage at_;
};

SystemMatrix build_system_matrix(const Geometry& g);

Vector forward_project(const SystemMatrix& a, const Vector& x);
Vector back_project(const SystemMatrix& a, const Vector& t);

/// Writes "row,col,value" lines (zero-based) for cross-checking with external tools.
void export_triplets(const SystemMatrix& a, const std::string& path);

}  // namespace pnct
