#pragma once

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "vstitch/grid.hpp"

namespace vstitch {

/// Radial basis of the thin-plate spline, U(r) = r^2 log r, written in terms
/// of r^2 so callers can skip the square root. U(0) = 0.
inline double tps_basis_sq(double r2) { return r2 > 0.0 ? 0.5 * r2 * std::log(r2) : 0.0; }

/// Exact-interpolation thin-plate spline mapping source points onto targets.
///
/// The system is solved in a similarity-normalized frame of the source
/// points (centroid removed, RMS radius scaled to one). The interpolant does
/// not depend on that choice; affine() and kernel_weights() report the
/// coefficients in pixel coordinates.
class TpsWarp {
 public:
  /// Throws DegenerateConfiguration for collinear/coincident sources.
  static TpsWarp fit(std::span<const Point> source, std::span<const Point> target);

  Point operator()(const Point& p) const;
  std::vector<Point> map(std::span<const Point> points) const;

  /// 2x3 matrix [c | A] with p -> c + A p + sum_k w_k U(|p - s_k|).
  Eigen::Matrix<double, 2, 3> affine() const;
  /// 2xK kernel weights in pixel units.
  Eigen::Matrix2Xd kernel_weights() const;

  std::size_t size() const { return sources_.size(); }
  const std::vector<Point>& sources() const { return sources_; }

  // Normalized-frame internals used by the pixel kernels and gradient code.
  const Point& center() const { return center_; }
  double scale() const { return scale_; }
  const std::vector<Point>& normalized_sources() const { return normalized_; }
  /// (K+3)x2 solution: rows 0..K-1 kernel weights, then constant, x, y terms.
  const Eigen::MatrixX2d& coefficients() const { return coeffs_; }

 private:
  std::vector<Point> sources_;
  std::vector<Point> normalized_;
  Point center_ = Point::Zero();
  double scale_ = 1.0;
  Eigen::MatrixX2d coeffs_;
};

/// Symmetric (K+3)x(K+3) interpolation matrix for already-normalized points.
Eigen::MatrixXd tps_system_matrix(std::span<const Point> normalized);

TpsWarp tps_fit(const ControlGrid& source, const ControlGrid& target);
std::vector<Point> tps_eval(const TpsWarp& warp, std::span<const Point> points);

/// Maps every point of `query` through tps_fit(from, to).
ControlGrid warp_mesh(const ControlGrid& from, const ControlGrid& to, const ControlGrid& query);

}  // namespace vstitch
