#pragma once

#include <span>

#include <Eigen/Core>

#include "vstitch/grid.hpp"

namespace vstitch {

/// Planar projective map, stored with the bottom-right entry fixed at 1.
class Homography {
 public:
  Homography() : m_(Eigen::Matrix3d::Identity()) {}
  /// Normalizes so m(2,2) == 1; throws DegenerateConfiguration if that is
  /// impossible or |det| <= 1e-12 afterwards.
  explicit Homography(const Eigen::Matrix3d& m);

  static Homography identity() { return Homography(); }
  static Homography translation(double dx, double dy);

  Point apply(const Point& p) const;
  Point operator()(const Point& p) const { return apply(p); }
  Homography inverse() const;
  Homography operator*(const Homography& rhs) const { return Homography(m_ * rhs.m_); }

  const Eigen::Matrix3d& matrix() const { return m_; }

 private:
  Eigen::Matrix3d m_;
};

/// Least-squares DLT with Hartley normalization from >= 4 correspondences.
Homography homography_fit(std::span<const Point> source, std::span<const Point> target);

}  // namespace vstitch
