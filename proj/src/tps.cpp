#include "vstitch/tps.hpp"

#include <cmath>

#include "vstitch/error.hpp"
#include "vstitch/linalg.hpp"

namespace vstitch {

Eigen::MatrixXd tps_system_matrix(std::span<const Point> normalized) {
  const auto k = static_cast<Eigen::Index>(normalized.size());
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(k + 3, k + 3);
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = i + 1; j < k; ++j) {
      const double u = tps_basis_sq((normalized[i] - normalized[j]).squaredNorm());
      l(i, j) = u;
      l(j, i) = u;
    }
    l(i, k) = l(k, i) = 1.0;
    l(i, k + 1) = l(k + 1, i) = normalized[i].x();
    l(i, k + 2) = l(k + 2, i) = normalized[i].y();
  }
  return l;
}

TpsWarp TpsWarp::fit(std::span<const Point> source, std::span<const Point> target) {
  if (source.size() != target.size()) {
    throw InvalidArgument("tps_fit: source and target sizes differ");
  }
  if (source.size() < 3) {
    throw DegenerateConfiguration("tps_fit: need at least three control points");
  }
  TpsWarp warp;
  warp.sources_.assign(source.begin(), source.end());

  Point center = Point::Zero();
  for (const auto& p : source) center += p;
  center /= static_cast<double>(source.size());
  double spread = 0.0;
  for (const auto& p : source) spread += (p - center).squaredNorm();
  spread = std::sqrt(spread / static_cast<double>(source.size()));
  if (!(spread > 0.0) || !std::isfinite(spread)) {
    throw DegenerateConfiguration("tps_fit: source points coincide");
  }
  warp.center_ = center;
  warp.scale_ = spread;
  warp.normalized_.reserve(source.size());
  for (const auto& p : source) warp.normalized_.push_back((p - center) / spread);

  const auto k = static_cast<Eigen::Index>(source.size());
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(k + 3, 2);
  for (Eigen::Index i = 0; i < k; ++i) rhs.row(i) = target[i].transpose();

  const PivotedLu lu(tps_system_matrix(warp.normalized_));
  warp.coeffs_ = lu.solve(rhs);
  return warp;
}

Point TpsWarp::operator()(const Point& p) const {
  const Point q = (p - center_) / scale_;
  const auto k = static_cast<Eigen::Index>(normalized_.size());
  double x = coeffs_(k, 0) + coeffs_(k + 1, 0) * q.x() + coeffs_(k + 2, 0) * q.y();
  double y = coeffs_(k, 1) + coeffs_(k + 1, 1) * q.x() + coeffs_(k + 2, 1) * q.y();
  for (Eigen::Index i = 0; i < k; ++i) {
    const double u = tps_basis_sq((q - normalized_[i]).squaredNorm());
    x += coeffs_(i, 0) * u;
    y += coeffs_(i, 1) * u;
  }
  return {x, y};
}

std::vector<Point> TpsWarp::map(std::span<const Point> points) const {
  std::vector<Point> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back((*this)(p));
  return out;
}

Eigen::Matrix<double, 2, 3> TpsWarp::affine() const {
  // With p^ = (p - c)/s, U(|p^ - q^|) = U(|p - q|)/s^2 - log(s)/s^2 |p - q|^2, and the
  // side conditions collapse sum_k w_k |p - s_k|^2 to the constant sum_k w_k |s_k|^2.
  const auto k = static_cast<Eigen::Index>(normalized_.size());
  const double s = scale_;
  Eigen::Matrix<double, 2, 3> a;
  for (int axis = 0; axis < 2; ++axis) {
    const double a0 = coeffs_(k, axis);
    const double ax = coeffs_(k + 1, axis);
    const double ay = coeffs_(k + 2, axis);
    double bending = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) bending += coeffs_(i, axis) * sources_[i].squaredNorm();
    a(axis, 0) = a0 - (ax * center_.x() + ay * center_.y()) / s - std::log(s) / (s * s) * bending;
    a(axis, 1) = ax / s;
    a(axis, 2) = ay / s;
  }
  return a;
}

Eigen::Matrix2Xd TpsWarp::kernel_weights() const {
  const auto k = static_cast<Eigen::Index>(normalized_.size());
  Eigen::Matrix2Xd w(2, k);
  for (Eigen::Index i = 0; i < k; ++i) w.col(i) = coeffs_.row(i).transpose() / (scale_ * scale_);
  return w;
}

TpsWarp tps_fit(const ControlGrid& source, const ControlGrid& target) {
  require_same_shape(source.shape(), target.shape(), "tps_fit");
  return TpsWarp::fit(source.values(), target.values());
}

std::vector<Point> tps_eval(const TpsWarp& warp, std::span<const Point> points) { return warp.map(points); }

ControlGrid warp_mesh(const ControlGrid& from, const ControlGrid& to, const ControlGrid& query) {
  const TpsWarp warp = tps_fit(from, to);
  return ControlGrid(query.shape(), warp.map(query.values()));
}

}  // namespace vstitch
