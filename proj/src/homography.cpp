#include "vstitch/homography.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "vstitch/error.hpp"

namespace vstitch {

Homography::Homography(const Eigen::Matrix3d& m) {
  if (!m.allFinite()) throw DegenerateConfiguration("Homography: non-finite entries");
  const double norm = m.cwiseAbs().maxCoeff();
  if (!(std::abs(m(2, 2)) > 1e-12 * norm)) {
    throw DegenerateConfiguration("Homography: bottom-right entry is zero, cannot normalize");
  }
  m_ = m / m(2, 2);
  if (!(std::abs(m_.determinant()) > 1e-12)) {
    throw DegenerateConfiguration("Homography: matrix is not invertible");
  }
}

Homography Homography::translation(double dx, double dy) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 2) = dx;
  m(1, 2) = dy;
  return Homography(m);
}

Point Homography::apply(const Point& p) const {
  const double w = m_(2, 0) * p.x() + m_(2, 1) * p.y() + m_(2, 2);
  return {(m_(0, 0) * p.x() + m_(0, 1) * p.y() + m_(0, 2)) / w,
          (m_(1, 0) * p.x() + m_(1, 1) * p.y() + m_(1, 2)) / w};
}

Homography Homography::inverse() const { return Homography(m_.inverse()); }

namespace {

Eigen::Matrix3d normalizer(std::span<const Point> pts) {
  Point c = Point::Zero();
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  double mean_dist = 0.0;
  for (const auto& p : pts) mean_dist += (p - c).norm();
  mean_dist /= static_cast<double>(pts.size());
  if (!(mean_dist > 0.0)) throw DegenerateConfiguration("homography_fit: points coincide");
  const double s = std::sqrt(2.0) / mean_dist;
  Eigen::Matrix3d t;
  t << s, 0, -s * c.x(), 0, s, -s * c.y(), 0, 0, 1;
  return t;
}

}  // namespace

Homography homography_fit(std::span<const Point> source, std::span<const Point> target) {
  if (source.size() != target.size()) throw InvalidArgument("homography_fit: size mismatch");
  if (source.size() < 4) throw InvalidArgument("homography_fit: need at least 4 correspondences");

  const Eigen::Matrix3d ts = normalizer(source);
  const Eigen::Matrix3d td = normalizer(target);
  const auto n = static_cast<Eigen::Index>(source.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * n, 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d p = ts * source[i].homogeneous();
    const Eigen::Vector3d q = td * target[i].homogeneous();
    const double x = p.x() / p.z(), y = p.y() / p.z();
    const double u = q.x() / q.z(), v = q.y() / q.z();
    a.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
    a.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  // A unique null direction needs rank 8.
  if (sv.size() < 8 || !(sv(7) > 1e-10 * sv(0))) {
    throw DegenerateConfiguration("homography_fit: correspondences are rank deficient");
  }
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d hn;
  hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  return Homography(td.inverse() * hn * ts);
}

}  // namespace vstitch
