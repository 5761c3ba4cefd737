#include "vstitch/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "vstitch/error.hpp"
#include "vstitch/linalg.hpp"
#include "vstitch/tps.hpp"

namespace vstitch {

void WarpObjectiveConfig::validate() const {
  if (lambda_tmp < 0 || lambda_spt < 0 || mu_spt < 0 || omega_spt < 0 || omega_h < 0) {
    throw InvalidArgument("warp objective weights must be non-negative");
  }
}

namespace {

void check_grad(std::span<Point> grad, std::size_t n, const char* what) {
  if (!grad.empty() && grad.size() != n) throw InvalidArgument(std::string(what) + ": gradient size mismatch");
}

}  // namespace

double intra_grid_loss(const ControlGrid& mesh, double width, double height, std::span<Point> grad,
                       double weight) {
  const GridShape& s = mesh.shape();
  check_grad(grad, mesh.size(), "intra_grid_loss");
  const double max_h = 2.0 * width / s.cols_v;
  const double max_v = 2.0 * height / s.rows_u;
  const double nh = static_cast<double>(s.point_rows()) * s.cols_v;
  const double nv = static_cast<double>(s.rows_u) * s.point_cols();

  double sum_h = 0.0;
  for (int u = 0; u <= s.rows_u; ++u) {
    for (int v = 0; v < s.cols_v; ++v) {
      const double excess = mesh.at(u, v + 1).x() - mesh.at(u, v).x() - max_h;
      if (excess <= 0.0) continue;
      sum_h += excess;
      if (!grad.empty()) {
        grad[s.index(u, v + 1)].x() += weight / nh;
        grad[s.index(u, v)].x() -= weight / nh;
      }
    }
  }
  double sum_v = 0.0;
  for (int u = 0; u < s.rows_u; ++u) {
    for (int v = 0; v <= s.cols_v; ++v) {
      const double excess = mesh.at(u + 1, v).y() - mesh.at(u, v).y() - max_v;
      if (excess <= 0.0) continue;
      sum_v += excess;
      if (!grad.empty()) {
        grad[s.index(u + 1, v)].y() += weight / nv;
        grad[s.index(u, v)].y() -= weight / nv;
      }
    }
  }
  return sum_h / nh + sum_v / nv;
}

double inter_grid_loss(const ControlGrid& mesh, std::span<Point> grad, double weight) {
  const GridShape& s = mesh.shape();
  check_grad(grad, mesh.size(), "inter_grid_loss");
  const int pairs_h = s.point_rows() * (s.cols_v - 1);
  const int pairs_v = (s.rows_u - 1) * s.point_cols();
  const int q = pairs_h + pairs_v;
  if (q == 0) return 0.0;

  double total = 0.0;
  // a -> b -> c along a mesh line.
  auto pair = [&](int a, int b, int c) {
    const Point e1 = mesh[b] - mesh[a];
    const Point e2 = mesh[c] - mesh[b];
    const double n1 = e1.norm(), n2 = e2.norm();
    if (n1 == 0.0 || n2 == 0.0) return;
    const double cosv = e1.dot(e2) / (n1 * n2);
    total += 1.0 - cosv;
    if (grad.empty()) return;
    const Point dcos_de1 = e2 / (n1 * n2) - cosv * e1 / (n1 * n1);
    const Point dcos_de2 = e1 / (n1 * n2) - cosv * e2 / (n2 * n2);
    const double f = -weight / q;
    grad[a] -= f * dcos_de1;
    grad[b] += f * (dcos_de1 - dcos_de2);
    grad[c] += f * dcos_de2;
  };
  for (int u = 0; u <= s.rows_u; ++u) {
    for (int v = 0; v + 2 <= s.cols_v; ++v) pair(s.index(u, v), s.index(u, v + 1), s.index(u, v + 2));
  }
  for (int u = 0; u + 2 <= s.rows_u; ++u) {
    for (int v = 0; v <= s.cols_v; ++v) pair(s.index(u, v), s.index(u + 1, v), s.index(u + 2, v));
  }
  return total / q;
}

double distortion_loss(const ControlGrid& mesh, double width, double height, std::span<Point> grad,
                       double weight) {
  return intra_grid_loss(mesh, width, height, grad, weight) + inter_grid_loss(mesh, grad, weight);
}

double motion_consistency_loss(const MotionField& m_t, const MotionField& m_prev, double mu,
                               std::span<Point> grad, double weight) {
  require_same_shape(m_t.shape(), m_prev.shape(), "motion_consistency_loss");
  check_grad(grad, m_t.size(), "motion_consistency_loss");
  const double n = static_cast<double>(m_t.size());
  double total = 0.0;
  for (std::size_t i = 0; i < m_t.size(); ++i) {
    const Point d = m_t[i] - m_prev[i];
    const double len = d.norm();
    if (len <= mu) continue;
    total += len - mu;
    if (!grad.empty()) grad[i] += weight / n * d / len;
  }
  return total / n;
}

double tps_alignment_term(const Frame& anchor, const Frame& moving, const ControlGrid& mesh,
                          const ControlGrid& moving_rigid, std::span<Point> grad, double weight,
                          kernels::Exec exec) {
  require_same_shape(mesh.shape(), moving_rigid.shape(), "tps_alignment_term");
  check_grad(grad, mesh.size(), "tps_alignment_term");
  const TpsWarp back = TpsWarp::fit(mesh.values(), moving_rigid.values());
  const kernels::Lattice lattice{anchor.height(), anchor.width(), Point::Zero(), 1.0};
  std::vector<Point> coords(lattice.size());
  kernels::map_lattice(back, lattice, coords, exec);
  kernels::PhotometricPartials partials;
  const auto sums = kernels::photometric_l1(anchor, moving, coords, exec, grad.empty() ? nullptr : &partials);
  const double value = kernels::normalized_l1(sums, anchor.channels());
  if (grad.empty()) return value;

  std::vector<Point> pixel_grad(coords.size());
  kernels::photometric_l1_gradient(partials, sums, anchor.channels(), pixel_grad, exec);
  const auto adj = kernels::tps_alignment_adjoint(back, anchor.height(), anchor.width(), pixel_grad, exec);
  const auto& nodes = back.normalized_sources();
  const int k = static_cast<int>(nodes.size());
  const PivotedLu lu(tps_system_matrix(nodes));
  const Eigen::MatrixXd y = lu.solve(adj.z);
  const Eigen::MatrixXd q = y * back.coefficients().transpose();

  const double f = weight / back.scale();
  for (int j = 0; j < k; ++j) {
    Point g = -adj.kernel.row(j).transpose();
    for (int b = 0; b < k; ++b) {
      if (b == j) continue;
      const Point d = nodes[j] - nodes[b];
      const double r2 = d.squaredNorm();
      if (r2 <= 0.0) continue;
      g -= (q(j, b) + q(b, j)) * (std::log(r2) + 1.0) * d;
    }
    g.x() -= q(j, k + 1) + q(k + 1, j);
    g.y() -= q(j, k + 2) + q(k + 2, j);
    grad[j] += f * g;
  }
  return value;
}

double homography_alignment_term(const Frame& anchor, const Frame& moving, const Homography& h,
                                 kernels::Exec exec) {
  const Homography inv = h.inverse();
  std::vector<Point> coords(anchor.pixel_count());
  for (int r = 0; r < anchor.height(); ++r) {
    for (int c = 0; c < anchor.width(); ++c) {
      coords[static_cast<std::size_t>(r) * anchor.width() + c] = inv.apply(Point(c, r));
    }
  }
  return kernels::normalized_l1(kernels::photometric_l1(anchor, moving, coords, exec), anchor.channels());
}

AlignmentTerms alignment_terms(const Frame& ref, const Frame& tgt, const Homography& h, const ControlGrid& mesh,
                               const WarpObjectiveConfig& cfg, kernels::Exec exec) {
  if (!ref.same_size(tgt) || ref.channels() != tgt.channels()) {
    throw InvalidArgument("alignment_loss: frames differ in size");
  }
  AlignmentTerms t;
  t.homography_forward = homography_alignment_term(ref, tgt, h, exec);
  t.homography_inverse = homography_alignment_term(tgt, ref, h.inverse(), exec);
  t.tps = tps_alignment_term(ref, tgt, mesh, rigid_mesh(mesh.shape(), tgt.width(), tgt.height()), {}, 1.0, exec);
  t.total = cfg.omega_h * (t.homography_forward + t.homography_inverse) + t.tps;
  return t;
}

double alignment_loss(const Frame& ref, const Frame& tgt, const Homography& h, const ControlGrid& mesh,
                      const WarpObjectiveConfig& cfg, kernels::Exec exec) {
  return alignment_terms(ref, tgt, h, mesh, cfg, exec).total;
}

namespace {

double warp_loss(const Frame& ref, const Frame& tgt, const Homography& h, const ControlGrid& mesh,
                 double lambda, const MotionField* prev_motion, double omega, double mu,
                 const WarpObjectiveConfig& cfg, MotionField* grad) {
  if (!ref.same_size(tgt)) throw InvalidArgument("warp objective: frames differ in size");
  const double w = tgt.width(), hgt = tgt.height();
  const ControlGrid rigid = rigid_mesh(mesh.shape(), w, hgt);
  std::span<Point> g;
  if (grad) {
    *grad = MotionField(mesh.shape());
    g = grad->values();
  }
  const double homs = homography_alignment_term(ref, tgt, h) + homography_alignment_term(tgt, ref, h.inverse());
  double value = cfg.omega_h * homs + tps_alignment_term(ref, tgt, mesh, rigid, g);
  value += lambda * distortion_loss(mesh, w, hgt, g, lambda);
  if (prev_motion) value += omega * motion_consistency_loss(mesh - rigid, *prev_motion, mu, g, omega);
  return value;
}

}  // namespace

double temporal_loss(const Frame& prev, const Frame& cur, const Homography& h, const ControlGrid& mesh,
                     const WarpObjectiveConfig& cfg, MotionField* grad) {
  return warp_loss(prev, cur, h, mesh, cfg.lambda_tmp, nullptr, 0.0, 0.0, cfg, grad);
}

double spatial_loss(const Frame& ref, const Frame& tgt, const Homography& h, const ControlGrid& mesh,
                    const std::optional<MotionField>& prev_motion, const WarpObjectiveConfig& cfg,
                    MotionField* grad) {
  return warp_loss(ref, tgt, h, mesh, cfg.lambda_spt, prev_motion ? &*prev_motion : nullptr, cfg.omega_spt,
                   cfg.mu_spt, cfg, grad);
}

}  // namespace vstitch
