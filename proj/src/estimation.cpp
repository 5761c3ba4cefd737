#include "vstitch/estimation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <mutex>
#include <tuple>

#include <Eigen/LU>
#include <fftw3.h>
#include <spdlog/spdlog.h>

#include "parallel.hpp"
#include "vstitch/error.hpp"
#include "vstitch/linalg.hpp"
#include "vstitch/optimizer.hpp"
#include "vstitch/tps.hpp"

namespace vstitch {

void EstimatorOptions::validate() const {
  if (pyramid_levels < 1) throw InvalidArgument("pyramid_levels must be >= 1");
  const auto inside = [&](int level) { return level >= 0 && level < pyramid_levels; };
  if (!inside(search_level) || !inside(homography_min_level) || !inside(fine_level)) {
    throw InvalidArgument("estimator levels must lie inside the pyramid");
  }
  if (fine_stride < 1) throw InvalidArgument("fine_stride must be >= 1");
  if (search_peaks < 1) throw InvalidArgument("search_peaks must be >= 1");
  if (homography_iters < 0 || max_iters < 0) throw InvalidArgument("iteration limits must be >= 0");
  if (!(rel_tol > 0.0)) throw InvalidArgument("rel_tol must be positive");
  if (!(min_overlap >= 0.0 && min_overlap <= 1.0)) throw InvalidArgument("min_overlap must lie in [0,1]");
}

namespace {

using detail::for_rows;
using kernels::Exec;
using Vector8d = Eigen::Matrix<double, 8, 1>;
using Matrix8d = Eigen::Matrix<double, 8, 8>;

double level_scale(int level) { return std::ldexp(1.0, level); }

std::vector<Frame> photometric_pyramid(const Frame& frame, int levels) {
  return build_pyramid(gaussian_blur(to_gray(frame), 1.0), levels);
}

// Bilinear read of channel 0; false outside [0,w-1]x[0,h-1].
bool bilinear(const Frame& f, double x, double y, double& out) {
  const int w = f.width(), h = f.height();
  if (!(x >= 0.0 && y >= 0.0 && x <= w - 1 && y <= h - 1)) return false;
  const int x0 = std::min(static_cast<int>(x), w - 1), y0 = std::min(static_cast<int>(y), h - 1);
  const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
  const double fx = x - x0, fy = y - y0;
  out = (1 - fy) * ((1 - fx) * f(y0, x0) + fx * f(y0, x1)) + fy * ((1 - fx) * f(y1, x0) + fx * f(y1, x1));
  return true;
}

// ---------------------------------------------------------------------------
// Translation search

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

std::vector<double> correlation_surface(const Frame& a, const Frame& b) {
  const int h = a.height(), w = a.width();
  const std::size_t n = a.pixel_count();
  std::vector<std::complex<double>> fa(n), fb(n);
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a.pixels()[i];
    mb += b.pixels()[i];
  }
  ma /= n;
  mb /= n;
  for (std::size_t i = 0; i < n; ++i) {
    fa[i] = a.pixels()[i] - ma;
    fb[i] = b.pixels()[i] - mb;
  }
  auto* pa = reinterpret_cast<fftw_complex*>(fa.data());
  auto* pb = reinterpret_cast<fftw_complex*>(fb.data());
  fftw_plan fwd_a, fwd_b, inv;
  {
    std::lock_guard lock(fftw_planner_mutex());
    fwd_a = fftw_plan_dft_2d(h, w, pa, pa, FFTW_FORWARD, FFTW_ESTIMATE);
    fwd_b = fftw_plan_dft_2d(h, w, pb, pb, FFTW_FORWARD, FFTW_ESTIMATE);
    inv = fftw_plan_dft_2d(h, w, pa, pa, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  fftw_execute(fwd_a);
  fftw_execute(fwd_b);
  for (std::size_t i = 0; i < n; ++i) {
    const std::complex<double> cross = fa[i] * std::conj(fb[i]);
    const double mag = std::abs(cross);
    fa[i] = mag > 1e-12 ? cross / mag : 0.0;
  }
  fftw_execute(inv);
  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(fwd_a);
    fftw_destroy_plan(fwd_b);
    fftw_destroy_plan(inv);
  }
  std::vector<double> surface(n);
  for (std::size_t i = 0; i < n; ++i) surface[i] = fa[i].real();
  return surface;
}

// Mean |a(x + d) - b(x)| over the shared rectangle of an integer shift.
double shifted_mae(const Frame& a, const Frame& b, int dx, int dy) {
  const int h = a.height(), w = a.width();
  const int x_lo = std::max(0, -dx), x_hi = std::min(w, w - dx);
  const int y_lo = std::max(0, -dy), y_hi = std::min(h, h - dy);
  double sum = 0.0;
  for (int y = y_lo; y < y_hi; ++y) {
    for (int x = x_lo; x < x_hi; ++x) sum += std::abs(a(y + dy, x + dx) - b(y, x));
  }
  return sum / (static_cast<double>(x_hi - x_lo) * (y_hi - y_lo));
}

Point search_translation(const Frame& a, const Frame& b, double scale, const EstimatorOptions& opts) {
  const int h = a.height(), w = a.width();
  const std::vector<double> surface = correlation_surface(a, b);

  struct Peak {
    double value;
    int x, y;
  };
  std::vector<Peak> peaks;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = surface[static_cast<std::size_t>(y) * w + x];
      bool is_max = true;
      for (int oy = -1; oy <= 1 && is_max; ++oy) {
        for (int ox = -1; ox <= 1; ++ox) {
          if (ox == 0 && oy == 0) continue;
          const int nx = (x + ox + w) % w, ny = (y + oy + h) % h;
          if (surface[static_cast<std::size_t>(ny) * w + nx] > v) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) peaks.push_back({v, x, y});
    }
  }
  const auto keep = std::min<std::size_t>(peaks.size(), opts.search_peaks);
  std::partial_sort(peaks.begin(), peaks.begin() + keep, peaks.end(),
                    [](const Peak& l, const Peak& r) { return l.value > r.value; });

  double best_err = std::numeric_limits<double>::infinity();
  Point best = Point::Zero();
  for (std::size_t p = 0; p < keep; ++p) {
    for (const int dx : {peaks[p].x, peaks[p].x - w}) {
      for (const int dy : {peaks[p].y, peaks[p].y - h}) {
        const double overlap = static_cast<double>(w - std::abs(dx)) * (h - std::abs(dy)) / (double(w) * h);
        // Half the required overlap: a true low-overlap shift is still found
        // so the caller can report it.
        if (std::abs(dx) >= w || std::abs(dy) >= h || overlap < 0.5 * opts.min_overlap) continue;
        const double err = shifted_mae(a, b, dx, dy);
        if (err < best_err) {
          best_err = err;
          best = Point(dx, dy);
        }
      }
    }
  }
  if (!std::isfinite(best_err)) {
    throw InsufficientOverlap("translation search: no candidate keeps the minimum overlap");
  }
  return best * scale;
}

// ---------------------------------------------------------------------------
// Four-corner homography

struct CornerHomography {
  Homography h;
  Vector8d coeffs;
  Matrix8d jacobian;  // d coeffs / d corner offsets
};

CornerHomography corner_homography(const std::array<Point, 4>& corners, const Vector8d& offsets) {
  Matrix8d a;
  Vector8d b;
  for (int i = 0; i < 4; ++i) {
    const double x = corners[i].x(), y = corners[i].y();
    const double u = x + offsets(2 * i), v = y + offsets(2 * i + 1);
    a.row(2 * i) << x, y, 1, 0, 0, 0, -u * x, -u * y;
    a.row(2 * i + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y;
    b(2 * i) = u;
    b(2 * i + 1) = v;
  }
  const Eigen::FullPivLU<Matrix8d> lu(a);
  if (!lu.isInvertible()) throw DegenerateConfiguration("corner homography: degenerate corners");
  CornerHomography out;
  out.coeffs = lu.solve(b);
  const Matrix8d inv = lu.inverse();
  // A(u) h = b(u): d h / d u_i = A^-1 e_i * (h6 x + h7 y + 1).
  for (int i = 0; i < 4; ++i) {
    const double w = out.coeffs(6) * corners[i].x() + out.coeffs(7) * corners[i].y() + 1.0;
    out.jacobian.col(2 * i) = inv.col(2 * i) * w;
    out.jacobian.col(2 * i + 1) = inv.col(2 * i + 1) * w;
  }
  Eigen::Matrix3d m;
  m << out.coeffs(0), out.coeffs(1), out.coeffs(2), out.coeffs(3), out.coeffs(4), out.coeffs(5), out.coeffs(6),
      out.coeffs(7), 1.0;
  out.h = Homography(m);
  return out;
}

struct NormalEquations {
  Matrix8d a = Matrix8d::Zero();
  Vector8d b = Vector8d::Zero();
  double cost = 0.0;  // mean squared residual
  double count = 0.0;
};

// Residual r(q) = anchor(H q) - moving(q) on a strided level lattice.
NormalEquations homography_normals(const Frame& anchor, const ImageGradient& grad, const Frame& moving,
                                   double scale, const CornerHomography& ch, int stride, bool with_normals,
                                   Exec exec) {
  const int rows = (moving.height() + stride - 1) / stride;
  constexpr int kSlots = 64 + 8 + 2;
  std::vector<double> partial(static_cast<std::size_t>(rows) * kSlots, 0.0);
  const Vector8d& h = ch.coeffs;

  for_rows(rows, exec, [&](int ri) {
    double* acc = &partial[static_cast<std::size_t>(ri) * kSlots];
    Eigen::Map<Matrix8d> ra(acc);
    Eigen::Map<Vector8d> rb(acc + 64);
    const int r = ri * stride;
    for (int c = 0; c < moving.width(); c += stride) {
      const double qx = c * scale, qy = r * scale;
      const double z = h(6) * qx + h(7) * qy + 1.0;
      if (z <= 1e-9) continue;
      const double px = (h(0) * qx + h(1) * qy + h(2)) / z;
      const double py = (h(3) * qx + h(4) * qy + h(5)) / z;
      double value;
      if (!bilinear(anchor, px / scale, py / scale, value)) continue;
      const double res = value - moving(r, c);
      acc[72] += res * res;
      acc[73] += 1.0;
      if (!with_normals) continue;
      double gx = 0.0, gy = 0.0;
      bilinear(grad.dx, px / scale, py / scale, gx);
      bilinear(grad.dy, px / scale, py / scale, gy);
      gx /= scale * z;
      gy /= scale * z;
      Vector8d jh;
      jh << gx * qx, gx * qy, gx, gy * qx, gy * qy, gy, -(gx * px + gy * py) * qx, -(gx * px + gy * py) * qy;
      const Vector8d j = ch.jacobian.transpose() * jh;
      ra.selfadjointView<Eigen::Lower>().rankUpdate(j);
      rb += j * res;
    }
  });

  NormalEquations out;
  for (int ri = 0; ri < rows; ++ri) {
    const double* acc = &partial[static_cast<std::size_t>(ri) * kSlots];
    out.a += Eigen::Map<const Matrix8d>(acc);
    out.b += Eigen::Map<const Vector8d>(acc + 64);
    out.cost += acc[72];
    out.count += acc[73];
  }
  out.a = out.a.selfadjointView<Eigen::Lower>();
  if (out.count > 0) out.cost /= out.count;
  return out;
}

// Levenberg-Marquardt on the corner offsets at one pyramid level.
void refine_homography(const Frame& anchor, const Frame& moving, double scale,
                       const std::array<Point, 4>& corners, Vector8d& offsets, int iters, Exec exec) {
  const ImageGradient grad = central_gradient(anchor);
  const int stride = std::max(1, static_cast<int>(std::ceil(std::sqrt(moving.pixel_count() / 10000.0))));
  CornerHomography ch = corner_homography(corners, offsets);
  NormalEquations cur = homography_normals(anchor, grad, moving, scale, ch, stride, true, exec);
  if (cur.count < 8 || cur.cost == 0.0) return;
  double damping = 1e-4;
  int rejected = 0;
  for (int it = 0; it < iters && rejected < 3; ++it) {
    Matrix8d lhs = cur.a;
    for (int i = 0; i < 8; ++i) lhs(i, i) += damping * cur.a(i, i) + 1e-12;
    const Vector8d step = lhs.ldlt().solve(-cur.b);
    if (!step.allFinite()) break;
    const Vector8d trial = offsets + step;
    bool accepted = false;
    try {
      const CornerHomography tch = corner_homography(corners, trial);
      NormalEquations next = homography_normals(anchor, grad, moving, scale, tch, stride, true, exec);
      if (next.count >= 0.5 * cur.count && next.cost < cur.cost) {
        offsets = trial;
        ch = tch;
        cur = next;
        accepted = true;
      }
    } catch (const DegenerateConfiguration&) {
    }
    if (step.cwiseAbs().maxCoeff() < 1e-2 * scale || cur.cost == 0.0) break;
    if (accepted) {
      damping = std::max(damping / 3.0, 1e-9);
      rejected = 0;
    } else {
      damping *= 4.0;
      ++rejected;
    }
  }
}

double overlap_fraction(const Homography& h, int width, int height) {
  const int step = 4;
  double inside = 0.0, total = 0.0;
  for (int y = 0; y < height; y += step) {
    for (int x = 0; x < width; x += step) {
      const Point p = h(Point(x, y));
      total += 1.0;
      if (p.x() >= 0 && p.y() >= 0 && p.x() <= width - 1 && p.y() <= height - 1) inside += 1.0;
    }
  }
  return inside / total;
}

// The forward spline rigid -> mesh evaluated on a node lattice over the
// level image; pixel coordinates are bilinear in the four surrounding nodes.
// Node n maps to basis.row(n) * M with M the level-scaled mesh rows.
struct NodeLattice {
  int rows = 0, cols = 0;    // image size
  int step = 1;
  int node_rows = 0, node_cols = 0;
  Eigen::MatrixXd basis;     // nodes x K

  int nodes() const { return node_rows * node_cols; }

  // Top-left node and bilinear fractions of pixel (r, c).
  void locate(int r, int c, int& i, int& j, double& fy, double& fx) const {
    i = std::min(r / step, node_rows - 2);
    j = std::min(c / step, node_cols - 2);
    fy = static_cast<double>(r - i * step) / step;
    fx = static_cast<double>(c - j * step) / step;
  }
};

NodeLattice node_lattice(int rows, int cols, int step, const ControlGrid& rigid_level, Exec exec) {
  NodeLattice lat;
  lat.rows = rows;
  lat.cols = cols;
  lat.step = step;
  lat.node_rows = std::max(2, (rows - 1 + step - 1) / step + 1);
  lat.node_cols = std::max(2, (cols - 1 + step - 1) / step + 1);

  const auto src = rigid_level.values();
  const TpsWarp unit = TpsWarp::fit(src, src);
  const auto& norm = unit.normalized_sources();
  const int k = static_cast<int>(norm.size());
  const PivotedLu lu(tps_system_matrix(norm));
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(k + 3, k);
  rhs.topRows(k).setIdentity();
  const Eigen::MatrixXd coef = lu.solve(rhs);

  Eigen::MatrixXd phi(lat.nodes(), k + 3);
  const Point center = unit.center();
  const double inv_scale = 1.0 / unit.scale();
  for_rows(lat.node_rows, exec, [&](int i) {
    for (int j = 0; j < lat.node_cols; ++j) {
      const Eigen::Index n = static_cast<Eigen::Index>(i) * lat.node_cols + j;
      const double qx = (j * step - center.x()) * inv_scale, qy = (i * step - center.y()) * inv_scale;
      for (int t = 0; t < k; ++t) {
        const double dx = qx - norm[t].x(), dy = qy - norm[t].y();
        phi(n, t) = tps_basis_sq(dx * dx + dy * dy);
      }
      phi(n, k) = 1.0;
      phi(n, k + 1) = qx;
      phi(n, k + 2) = qy;
    }
  });
  lat.basis = phi * coef;
  return lat;
}

using RowPoints = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

}  // namespace

constexpr int kNodeStep = 4;

struct MotionEstimator::Cache {
  using Key = std::tuple<int, int, int, int>;
  std::mutex mutex;
  std::map<Key, std::shared_ptr<const NodeLattice>> bases;

  std::shared_ptr<const NodeLattice> lattice(const Frame& level, int width, int height, double scale,
                                               const GridShape& shape, Exec exec) {
    const Key key{level.height(), level.width(), width, height};
    {
      std::lock_guard lock(mutex);
      if (auto it = bases.find(key); it != bases.end()) return it->second;
    }
    ControlGrid rig = rigid_mesh(shape, width, height);
    for (auto& p : rig) p /= scale;
    auto built = std::make_shared<const NodeLattice>(node_lattice(level.height(), level.width(), kNodeStep, rig, exec));
    std::lock_guard lock(mutex);
    return bases.emplace(key, std::move(built)).first->second;
  }
};

MotionEstimator::MotionEstimator(GridShape shape, WarpObjectiveConfig cfg, EstimatorOptions opts)
    : shape_(shape), cfg_(cfg), opts_(opts), cache_(std::make_unique<Cache>()) {
  shape_.validate();
  cfg_.validate();
  opts_.validate();
}

MotionEstimator::~MotionEstimator() = default;
MotionEstimator::MotionEstimator(MotionEstimator&&) noexcept = default;
MotionEstimator& MotionEstimator::operator=(MotionEstimator&&) noexcept = default;

EstimateReport MotionEstimator::temporal(const Frame& prev, const Frame& cur) const {
  return run(prev, cur, cfg_.lambda_tmp, std::nullopt);
}

EstimateReport MotionEstimator::spatial(const Frame& ref, const Frame& tgt,
                                        const std::optional<MotionField>& prev_motion) const {
  return run(ref, tgt, cfg_.lambda_spt, prev_motion);
}

EstimateReport MotionEstimator::run(const Frame& anchor, const Frame& moving, double lambda,
                                    const std::optional<MotionField>& prev_motion) const {
  if (anchor.empty() || !anchor.same_size(moving)) throw InvalidArgument("estimator: frames must share a size");
  if (prev_motion) require_same_shape(prev_motion->shape(), shape_, "estimator previous motion");
  const int width = anchor.width(), height = anchor.height();
  const int levels = opts_.pyramid_levels;
  const std::vector<Frame> pa = photometric_pyramid(anchor, levels);
  const std::vector<Frame> pm = photometric_pyramid(moving, levels);

  // Coarse: global translation, then homography from coarse to fine.
  const Point shift = search_translation(pa[opts_.search_level], pm[opts_.search_level],
                                         level_scale(opts_.search_level), opts_);
  const std::array<Point, 4> corners{Point(0, 0), Point(width, 0), Point(0, height), Point(width, height)};
  Vector8d offsets;
  for (int i = 0; i < 4; ++i) offsets.segment<2>(2 * i) = shift;
  for (int level = levels - 1; level >= opts_.homography_min_level; --level) {
    refine_homography(pa[level], pm[level], level_scale(level), corners, offsets, opts_.homography_iters,
                      opts_.exec);
  }
  const Homography h = corner_homography(corners, offsets).h;
  const double overlap = overlap_fraction(h, width, height);
  if (overlap < opts_.min_overlap) {
    throw InsufficientOverlap("estimator: overlap " + std::to_string(overlap) + " below minimum");
  }

  // Fine: per-point refinement of the mesh induced by the homography.
  const ControlGrid rigid = rigid_mesh(shape_, width, height);
  const int k = shape_.points();
  Eigen::VectorXd x0(2 * k);
  for (int i = 0; i < k; ++i) x0.segment<2>(2 * i) = h(rigid[i]);

  const int fl = opts_.fine_level;
  const double scale = level_scale(fl);
  const Frame& fa = pa[fl];
  const Frame& fm = pm[fl];
  const auto lattice = cache_->lattice(fm, width, height, scale, shape_, opts_.exec);
  const int st = opts_.fine_stride;
  const int rows = (fm.height() + st - 1) / st, cols = (fm.width() + st - 1) / st;
  Frame samples(rows, cols, 1);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) samples(r, c) = fm(r * st, c * st);
  }
  const auto npix = static_cast<std::size_t>(samples.pixel_count());
  std::vector<Point> coords(npix), pixel_grad(npix);
  kernels::PhotometricPartials partials;
  RowPoints node_coords(lattice->nodes(), 2), node_grad(lattice->nodes(), 2);
  const double omega = prev_motion ? cfg_.omega_spt : 0.0;

  const Objective objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
    const Eigen::Map<const RowPoints> mesh_mat(x.data(), k, 2);
    node_coords.noalias() = lattice->basis * (mesh_mat / scale);
    const double* nc = node_coords.data();
    detail::for_rows(rows, opts_.exec, [&](int r) {
      for (int c = 0; c < cols; ++c) {
        int i, j;
        double fy, fx;
        lattice->locate(r * st, c * st, i, j, fy, fx);
        const double* n00 = nc + 2 * (i * lattice->node_cols + j);
        const double* n10 = n00 + 2 * lattice->node_cols;
        const double w00 = (1 - fy) * (1 - fx), w01 = (1 - fy) * fx, w10 = fy * (1 - fx), w11 = fy * fx;
        coords[static_cast<std::size_t>(r) * cols + c] =
            Point(w00 * n00[0] + w01 * n00[2] + w10 * n10[0] + w11 * n10[2],
                  w00 * n00[1] + w01 * n00[3] + w10 * n10[1] + w11 * n10[3]);
      }
    });
    const auto sums = kernels::photometric_l1(samples, fa, coords, opts_.exec, grad ? &partials : nullptr);
    double value = kernels::normalized_l1(sums, 1);

    ControlGrid mesh(shape_);
    for (int i = 0; i < k; ++i) mesh[i] = x.segment<2>(2 * i);
    std::vector<Point> mesh_grad;
    if (grad) {
      kernels::photometric_l1_gradient(partials, sums, 1, pixel_grad, opts_.exec);
      node_grad.setZero();
      double* ng = node_grad.data();
      const int stride = 2 * lattice->node_cols;
      for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
          const Point& g = pixel_grad[static_cast<std::size_t>(r) * cols + c];
          if (g.x() == 0.0 && g.y() == 0.0) continue;
          int i, j;
          double fy, fx;
          lattice->locate(r * st, c * st, i, j, fy, fx);
          double* n00 = ng + 2 * (i * lattice->node_cols + j);
          double* n10 = n00 + stride;
          const double w00 = (1 - fy) * (1 - fx), w01 = (1 - fy) * fx, w10 = fy * (1 - fx), w11 = fy * fx;
          n00[0] += w00 * g.x();
          n00[1] += w00 * g.y();
          n00[2] += w01 * g.x();
          n00[3] += w01 * g.y();
          n10[0] += w10 * g.x();
          n10[1] += w10 * g.y();
          n10[2] += w11 * g.x();
          n10[3] += w11 * g.y();
        }
      }
      const RowPoints gm = lattice->basis.transpose() * node_grad / scale;
      mesh_grad.resize(k);
      for (int i = 0; i < k; ++i) mesh_grad[i] = gm.row(i).transpose();
    }
    value += lambda * distortion_loss(mesh, width, height, mesh_grad, lambda);
    if (omega > 0.0) {
      value += omega * motion_consistency_loss(mesh - rigid, *prev_motion, cfg_.mu_spt, mesh_grad, omega);
    }
    if (grad) {
      grad->resize(2 * k);
      for (int i = 0; i < k; ++i) grad->segment<2>(2 * i) = mesh_grad[i];
    }
    return value;
  };

  MinimizeOptions mopts;
  mopts.max_iters = opts_.max_iters;
  mopts.rel_tol = opts_.rel_tol;
  const MinimizeResult fit = minimize(objective, x0, mopts);

  ControlGrid mesh(shape_);
  for (int i = 0; i < k; ++i) mesh[i] = fit.x.segment<2>(2 * i);
  if (!mesh.all_finite() || !is_fold_free(mesh)) {
    throw EstimationFailed("estimator: refined mesh folds (objective " + std::to_string(fit.value) + " after " +
                           std::to_string(fit.iterations) + " iterations)");
  }
  spdlog::debug("estimate: shift=({:.2f},{:.2f}) overlap={:.3f} objective {:.6g} -> {:.6g} in {} iters", shift.x(),
                shift.y(), overlap, fit.initial_value, fit.value, fit.iterations);

  EstimateReport report;
  report.motion = mesh - rigid;
  report.homography = h;
  report.initial_objective = fit.initial_value;
  report.final_objective = fit.value;
  report.iterations = fit.iterations;
  report.converged = fit.converged;
  report.trace = fit.trace;
  return report;
}

MotionField estimate_temporal(const Frame& prev, const Frame& cur, const GridShape& shape,
                              const WarpObjectiveConfig& cfg, const EstimatorOptions& opts) {
  return MotionEstimator(shape, cfg, opts).temporal(prev, cur).motion;
}

MotionField estimate_spatial(const Frame& ref, const Frame& tgt, const GridShape& shape,
                             const std::optional<MotionField>& prev_motion, const WarpObjectiveConfig& cfg,
                             const EstimatorOptions& opts) {
  return MotionEstimator(shape, cfg, opts).spatial(ref, tgt, prev_motion).motion;
}

Point coarse_translation(const Frame& ref, const Frame& tgt, const EstimatorOptions& opts) {
  opts.validate();
  if (ref.empty() || !ref.same_size(tgt)) throw InvalidArgument("coarse_translation: frames must share a size");
  const int level = opts.search_level;
  const auto pa = photometric_pyramid(ref, level + 1);
  const auto pm = photometric_pyramid(tgt, level + 1);
  return search_translation(pa[level], pm[level], level_scale(level), opts);
}

EstimateReport DirectProvider::spatial(int, const Frame& ref, const Frame& tgt,
                                       const std::optional<MotionField>& prev_motion) const {
  return estimator_.spatial(ref, tgt, prev_motion);
}

EstimateReport DirectProvider::temporal(int, const Frame& prev, const Frame& cur) const {
  return estimator_.temporal(prev, cur);
}

OracleProvider::OracleProvider(std::vector<MotionField> spatial, std::vector<MotionField> temporal)
    : spatial_(std::move(spatial)), temporal_(std::move(temporal)) {
  if (spatial_.empty()) throw InvalidArgument("oracle provider: no spatial motions");
  shape_ = spatial_.front().shape();
  for (const auto& m : spatial_) require_same_shape(m.shape(), shape_, "oracle spatial motion");
  for (const auto& m : temporal_) require_same_shape(m.shape(), shape_, "oracle temporal motion");
}

namespace {
EstimateReport oracle_report(const MotionField& m) {
  EstimateReport r;
  r.motion = m;
  r.converged = true;
  return r;
}
}  // namespace

EstimateReport OracleProvider::spatial(int t, const Frame&, const Frame&, const std::optional<MotionField>&) const {
  if (t < 0 || t >= static_cast<int>(spatial_.size())) {
    throw OutOfRange("oracle provider: no spatial motion for frame " + std::to_string(t));
  }
  return oracle_report(spatial_[t]);
}

EstimateReport OracleProvider::temporal(int t, const Frame&, const Frame&) const {
  if (t < 1 || t >= static_cast<int>(temporal_.size())) {
    throw OutOfRange("oracle provider: no temporal motion for frame " + std::to_string(t));
  }
  return oracle_report(temporal_[t]);
}

}  // namespace vstitch
