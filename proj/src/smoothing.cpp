#include "vstitch/smoothing.hpp"

#include <cmath>

#include <Eigen/LU>

#include "vstitch/error.hpp"
#include "vstitch/objectives.hpp"

namespace vstitch {

void SmoothingConfig::validate() const {
  if (window < 3 || window % 2 == 0) throw InvalidArgument("smoothing window must be odd and >= 3");
  if (static_cast<int>(betas.size()) != (window - 1) / 2) {
    throw InvalidArgument("smoothing needs exactly (N-1)/2 betas");
  }
  for (std::size_t j = 0; j < betas.size(); ++j) {
    if (betas[j] < 0.0 || betas[j] > 1.0) throw InvalidArgument("betas must lie in [0,1]");
    if (j > 0 && betas[j] > betas[j - 1]) throw InvalidArgument("betas must be non-increasing");
  }
  if (weight_data < 0 || weight_smooth < 0 || weight_space < 0 || weight_online < 0 || alpha < 0) {
    throw InvalidArgument("smoothing weights must be non-negative");
  }
  if (max_iters < 1 || tolerance < 0) throw InvalidArgument("bad smoothing stopping rule");
}

namespace {

double rms(std::span<const Point> a) {
  double s = 0.0;
  for (const auto& p : a) s += p.squaredNorm();
  return std::sqrt(s / (2.0 * a.size()));
}

void check_window(const Trajectory& a, const Trajectory& b, const char* what) {
  require_same_shape(a.shape(), b.shape(), what);
  if (a.length() != b.length()) throw InvalidArgument(std::string(what) + ": window lengths differ");
}

}  // namespace

double data_term(const Trajectory& s_hat, const Trajectory& s, std::span<const OverlapMask> op, double alpha) {
  check_window(s_hat, s, "data_term");
  if (static_cast<int>(op.size()) != s.length()) throw InvalidArgument("data_term: overlap mask count mismatch");
  double sum = 0.0;
  std::size_t n = 0;
  for (int t = 0; t < s.length(); ++t) {
    require_same_shape(op[t].shape, s.shape(), "data_term");
    for (std::size_t i = 0; i < s[t].size(); ++i, n += 2) {
      const double w = alpha * op[t].flags[i] + 1.0;
      sum += ((s_hat[t][i] - s[t][i]) * w).squaredNorm();
    }
  }
  return n ? std::sqrt(sum / n) : 0.0;
}

double smoothness_term(const Trajectory& s_hat, std::span<const double> betas) {
  const int n = s_hat.length();
  if (n % 2 == 0) throw InvalidArgument("smoothness_term: window length must be odd");
  if (static_cast<int>(betas.size()) != (n - 1) / 2) throw InvalidArgument("smoothness_term: need (N-1)/2 betas");
  const int mid = (n - 1) / 2;
  double total = 0.0;
  for (int j = 1; j <= mid; ++j) {
    const MotionField d = s_hat[mid + j] + s_hat[mid - j] - s_hat[mid] - s_hat[mid];
    total += betas[j - 1] * rms(d.values());
  }
  return total;
}

double space_term(std::span<const ControlGrid> meshes, double width, double height) {
  if (meshes.empty()) return 0.0;
  double total = 0.0;
  for (const auto& m : meshes) total += distortion_loss(m, width, height);
  return total / meshes.size();
}

double online_term(const Trajectory& cur, const Trajectory& prev) {
  check_window(cur, prev, "online_term");
  const int n = cur.length();
  if (n < 2) return 0.0;
  double total = 0.0;
  for (int t = 1; t < n; ++t) total += rms((prev[t] - cur[t - 1]).values());
  return total / (n - 1);
}

SmoothingObjective::SmoothingObjective(const SmoothingWindow& window, const SmoothingConfig& cfg,
                                       SmoothnessCenters centers)
    : win_(window), cfg_(cfg), frames_(window.raw.length()), points_(window.raw.shape().points()) {
  cfg.validate();
  if (frames_ < 1) throw InvalidArgument("smoothing window is empty");
  if (static_cast<int>(window.meshes.size()) != frames_ || static_cast<int>(window.overlap.size()) != frames_) {
    throw InvalidArgument("smoothing window: meshes/overlap count mismatch");
  }
  const int half = (cfg.window - 1) / 2;
  if (centers == SmoothnessCenters::middle) {
    if (frames_ != cfg.window) throw InvalidArgument("smoothing window length differs from N");
    centers_.push_back(half);
  } else {
    for (int c = half; c + half < frames_; ++c) centers_.push_back(c);
  }

  raw_.resize(dimension());
  data_weight_.resize(dimension());
  for (int t = 0; t < frames_; ++t) {
    require_same_shape(window.meshes[t].shape(), window.raw.shape(), "smoothing window");
    require_same_shape(window.overlap[t].shape, window.raw.shape(), "smoothing window");
    for (int i = 0; i < points_; ++i) {
      const Eigen::Index k = (static_cast<Eigen::Index>(t) * points_ + i) * 2;
      raw_.segment<2>(k) = window.raw[t][i];
      data_weight_.segment<2>(k).setConstant(cfg.alpha * window.overlap[t].flags[i] + 1.0);
    }
  }
  if (window.previous && cfg.weight_online > 0.0) {
    check_window(*window.previous, window.raw, "online window");
    prev_.resize(dimension());
    for (int t = 0; t < frames_; ++t)
      for (int i = 0; i < points_; ++i) {
        prev_.segment<2>((static_cast<Eigen::Index>(t) * points_ + i) * 2) = (*window.previous)[t][i];
      }
  }
}

double SmoothingObjective::evaluate(const Eigen::VectorXd& delta, Eigen::VectorXd* grad,
                                    SmoothingTerms* terms) const {
  return evaluate_smoothed(delta, 0.0, grad, terms);
}

double SmoothingObjective::evaluate_smoothed(const Eigen::VectorXd& delta, double eps, Eigen::VectorXd* grad,
                                             SmoothingTerms* terms) const {
  const double eps2 = eps * eps;
  if (delta.size() != dimension()) throw InvalidArgument("smoothing objective: dimension mismatch");
  if (grad) grad->setZero(dimension());
  const Eigen::Index fsize = static_cast<Eigen::Index>(points_) * 2;
  const bool sq = cfg_.squared_norms;
  SmoothingTerms tm;

  // Norm of r (n entries) with weight w; gradient w.r.t. r is added through
  // `scatter`.
  auto norm_term = [&](const Eigen::VectorXd& r, double w, auto&& scatter) {
    const double n = static_cast<double>(r.size());
    const double ms = r.squaredNorm() / n;
    if (sq) {
      if (grad && w != 0.0) scatter((2.0 * w / n) * r);
      return ms;
    }
    const double v = std::sqrt(ms + eps2);
    if (grad && w != 0.0 && v > 0.0) scatter((w / (n * v)) * r);
    return v;
  };

  {
    const Eigen::VectorXd r = delta.cwiseProduct(data_weight_);
    tm.data = norm_term(r, cfg_.weight_data,
                        [&](const Eigen::VectorXd& g) { *grad += g.cwiseProduct(data_weight_); });
  }

  const Eigen::VectorXd s_hat = raw_ + delta;
  const double per_center = 1.0 / centers_.size();
  for (int c : centers_) {
    for (std::size_t j = 1; j <= cfg_.betas.size(); ++j) {
      const double beta = cfg_.betas[j - 1];
      if (beta == 0.0) continue;
      const auto a = s_hat.segment((c + j) * fsize, fsize);
      const auto b = s_hat.segment((c - j) * fsize, fsize);
      const auto m = s_hat.segment(c * fsize, fsize);
      const Eigen::VectorXd d = a + b - 2.0 * m;
      tm.smoothness += per_center * beta *
                       norm_term(d, cfg_.weight_smooth * per_center * beta, [&](const Eigen::VectorXd& g) {
                         grad->segment((c + j) * fsize, fsize) += g;
                         grad->segment((c - j) * fsize, fsize) += g;
                         grad->segment(c * fsize, fsize) -= 2.0 * g;
                       });
    }
  }

  std::vector<Point> mesh_grad(points_);
  for (int t = 0; t < frames_; ++t) {
    ControlGrid m = win_.meshes[t];
    for (int i = 0; i < points_; ++i) m[i] -= delta.segment<2>((static_cast<Eigen::Index>(t) * points_ + i) * 2);
    std::span<Point> gspan;
    if (grad && cfg_.weight_space != 0.0) {
      std::fill(mesh_grad.begin(), mesh_grad.end(), Point::Zero());
      gspan = mesh_grad;
    }
    tm.space += distortion_loss(m, win_.width, win_.height, gspan, cfg_.weight_space / frames_) / frames_;
    if (!gspan.empty()) {
      for (int i = 0; i < points_; ++i) {
        grad->segment<2>((static_cast<Eigen::Index>(t) * points_ + i) * 2) -= mesh_grad[i];
      }
    }
  }

  if (prev_.size() && frames_ > 1) {
    const double w = cfg_.weight_online / (frames_ - 1);
    for (int t = 1; t < frames_; ++t) {
      const Eigen::VectorXd d = prev_.segment(t * fsize, fsize) - s_hat.segment((t - 1) * fsize, fsize);
      const double n = static_cast<double>(fsize);
      const double v = std::sqrt(d.squaredNorm() / n + eps2);
      tm.online += v / (frames_ - 1);
      if (grad && v > 0.0) grad->segment((t - 1) * fsize, fsize) -= (w / (n * v)) * d;
    }
  }

  tm.total = cfg_.weight_data * tm.data + cfg_.weight_smooth * tm.smoothness + cfg_.weight_space * tm.space +
             cfg_.weight_online * tm.online;
  if (terms) *terms = tm;
  return tm.total;
}

SmoothingObjective::SolveStats SmoothingObjective::minimize(Eigen::VectorXd& delta) const {
  constexpr double kMinEps = 1e-9;
  const int n = frames_;
  const Eigen::Index fsize = static_cast<Eigen::Index>(points_) * 2;
  const bool sq = cfg_.squared_norms;
  const double npt = static_cast<double>(fsize);
  auto at = [&](int t, int i) { return (static_cast<Eigen::Index>(t) * points_ + i) * 2; };
  auto rms_of = [](const Eigen::VectorXd& r) { return std::sqrt(r.squaredNorm() / r.size()); };

  // Each smoothness stencil and online pair is a per-frame residual
  // r(t-indices) = sum_u coef_u * S_hat(frame_u); one norm over all points.
  struct Row {
    int frames[3];
    double coefs[3];
    int terms;
    double weight;
    bool squared;
  };
  std::vector<Row> rows;
  for (int c : centers_)
    for (std::size_t j = 1; j <= cfg_.betas.size(); ++j) {
      const double w = cfg_.weight_smooth * cfg_.betas[j - 1] / centers_.size();
      const int jj = static_cast<int>(j);
      if (w > 0.0) rows.push_back({{c - jj, c, c + jj}, {1.0, -2.0, 1.0}, 3, w, sq});
    }
  const std::size_t smooth_rows = rows.size();
  if (prev_.size() && cfg_.weight_online > 0.0 && n > 1) {
    // prev(t) - S_hat(t-1); the prev part enters as a constant.
    for (int t = 1; t < n; ++t) rows.push_back({{t - 1, 0, 0}, {-1.0, 0.0, 0.0}, 1, cfg_.weight_online / (n - 1), false});
  }
  const int m = static_cast<int>(rows.size());

  // Constant part of each row per point: raw stencil or prev - raw.
  std::vector<Eigen::MatrixX2d> row_const(m, Eigen::MatrixX2d(points_, 2));
  for (int q = 0; q < m; ++q) {
    const Row& r = rows[q];
    for (int i = 0; i < points_; ++i) {
      Eigen::Vector2d e = Eigen::Vector2d::Zero();
      for (int u = 0; u < r.terms; ++u) e += r.coefs[u] * raw_.segment<2>(at(r.frames[u], i));
      if (static_cast<std::size_t>(q) >= smooth_rows) e += prev_.segment<2>(at(r.frames[0] + 1, i));
      row_const[q].row(i) = e.transpose();
    }
  }

  const bool space = cfg_.weight_space > 0.0;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(delta.size());
  std::vector<Point> mesh_grad(points_);
  auto space_gradient = [&](const Eigen::VectorXd& x) {
    for (int t = 0; t < n; ++t) {
      ControlGrid mesh = win_.meshes[t];
      for (int i = 0; i < points_; ++i) mesh[i] -= x.segment<2>(at(t, i));
      std::fill(mesh_grad.begin(), mesh_grad.end(), Point::Zero());
      distortion_loss(mesh, win_.width, win_.height, mesh_grad, cfg_.weight_space / n);
      for (int i = 0; i < points_; ++i) grad.segment<2>(at(t, i)) = -mesh_grad[i];
    }
  };
  if (space) space_gradient(delta);

  double eps = sq ? 0.0 : 1.0;
  auto coeff = [&](double weight, double entries, double rms, bool squared) {
    return squared ? 2.0 * weight / entries : weight / (entries * std::sqrt(rms * rms + eps * eps));
  };

  SolveStats stats;
  double f = evaluate_smoothed(delta, eps, nullptr, nullptr);
  double best = evaluate(delta);
  Eigen::VectorXd best_delta = delta;
  double prox = space ? 1e-4 : 0.0;
  Eigen::VectorXd trial(delta.size());
  std::vector<double> k_row(m);
  // Reweighted problem per point, in saddle-point form so that large row
  // weights (norms near zero) do not destroy the conditioning:
  //   [H0  D] [x     ]   [b0]
  //   [D' -K^-1] [lambda] = [-e]
  Eigen::MatrixXd kkt(n + m, n + m);
  Eigen::MatrixX2d rhs(n + m, 2), sol(n + m, 2);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(n + m);

  for (int it = 0; it < cfg_.max_iters; ++it) {
    const Eigen::VectorXd s_hat = raw_ + delta;
    const double k_data = cfg_.weight_data > 0.0
                              ? coeff(cfg_.weight_data, static_cast<double>(delta.size()),
                                      rms_of(delta.cwiseProduct(data_weight_)), sq)
                              : 0.0;
    for (int q = 0; q < m; ++q) {
      const Row& r = rows[q];
      Eigen::VectorXd res = Eigen::VectorXd::Zero(fsize);
      for (int u = 0; u < r.terms; ++u) res += r.coefs[u] * s_hat.segment(r.frames[u] * fsize, fsize);
      if (static_cast<std::size_t>(q) >= smooth_rows) res += prev_.segment((r.frames[0] + 1) * fsize, fsize);
      k_row[q] = coeff(r.weight, npt, rms_of(res), r.squared);
    }

    bool accepted = false;
    for (int attempt = 0; attempt < 30 && !accepted; ++attempt) {
      for (int i = 0; i < points_; ++i) {
        kkt.setZero();
        rhs.setZero();
        for (int t = 0; t < n; ++t) {
          const double w = data_weight_(at(t, i));
          kkt(t, t) = k_data * w * w + prox + 1e-14;
          if (space) rhs.row(t) = (prox * delta.segment<2>(at(t, i)) - grad.segment<2>(at(t, i))).transpose();
        }
        for (int q = 0; q < m; ++q) {
          const Row& r = rows[q];
          for (int u = 0; u < r.terms; ++u) {
            kkt(r.frames[u], n + q) += r.coefs[u];
            kkt(n + q, r.frames[u]) += r.coefs[u];
          }
          kkt(n + q, n + q) = -1.0 / k_row[q];
          rhs.row(n + q) = -row_const[q].row(i);
        }
        lu.compute(kkt);
        sol = lu.solve(rhs);
        for (int t = 0; t < n; ++t) trial.segment<2>(at(t, i)) = sol.row(t).transpose();
      }
      const double f_trial = evaluate_smoothed(trial, eps, nullptr, nullptr);
      if (std::isfinite(f_trial) && f_trial <= f) {
        accepted = true;
      } else if (space) {
        prox = std::max(prox * 4.0, 1e-6);
      } else {
        break;
      }
    }

    stats.iterations = it + 1;
    if (accepted) {
      delta.swap(trial);
      if (space) prox = std::max(prox * 0.5, 1e-9);
    } else if (eps <= kMinEps) {
      stats.converged = true;
      break;
    }
    const double true_f = evaluate(delta);
    const double gain = (best - true_f) / std::max(std::abs(best), 1e-12);
    if (true_f < best) {
      best = true_f;
      best_delta = delta;
    }
    if (eps <= kMinEps && gain < cfg_.tolerance) {
      stats.converged = true;
      break;
    }
    eps = std::max(eps * 0.3, kMinEps);
    f = evaluate_smoothed(delta, eps, nullptr, nullptr);
    if (space && accepted) space_gradient(delta);
  }
  delta = best_delta;
  return stats;
}

SmoothingResult smooth_window(const SmoothingWindow& window, const SmoothingConfig& cfg,
                              SmoothnessCenters centers) {
  const SmoothingObjective obj(window, cfg, centers);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(obj.dimension());
  const auto stats = obj.minimize(x);

  SmoothingResult out;
  out.iterations = stats.iterations;
  out.converged = stats.converged;
  obj.evaluate(Eigen::VectorXd::Zero(obj.dimension()), nullptr, &out.initial);
  obj.evaluate(x, nullptr, &out.final);
  const GridShape& shape = window.raw.shape();
  const int p = shape.points();
  out.delta = Trajectory(shape);
  out.smoothed = Trajectory(shape);
  for (int t = 0; t < window.raw.length(); ++t) {
    MotionField d(shape);
    for (int i = 0; i < p; ++i) d[i] = x.segment<2>((static_cast<Eigen::Index>(t) * p + i) * 2);
    out.smoothed.push_back(window.raw[t] + d);
    out.meshes.push_back(window.meshes[t] - d);
    out.delta.push_back(std::move(d));
  }
  return out;
}

}  // namespace vstitch
