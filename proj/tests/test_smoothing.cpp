#include <gtest/gtest.h>

#include <random>

#include <Eigen/Dense>

#include "test_util.hpp"
#include "vstitch/error.hpp"
#include "vstitch/objectives.hpp"
#include "vstitch/smoothing.hpp"

using namespace vstitch;

namespace {

Trajectory make_traj(const GridShape& s, int n, auto&& fn) {
  Trajectory tr(s);
  for (int t = 0; t < n; ++t) {
    MotionField m(s);
    for (int i = 0; i < s.points(); ++i) m[i] = fn(t, i);
    tr.push_back(m);
  }
  return tr;
}

SmoothingWindow make_window(const Trajectory& raw, double w = 480, double h = 360) {
  SmoothingWindow win;
  win.raw = raw;
  win.width = w;
  win.height = h;
  for (int t = 0; t < raw.length(); ++t) {
    win.meshes.push_back(rigid_mesh(raw.shape(), w, h));
    win.overlap.push_back(overlap_mask(win.meshes.back(), w / 2, h));
  }
  return win;
}

std::vector<OverlapMask> masks(const GridShape& s, int n, std::uint8_t v) {
  return std::vector<OverlapMask>(n, OverlapMask{s, std::vector<std::uint8_t>(s.points(), v)});
}

Trajectory shaky(const GridShape& s, int n, double amp, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> d(0, 0.3);
  std::vector<double> base(n);
  for (auto& b : base) b = d(rng);
  return make_traj(s, n, [&](int t, int i) {
    const double sign = t % 2 ? 1.0 : -1.0;
    return Point(0.8 * t + sign * amp + base[t] + 0.01 * i, 0.3 * t - sign * amp * 0.5);
  });
}

}  // namespace

TEST(DataTerm, Examples) {
  const GridShape s{6, 8};
  const auto S = make_traj(s, 7, [](int, int) { return Point(3, 4); });
  EXPECT_EQ(data_term(S, S, masks(s, 7, 0), 10), 0.0);
  const auto S1 = make_traj(s, 7, [](int, int) { return Point(4, 5); });
  EXPECT_NEAR(data_term(S1, S, masks(s, 7, 0), 10), 1.0, 1e-12);
  EXPECT_NEAR(data_term(S1, S, masks(s, 7, 1), 10), 11.0, 1e-12);
}

TEST(SmoothnessTerm, Examples) {
  const GridShape s{6, 8};
  const std::vector<double> b{0.9, 0.3, 0.1};
  EXPECT_LT(smoothness_term(make_traj(s, 7, [](int t, int) { return Point(2.0 * t, -t); }), b), 1e-12);
  EXPECT_EQ(smoothness_term(make_traj(s, 7, [](int, int) { return Point(1, 1); }), b), 0.0);
  const auto spike = make_traj(s, 7, [](int t, int) { return t == 3 ? Point(1, 1) : Point(0, 0); });
  double brute = 0;
  for (int j = 1; j <= 3; ++j) {
    double sq = 0;
    for (int i = 0; i < s.points(); ++i) sq += (spike[3 + j][i] + spike[3 - j][i] - 2 * spike[3][i]).squaredNorm();
    brute += b[j - 1] * std::sqrt(sq / (2 * s.points()));
  }
  EXPECT_NEAR(smoothness_term(spike, b), brute, 1e-12);
  EXPECT_NEAR(brute, 2 * (0.9 + 0.3 + 0.1), 1e-12);
  EXPECT_THROW(smoothness_term(make_traj(s, 6, [](int, int) { return Point(0, 0); }), b), InvalidArgument);
}

TEST(SpaceTerm, Examples) {
  const GridShape s{6, 8};
  std::vector<ControlGrid> rig(3, rigid_mesh(s, 480, 360));
  EXPECT_EQ(space_term(rig, 480, 360), 0.0);
  for (auto& m : rig)
    for (auto& p : m) p = Eigen::Matrix2d{{1.1, 0.1}, {0, 0.9}} * p;
  EXPECT_LT(space_term(rig, 480, 360), 1e-12);
  std::vector<ControlGrid> rnd;
  double sum = 0;
  for (unsigned k = 0; k < 4; ++k) {
    rnd.push_back(vstitch::testing::jittered_mesh(s, 480, 360, 40, k));
    sum += distortion_loss(rnd.back(), 480, 360);
  }
  EXPECT_NEAR(space_term(rnd, 480, 360), sum / 4, 1e-12);
}

TEST(OnlineTerm, Examples) {
  const GridShape s{6, 8};
  const auto prev = make_traj(s, 7, [](int t, int i) { return Point(t * t, i); });
  const auto cur = make_traj(s, 7, [](int t, int i) { return Point((t + 1) * (t + 1), i); });
  EXPECT_LT(online_term(cur, prev), 1e-12);
  const auto off = make_traj(s, 7, [](int t, int i) { return Point((t + 1) * (t + 1) + 1, i + 1); });
  EXPECT_NEAR(online_term(off, prev), 1.0, 1e-12);
}

TEST(SmoothingConfig, Validation) {
  SmoothingConfig c;
  EXPECT_NO_THROW(c.validate());
  c.window = 6;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.betas = {0.1, 0.3, 0.9};
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = {};
  c.weight_space = -1;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(SmoothWindow, LinearPathIsStationary) {
  const GridShape s{6, 8};
  const auto S = make_traj(s, 7, [](int t, int i) { return Point(1.5 * t, -0.5 * t + 0.01 * i); });
  const auto r = smooth_window(make_window(S), {});
  double mx = 0;
  for (const auto& d : r.delta)
    for (const auto& p : d) mx = std::max(mx, p.cwiseAbs().maxCoeff());
  EXPECT_LT(mx, 1e-6);
}

TEST(SmoothWindow, RemovesShake) {
  const GridShape s{6, 8};
  const std::vector<double> b{0.9, 0.3, 0.1};
  for (unsigned seed = 0; seed < 3; ++seed) {
    const auto S = shaky(s, 7, 5.0, seed);
    const auto r = smooth_window(make_window(S), {});
    EXPECT_LT(smoothness_term(r.smoothed, b), 0.2 * smoothness_term(S, b));
    EXPECT_LE(r.final.total, r.initial.total);
  }
}

TEST(SmoothWindow, QuadraticFormMatchesNormalEquations) {
  const GridShape s{1, 1};
  const int n_frames = 7, p = s.points(), n = n_frames * p * 2;
  SmoothingConfig cfg;
  cfg.squared_norms = true;
  cfg.weight_space = 0.0;
  cfg.max_iters = 5000;
  cfg.tolerance = 1e-14;
  auto S = shaky(s, n_frames, 3.0, 7);
  auto win = make_window(S, 40, 40);
  win.overlap[2].flags[1] = 1;
  win.overlap[5].flags[3] = 1;
  const auto r = smooth_window(win, cfg);

  // Dense normal equations, assembled independently.
  Eigen::VectorXd sv(n), w(n);
  for (int t = 0; t < n_frames; ++t)
    for (int i = 0; i < p; ++i)
      for (int a = 0; a < 2; ++a) {
        sv((t * p + i) * 2 + a) = S[t][i][a];
        w((t * p + i) * 2 + a) = cfg.alpha * win.overlap[t].flags[i] + 1.0;
      }
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  h.diagonal() = 2.0 * cfg.weight_data / n * w.cwiseAbs2();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (int j = 1; j <= 3; ++j) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * p, n);
    for (int k = 0; k < 2 * p; ++k) {
      a(k, (3 + j) * 2 * p + k) += 1;
      a(k, (3 - j) * 2 * p + k) += 1;
      a(k, 3 * 2 * p + k) -= 2;
    }
    const double c = 2.0 * cfg.weight_smooth * cfg.betas[j - 1] / (2 * p);
    h += c * a.transpose() * a;
    rhs -= c * a.transpose() * (a * sv);
  }
  const Eigen::VectorXd x = h.ldlt().solve(rhs);
  for (int t = 0; t < n_frames; ++t)
    for (int i = 0; i < p; ++i)
      for (int a = 0; a < 2; ++a) EXPECT_NEAR(r.delta[t][i][a], x((t * p + i) * 2 + a), 1e-4);
}

TEST(SmoothWindow, GradientMatchesFiniteDifferences) {
  const GridShape s{6, 8};
  std::mt19937 rng(3);
  std::normal_distribution<double> d(0, 2);
  for (unsigned seed = 0; seed < 4; ++seed) {
    auto win = make_window(shaky(s, 7, 5.0, seed));
    for (int t = 0; t < 7; ++t) win.meshes[t] = vstitch::testing::jittered_mesh(s, 480, 360, 20, seed * 10 + t);
    win.previous = shaky(s, 7, 4.0, seed + 50);
    const SmoothingConfig cfg;
    const SmoothingObjective obj(win, cfg);
    Eigen::VectorXd x(obj.dimension());
    for (auto& v : x) v = d(rng);
    Eigen::VectorXd g;
    obj.evaluate(x, &g);
    Eigen::VectorXd fd(x.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      Eigen::VectorXd xp = x, xm = x;
      xp(k) += 1e-4;
      xm(k) -= 1e-4;
      fd(k) = (obj.evaluate(xp) - obj.evaluate(xm)) / 2e-4;
    }
    EXPECT_LT((g - fd).norm() / fd.norm(), 1e-4);
  }
}

TEST(SmoothWindow, DataOnlyKeepsPaths) {
  const GridShape s{6, 8};
  SmoothingConfig cfg;
  cfg.weight_smooth = 0;
  cfg.weight_space = 0;
  const auto r = smooth_window(make_window(shaky(s, 7, 5.0, 1)), cfg);
  for (const auto& d : r.delta)
    for (const auto& p : d) EXPECT_LT(p.norm(), 1e-8);
}

TEST(SmoothWindow, OffsetEquivarianceAndBookkeeping) {
  const GridShape s{6, 8};
  const auto S = shaky(s, 7, 5.0, 2);
  Trajectory S2(s);
  for (const auto& f : S) {
    MotionField m = f;
    for (auto& p : m) p += Point(17.25, -3.5);
    S2.push_back(m);
  }
  const auto w1 = make_window(S), w2 = make_window(S2);
  const auto r1 = smooth_window(w1, {});
  const auto r2 = smooth_window(w2, {});
  for (int t = 0; t < 7; ++t)
    for (int i = 0; i < s.points(); ++i) {
      EXPECT_LT((r1.delta[t][i] - r2.delta[t][i]).norm(), 1e-8);
      EXPECT_LT((r2.smoothed[t][i] - r1.smoothed[t][i] - Point(17.25, -3.5)).norm(), 1e-8);
      EXPECT_LT((r1.meshes[t][i] + r1.delta[t][i] - w1.meshes[t][i]).norm(), 1e-12);
    }
}

TEST(SmoothWindow, SlidingCentersSmoothWholeRun) {
  const GridShape s{6, 8};
  const auto S = shaky(s, 21, 5.0, 4);
  const auto r = smooth_window(make_window(S), {}, SmoothnessCenters::sliding);
  const std::vector<double> b{0.9, 0.3, 0.1};
  for (int c = 0; c + 7 <= 21; ++c) {
    EXPECT_LT(smoothness_term(r.smoothed.slice(c, 7), b), 0.2 * smoothness_term(S.slice(c, 7), b));
  }
}
