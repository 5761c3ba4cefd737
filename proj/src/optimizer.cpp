#include "vstitch/optimizer.hpp"

#include <cmath>
#include <deque>

#include "vstitch/error.hpp"

namespace vstitch {

namespace {

struct Pair {
  Eigen::VectorXd s;
  Eigen::VectorXd y;
  double rho;
};

Eigen::VectorXd two_loop(const std::deque<Pair>& mem, const Eigen::VectorXd& g) {
  Eigen::VectorXd q = g;
  std::vector<double> alpha(mem.size());
  for (int i = static_cast<int>(mem.size()) - 1; i >= 0; --i) {
    alpha[i] = mem[i].rho * mem[i].s.dot(q);
    q -= alpha[i] * mem[i].y;
  }
  const auto& last = mem.back();
  q *= last.s.dot(last.y) / last.y.squaredNorm();
  for (std::size_t i = 0; i < mem.size(); ++i) {
    const double beta = mem[i].rho * mem[i].y.dot(q);
    q += (alpha[i] - beta) * mem[i].s;
  }
  return -q;
}

}  // namespace

MinimizeResult minimize(const Objective& f, Eigen::VectorXd x0, const MinimizeOptions& opts) {
  MinimizeResult res;
  Eigen::VectorXd g(x0.size());
  double fx = f(x0, &g);
  if (!std::isfinite(fx)) throw EstimationFailed("objective is not finite at the starting point");
  res.initial_value = fx;
  res.trace.push_back(fx);

  std::deque<Pair> mem;
  Eigen::VectorXd x = std::move(x0);
  Eigen::VectorXd xn(x.size()), gn(x.size());
  for (int it = 0; it < opts.max_iters; ++it) {
    const double gnorm = g.lpNorm<Eigen::Infinity>();
    if (gnorm == 0.0) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd d;
    double step = 1.0;
    if (!mem.empty()) d = two_loop(mem, g);
    if (mem.empty() || d.dot(g) >= 0.0) {
      mem.clear();
      d = -g;
      step = 1.0 / std::max(1.0, gnorm);
    }
    const double slope = d.dot(g);

    bool accepted = false;
    double fn = fx;
    for (int bt = 0; bt < opts.max_backtracks; ++bt, step *= opts.contraction) {
      xn = x + step * d;
      fn = f(xn, &gn);
      if (std::isfinite(fn) && fn <= fx + opts.armijo * step * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No decrease along a descent direction: numerically stationary.
      res.converged = true;
      break;
    }

    Pair p{xn - x, gn - g, 0.0};
    const double sy = p.s.dot(p.y);
    if (sy > 1e-12 * p.s.norm() * p.y.norm()) {
      p.rho = 1.0 / sy;
      mem.push_back(std::move(p));
      if (static_cast<int>(mem.size()) > opts.history) mem.pop_front();
    }

    const double prev = fx;
    x.swap(xn);
    g.swap(gn);
    fx = fn;
    res.trace.push_back(fx);
    res.iterations = it + 1;
    if ((prev - fx) / std::max(std::abs(prev), 1e-12) < opts.rel_tol) {
      res.converged = true;
      break;
    }
  }
  res.x = std::move(x);
  res.value = fx;
  return res;
}

}  // namespace vstitch
