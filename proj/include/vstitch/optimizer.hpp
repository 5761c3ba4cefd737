#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

namespace vstitch {

/// f(x), writing the gradient into *grad when grad != nullptr.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

struct MinimizeOptions {
  int max_iters = 200;
  /// Stop once (f_prev - f) / max(|f_prev|, 1e-12) drops below this.
  double rel_tol = 1e-5;
  int history = 8;
  double armijo = 1e-4;
  double contraction = 0.5;
  int max_backtracks = 50;
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double initial_value = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Objective after every accepted step, starting with the initial value.
  std::vector<double> trace;
};

/// Limited-memory BFGS with Armijo backtracking. Falls back to steepest
/// descent whenever the quasi-Newton direction is not a descent direction,
/// so every accepted step decreases f.
MinimizeResult minimize(const Objective& f, Eigen::VectorXd x0, const MinimizeOptions& opts = {});

}  // namespace vstitch
