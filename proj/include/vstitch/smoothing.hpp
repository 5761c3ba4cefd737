#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "vstitch/grid.hpp"
#include "vstitch/trajectory.hpp"

namespace vstitch {

struct SmoothingConfig {
  int window = 7;
  double weight_data = 1.0;
  double weight_smooth = 50.0;
  double weight_space = 10.0;
  double weight_online = 0.1;
  double alpha = 10.0;
  std::vector<double> betas{0.9, 0.3, 0.1};
  int max_iters = 300;
  double tolerance = 1e-6;
  /// Replace the data and smoothness norms by their squares (mean squares).
  /// Makes the objective quadratic when weight_space == 0.
  bool squared_norms = false;

  /// Throws InvalidArgument: even or < 3 window, betas count != (N-1)/2,
  /// betas outside [0,1] or increasing, negative weights.
  void validate() const;
};

// Every norm below is the entry-count-normalized Euclidean norm
// sqrt(sum x^2 / n).

/// |(S_hat - S) * (alpha * OP + 1)|.
double data_term(const Trajectory& s_hat, const Trajectory& s, std::span<const OverlapMask> op, double alpha);

/// sum_j beta_j |S_hat(mid+j) + S_hat(mid-j) - 2 S_hat(mid)| with mid the
/// centre of an odd-length window and one beta per offset.
double smoothness_term(const Trajectory& s_hat, std::span<const double> betas);

/// Mean distortion of the window's meshes.
double space_term(std::span<const ControlGrid> meshes, double width, double height);

/// (1/(N-1)) sum_{t>=1} |prev(t) - cur(t-1)| (0-based), i.e. the previous
/// window's frames compared with the current window shifted by one.
double online_term(const Trajectory& cur, const Trajectory& prev);

/// One smoothing problem: the raw paths S, spatial meshes M^S and overlap
/// flags of a run of frames, plus the previously accepted window if any.
struct SmoothingWindow {
  Trajectory raw;
  std::vector<ControlGrid> meshes;
  std::vector<OverlapMask> overlap;
  std::optional<Trajectory> previous;
  double width = 0.0;
  double height = 0.0;
};

/// middle: one smoothness stencil at the window centre (online windows).
/// sliding: every full stencil in the run, averaged (whole-video runs).
enum class SmoothnessCenters { middle, sliding };

struct SmoothingTerms {
  double data = 0.0;
  double smoothness = 0.0;
  double space = 0.0;
  double online = 0.0;
  double total = 0.0;
};

/// Objective over the increment Delta, flattened as ((t * P + i) * 2 + axis).
class SmoothingObjective {
 public:
  SmoothingObjective(const SmoothingWindow& window, const SmoothingConfig& cfg,
                     SmoothnessCenters centers = SmoothnessCenters::middle);

  Eigen::Index dimension() const { return static_cast<Eigen::Index>(frames_) * points_ * 2; }
  double evaluate(const Eigen::VectorXd& delta, Eigen::VectorXd* grad = nullptr,
                  SmoothingTerms* terms = nullptr) const;

  struct SolveStats {
    int iterations = 0;
    bool converged = false;
  };
  /// Majorize-minimize from `delta` on the eps-smoothed objective, with eps
  /// shrinking geometrically. Every norm is bounded by a quadratic at the
  /// current iterate (reweighted least squares) and the distortion term by
  /// its linearization plus a proximal term, which leaves independent N x N
  /// systems per control point. `delta` ends at the best iterate seen.
  SolveStats minimize(Eigen::VectorXd& delta) const;

 private:
  /// Objective with every (unsquared) norm |r| replaced by sqrt(|r|^2 + eps^2).
  double evaluate_smoothed(const Eigen::VectorXd& delta, double eps, Eigen::VectorXd* grad,
                           SmoothingTerms* terms) const;

  const SmoothingWindow& win_;
  const SmoothingConfig& cfg_;
  int frames_;
  int points_;
  std::vector<int> centers_;
  Eigen::VectorXd raw_;
  Eigen::VectorXd data_weight_;
  Eigen::VectorXd prev_;
};

struct SmoothingResult {
  Trajectory delta;
  Trajectory smoothed;              ///< S_hat = S + Delta
  std::vector<ControlGrid> meshes;  ///< M_hat = M^S - Delta
  SmoothingTerms initial;
  SmoothingTerms final;
  int iterations = 0;
  bool converged = false;
};

/// Minimizes the weighted objective from Delta = 0. Never fails mid-stream:
/// on hitting max_iters the best iterate is returned with converged = false.
SmoothingResult smooth_window(const SmoothingWindow& window, const SmoothingConfig& cfg,
                              SmoothnessCenters centers = SmoothnessCenters::middle);

}  // namespace vstitch
