#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "vstitch/grid.hpp"
#include "vstitch/homography.hpp"
#include "vstitch/image.hpp"
#include "vstitch/objectives.hpp"

namespace vstitch {

struct EstimatorOptions {
  int pyramid_levels = 3;
  /// Level of the translation search (0 = full resolution).
  int search_level = 1;
  int search_peaks = 8;
  /// Homography refinement runs from the coarsest level down to this one.
  int homography_min_level = 0;
  int homography_iters = 30;
  /// Mesh refinement level, pixel stride within it, and its stopping rule.
  int fine_level = 1;
  int fine_stride = 1;
  int max_iters = 200;
  double rel_tol = 1e-5;
  /// Minimum fraction of target pixels landing inside the reference.
  double min_overlap = 0.1;
  kernels::Exec exec = kernels::Exec::parallel;

  void validate() const;
};

struct EstimateReport {
  MotionField motion;
  Homography homography;
  /// Value of the refined objective at the homography mesh and at the result.
  double initial_objective = 0.0;
  double final_objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;
};

/// Direct minimizer of the warp objectives. Safe to share between threads.
///
/// Refinement measures the photometric term in the target frame, sampling
/// the anchor through the forward spline rigid -> mesh. That map is linear
/// in the mesh: it is cached as a basis on a 4 px node lattice, and pixel
/// coordinates are bilinear between nodes.
class MotionEstimator {
 public:
  MotionEstimator(GridShape shape, WarpObjectiveConfig cfg = {}, EstimatorOptions opts = {});
  ~MotionEstimator();
  MotionEstimator(MotionEstimator&&) noexcept;
  MotionEstimator& operator=(MotionEstimator&&) noexcept;

  const GridShape& shape() const { return shape_; }
  const WarpObjectiveConfig& config() const { return cfg_; }
  const EstimatorOptions& options() const { return opts_; }

  /// Motion of cur's rigid mesh into prev coordinates.
  EstimateReport temporal(const Frame& prev, const Frame& cur) const;
  /// Motion of tgt's rigid mesh into ref coordinates.
  EstimateReport spatial(const Frame& ref, const Frame& tgt,
                         const std::optional<MotionField>& prev_motion = std::nullopt) const;

 private:
  struct Cache;
  EstimateReport run(const Frame& anchor, const Frame& moving, double lambda,
                     const std::optional<MotionField>& prev_motion) const;

  GridShape shape_;
  WarpObjectiveConfig cfg_;
  EstimatorOptions opts_;
  std::unique_ptr<Cache> cache_;
};

MotionField estimate_temporal(const Frame& prev, const Frame& cur, const GridShape& shape,
                              const WarpObjectiveConfig& cfg = {}, const EstimatorOptions& opts = {});
MotionField estimate_spatial(const Frame& ref, const Frame& tgt, const GridShape& shape,
                             const std::optional<MotionField>& prev_motion = std::nullopt,
                             const WarpObjectiveConfig& cfg = {}, const EstimatorOptions& opts = {});

/// Translation d with ref(x + d) ~ tgt(x), from phase correlation of the
/// two frames at `opts.search_level`, disambiguated by mean absolute error.
/// Throws InsufficientOverlap when no candidate keeps min_overlap.
Point coarse_translation(const Frame& ref, const Frame& tgt, const EstimatorOptions& opts = {});

/// Source of per-frame motions for the pipeline. Frame indices start at 0;
/// temporal(t) relates frame t to frame t-1 and needs t >= 1.
class MotionProvider {
 public:
  virtual ~MotionProvider() = default;
  virtual GridShape shape() const = 0;
  virtual bool has_spatial() const { return true; }
  virtual bool has_temporal() const { return true; }
  virtual EstimateReport spatial(int t, const Frame& ref, const Frame& tgt,
                                 const std::optional<MotionField>& prev_motion) const = 0;
  virtual EstimateReport temporal(int t, const Frame& prev, const Frame& cur) const = 0;
};

class DirectProvider final : public MotionProvider {
 public:
  explicit DirectProvider(GridShape shape, WarpObjectiveConfig cfg = {}, EstimatorOptions opts = {})
      : estimator_(shape, cfg, opts) {}
  GridShape shape() const override { return estimator_.shape(); }
  EstimateReport spatial(int t, const Frame& ref, const Frame& tgt,
                         const std::optional<MotionField>& prev_motion) const override;
  EstimateReport temporal(int t, const Frame& prev, const Frame& cur) const override;

 private:
  MotionEstimator estimator_;
};

/// Replays known motions; temporal[0] is ignored. Throws OutOfRange for
/// frames it does not cover.
class OracleProvider final : public MotionProvider {
 public:
  OracleProvider(std::vector<MotionField> spatial, std::vector<MotionField> temporal);
  GridShape shape() const override { return shape_; }
  EstimateReport spatial(int t, const Frame& ref, const Frame& tgt,
                         const std::optional<MotionField>& prev_motion) const override;
  EstimateReport temporal(int t, const Frame& prev, const Frame& cur) const override;

 private:
  GridShape shape_;
  std::vector<MotionField> spatial_;
  std::vector<MotionField> temporal_;
};

}  // namespace vstitch
