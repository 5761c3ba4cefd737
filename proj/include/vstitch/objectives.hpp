#pragma once

#include <optional>
#include <span>

#include "vstitch/grid.hpp"
#include "vstitch/homography.hpp"
#include "vstitch/image.hpp"
#include "vstitch/kernels.hpp"

namespace vstitch {

struct WarpObjectiveConfig {
  double lambda_tmp = 5.0;
  double lambda_spt = 10.0;
  double mu_spt = 20.0;
  double omega_spt = 0.1;
  double omega_h = 0.01;

  void validate() const;
};

// Functions taking `grad` add weight * d(value)/d(mesh point) into it (when
// non-empty) and return the unweighted value.

/// Mean over the (U+1)V horizontal edges of relu(dx - 2W/V) plus mean over
/// the U(V+1) vertical edges of relu(dy - 2H/U).
double intra_grid_loss(const ControlGrid& mesh, double width, double height,
                       std::span<Point> grad = {}, double weight = 1.0);

/// Mean of 1 - cos over consecutive edge pairs along every mesh row and
/// column. A pair with a zero-length edge contributes 0.
double inter_grid_loss(const ControlGrid& mesh, std::span<Point> grad = {}, double weight = 1.0);

double distortion_loss(const ControlGrid& mesh, double width, double height,
                       std::span<Point> grad = {}, double weight = 1.0);

/// Mean over control points of relu(|m_t - m_prev| - mu); the gradient is
/// with respect to m_t.
double motion_consistency_loss(const MotionField& m_t, const MotionField& m_prev, double mu,
                               std::span<Point> grad = {}, double weight = 1.0);

/// Photometric term of the mesh warp. `mesh` is where the moving frame's
/// rigid mesh `moving_rigid` lands in anchor coordinates; the moving frame
/// is sampled through the backward spline mesh -> moving_rigid.
double tps_alignment_term(const Frame& anchor, const Frame& moving, const ControlGrid& mesh,
                          const ControlGrid& moving_rigid, std::span<Point> grad = {}, double weight = 1.0,
                          kernels::Exec exec = kernels::Exec::parallel);

/// Photometric term of a homography taking moving coordinates to anchor
/// coordinates.
double homography_alignment_term(const Frame& anchor, const Frame& moving, const Homography& h,
                                 kernels::Exec exec = kernels::Exec::parallel);

struct AlignmentTerms {
  double homography_forward = 0.0;
  double homography_inverse = 0.0;
  double tps = 0.0;
  double total = 0.0;
};

/// omega_h * (forward + inverse homography terms) + mesh term; every term
/// is a mean absolute difference normalized by channels and valid weight.
AlignmentTerms alignment_terms(const Frame& ref, const Frame& tgt, const Homography& h, const ControlGrid& mesh,
                               const WarpObjectiveConfig& cfg, kernels::Exec exec = kernels::Exec::parallel);
double alignment_loss(const Frame& ref, const Frame& tgt, const Homography& h, const ControlGrid& mesh,
                      const WarpObjectiveConfig& cfg, kernels::Exec exec = kernels::Exec::parallel);

/// alignment + lambda_tmp * distortion, at the resolution of the frames.
/// `grad`, when given, is overwritten with d/d(mesh).
double temporal_loss(const Frame& prev, const Frame& cur, const Homography& h, const ControlGrid& mesh,
                     const WarpObjectiveConfig& cfg, MotionField* grad = nullptr);

/// alignment + lambda_spt * distortion + omega_spt * consistency against
/// prev_motion (skipped when absent).
double spatial_loss(const Frame& ref, const Frame& tgt, const Homography& h, const ControlGrid& mesh,
                    const std::optional<MotionField>& prev_motion, const WarpObjectiveConfig& cfg,
                    MotionField* grad = nullptr);

}  // namespace vstitch
