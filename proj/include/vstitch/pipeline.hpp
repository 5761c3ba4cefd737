#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "vstitch/estimation.hpp"
#include "vstitch/grid.hpp"
#include "vstitch/image.hpp"
#include "vstitch/smoothing.hpp"
#include "vstitch/trajectory.hpp"
#include "vstitch/warp.hpp"

namespace vstitch {

struct PipelineConfig {
  SmoothingConfig smoothing{};
  /// Off: every frame is rendered with its raw spatial mesh.
  bool smooth = true;
  int canvas_padding = 16;
  /// Spline evaluation spacing for rendering the target, see warp_frame.
  int render_node_step = 4;
  /// Fixed canvas; computed from the first spatial mesh when absent.
  std::optional<CanvasSpec> canvas;
  /// Off: meshes and paths only, no images.
  bool render = true;
  /// Keep the two canvas layers (placed reference, warped target) in the output.
  bool keep_layers = false;
  kernels::Exec exec = kernels::Exec::parallel;

  void validate() const;
};

/// Milliseconds per stage.
struct StageTimings {
  double spatial = 0.0;
  double temporal = 0.0;
  double trajectory = 0.0;
  double smoothing = 0.0;
  double warping = 0.0;
  double blending = 0.0;
  double total = 0.0;
};

struct StitchedFrame {
  int t = 0;
  Frame image;
  Frame ref_layer;  // only with keep_layers
  Frame tgt_layer;  // only with keep_layers
  ControlGrid raw_mesh;  // M^S(t)
  ControlGrid mesh;      // mesh the target was rendered with
  MotionField delta;     // mesh = raw_mesh - delta
  MotionField raw_path;  // S(t)
  MotionField path;      // S(t) + delta
  double spatial_objective = 0.0;
  double temporal_objective = 0.0;
  /// online_term between this window and the previous one, 0 without one.
  double online_discrepancy = 0.0;
  bool warmup = false;
  bool degraded = false;
  StageTimings timings;
};

/// Bounding box of the reference frame [0,W]x[0,H] and every mesh point,
/// padded by `padding` on each side. Throws InvalidArgument without meshes.
CanvasSpec compute_canvas(std::span<const ControlGrid> meshes, double width, double height, int padding = 16);

/// Mean where both masks are set, the single valid pixel where one is, and
/// zero with mask 0 elsewhere.
Frame blend_average(const Frame& ref_on_canvas, const Frame& warped_tgt);

/// Online stitcher with one frame of latency: push(t) returns the stitched
/// frame t-1, flush() the last one. Frame t is rendered from the window of
/// the N latest frames ending at t. The first N-1 frames are rendered with
/// their raw meshes and flagged as warm-up.
class OnlineStitcher {
 public:
  OnlineStitcher(const MotionProvider& provider, PipelineConfig cfg = {});

  std::optional<StitchedFrame> push(const Frame& ref, const Frame& tgt);
  std::optional<StitchedFrame> flush();

  int frames_seen() const { return static_cast<int>(spatial_.size()); }
  int degraded_count() const { return degraded_; }
  const std::optional<CanvasSpec>& canvas() const { return canvas_; }
  const Trajectory& raw_trajectory() const { return raw_; }
  const std::vector<ControlGrid>& spatial_meshes() const { return spatial_; }

 private:
  const MotionProvider& provider_;
  PipelineConfig cfg_;
  ControlGrid rigid_;
  int width_ = 0;
  int height_ = 0;
  int degraded_ = 0;
  std::optional<CanvasSpec> canvas_;

  std::optional<Frame> prev_tgt_;
  std::vector<ControlGrid> spatial_;
  std::vector<OverlapMask> overlap_;
  Trajectory raw_;
  std::optional<Trajectory> prev_window_;
  std::optional<StitchedFrame> pending_;
};

/// Whole-video smoothing: one solve over every frame with sliding
/// smoothness stencils and weights 0.9 * 0.5^(j-1), then every frame is
/// rendered. Needs at least 3 frames.
std::vector<StitchedFrame> stitch_offline(std::span<const Frame> ref, std::span<const Frame> tgt,
                                          const MotionProvider& provider, PipelineConfig cfg = {});

/// Runs an OnlineStitcher over two whole streams.
std::vector<StitchedFrame> stitch_online(std::span<const Frame> ref, std::span<const Frame> tgt,
                                         const MotionProvider& provider, const PipelineConfig& cfg = {});

}  // namespace vstitch
