#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "vstitch/estimation.hpp"
#include "vstitch/grid.hpp"
#include "vstitch/image.hpp"
#include "vstitch/trajectory.hpp"

namespace vstitch {

enum class TextureKind { noise, checker_blobs };

/// Motion of one crop window. The base path is a constant drift plus a cubic
/// (Catmull-Rom) spline through `keyframes` random knots; shake is a
/// sinusoid with a seeded phase added on top.
struct StreamMotion {
  int keyframes = 4;
  double path_amplitude = 0.0;    // knots drawn from [-a, a]^2, px
  double shake_amplitude = 0.0;   // px
  double shake_frequency = 0.3;   // cycles per frame
  double max_rotation_deg = 0.0;  // at most 3
  double max_scale_delta = 0.0;   // scale within 1 +- delta, delta at most 0.03
  Point velocity = Point::Zero();  // px per frame
};

struct SceneSpec {
  int frame_height = 360;
  int frame_width = 480;
  int channels = 3;
  int frames = 30;
  TextureKind texture = TextureKind::noise;
  /// Shared fraction of the frame width between the two streams, in (0.2, 0.9).
  double overlap = 0.5;
  double margin = 32.0;
  /// Rig path shared by both cameras plus each camera's own motion.
  StreamMotion rig{4, 20.0};
  StreamMotion ref{};
  StreamMotion tgt{};
  /// Round crop positions to whole pixels. With no rotation or scale the
  /// frames are then exact copies of latent pixels.
  bool integer_positions = false;

  /// Throws InvalidSpec.
  void validate() const;
};

/// Crop window: frame pixel q shows latent point
/// position + c + scale * R(angle) (q - c), c the frame centre.
struct CropPose {
  Point position = Point::Zero();
  double angle = 0.0;  // radians
  double scale = 1.0;

  Point to_latent(const Point& q, double width, double height) const;
  Point from_latent(const Point& p, double width, double height) const;
};

struct GroundTruth {
  GridShape shape{};
  std::vector<ControlGrid> spatial;   // M^S(t): tgt rigid mesh in ref coordinates
  std::vector<ControlGrid> temporal;  // M^T(t): tgt rigid mesh at t in tgt(t-1) coordinates; rigid at t = 0
  Trajectory stitch;                  // S(t)
  std::vector<CropPose> ref_poses;
  std::vector<CropPose> tgt_poses;
};

struct Scene {
  Frame latent;
  std::vector<Frame> ref;
  std::vector<Frame> tgt;
  GroundTruth truth;
};

/// Deterministic for a given (spec, shape, seed).
Scene generate_scene(const SceneSpec& spec, const GridShape& shape, std::uint64_t seed);

Frame make_texture(int height, int width, int channels, TextureKind kind, std::uint64_t seed);

std::unique_ptr<MotionProvider> truth_provider(const GroundTruth& truth);

}  // namespace vstitch
