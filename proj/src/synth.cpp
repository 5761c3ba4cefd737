#include "vstitch/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "vstitch/error.hpp"

namespace vstitch {

namespace {

constexpr double kMaxRotationDeg = 3.0;
constexpr double kMaxScaleDelta = 0.03;
constexpr int kMaxLatentSide = 20000;

void validate_motion(const StreamMotion& m, const char* name) {
  const std::string who(name);
  if (m.keyframes < 1) throw InvalidSpec(who + ": keyframes must be >= 1");
  if (!m.velocity.allFinite()) throw InvalidSpec(who + ": velocity must be finite");
  if (!(m.path_amplitude >= 0.0) || !(m.shake_amplitude >= 0.0) || !(m.shake_frequency >= 0.0)) {
    throw InvalidSpec(who + ": amplitudes and frequency must be non-negative");
  }
  if (!(m.max_rotation_deg >= 0.0 && m.max_rotation_deg <= kMaxRotationDeg)) {
    throw InvalidSpec(who + ": rotation must lie in [0, 3] degrees");
  }
  if (!(m.max_scale_delta >= 0.0 && m.max_scale_delta <= kMaxScaleDelta)) {
    throw InvalidSpec(who + ": scale delta must lie in [0, 0.03]");
  }
}

double catmull_rom(double p0, double p1, double p2, double p3, double u) {
  const double u2 = u * u, u3 = u2 * u;
  return 0.5 * (2 * p1 + (-p0 + p2) * u + (2 * p0 - 5 * p1 + 4 * p2 - p3) * u2 + (-p0 + 3 * p1 - 3 * p2 + p3) * u3);
}

// Spline through knots spread evenly over frames [0, frames-1].
class KnotSpline {
 public:
  KnotSpline(std::vector<double> knots, int frames) : knots_(std::move(knots)), frames_(frames) {}

  double operator()(int t) const {
    const int k = static_cast<int>(knots_.size());
    if (k == 1 || frames_ <= 1) return knots_.front();
    const double x = static_cast<double>(t) * (k - 1) / (frames_ - 1);
    const int seg = std::min(static_cast<int>(x), k - 2);
    const double u = x - seg;
    const auto at = [&](int i) { return knots_[std::clamp(i, 0, k - 1)]; };
    return catmull_rom(at(seg - 1), at(seg), at(seg + 1), at(seg + 2), u);
  }

 private:
  std::vector<double> knots_;
  int frames_;
};

struct StreamSampler {
  KnotSpline x, y, angle, scale;
  double shake_amp, shake_freq, phase_x, phase_y;
  Point velocity;

  StreamSampler(const StreamMotion& m, int frames, std::mt19937_64& rng)
      : x(knots(m.keyframes, m.path_amplitude, rng), frames),
        y(knots(m.keyframes, m.path_amplitude, rng), frames),
        angle(knots(m.keyframes, m.max_rotation_deg * M_PI / 180.0, rng), frames),
        scale(knots(m.keyframes, m.max_scale_delta, rng), frames),
        shake_amp(m.shake_amplitude),
        shake_freq(m.shake_frequency),
        velocity(m.velocity) {
    std::uniform_real_distribution<double> phase(0.0, 2 * M_PI);
    phase_x = phase(rng);
    phase_y = phase(rng);
  }

  static std::vector<double> knots(int count, double amplitude, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    std::vector<double> out(count);
    for (auto& v : out) v = amplitude * d(rng);
    return out;
  }

  Point offset(int t) const {
    const double w = 2 * M_PI * shake_freq * t;
    return velocity * t + Point(x(t) + shake_amp * std::sin(w + phase_x), y(t) + shake_amp * std::sin(w + phase_y));
  }
};

Frame render(const Frame& latent, const CropPose& pose, int height, int width) {
  Frame out(height, width, latent.channels());
  const int lw = latent.width(), lh = latent.height();
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const Point p = pose.to_latent(Point(x, y), width, height);
      const int x0 = std::clamp(static_cast<int>(std::floor(p.x())), 0, lw - 2);
      const int y0 = std::clamp(static_cast<int>(std::floor(p.y())), 0, lh - 2);
      const double fx = p.x() - x0, fy = p.y() - y0;
      for (int c = 0; c < latent.channels(); ++c) {
        out(y, x, c) = (1 - fy) * ((1 - fx) * latent(y0, x0, c) + fx * latent(y0, x0 + 1, c)) +
                       fy * ((1 - fx) * latent(y0 + 1, x0, c) + fx * latent(y0 + 1, x0 + 1, c));
      }
    }
  }
  return out;
}

}  // namespace

void SceneSpec::validate() const {
  if (frame_height < 8 || frame_width < 8) throw InvalidSpec("frame size must be at least 8x8");
  if (channels < 1) throw InvalidSpec("channels must be >= 1");
  if (frames < 1) throw InvalidSpec("frames must be >= 1");
  if (!(overlap > 0.2 && overlap < 0.9)) throw InvalidSpec("overlap must lie in (0.2, 0.9)");
  if (!(margin >= 2.0)) throw InvalidSpec("margin must be >= 2 px");
  validate_motion(rig, "rig");
  validate_motion(ref, "ref");
  validate_motion(tgt, "tgt");
}

Point CropPose::to_latent(const Point& q, double width, double height) const {
  const Point c(0.5 * width, 0.5 * height);
  const double cs = std::cos(angle), sn = std::sin(angle);
  const Point d = q - c;
  return position + c + scale * Point(cs * d.x() - sn * d.y(), sn * d.x() + cs * d.y());
}

Point CropPose::from_latent(const Point& p, double width, double height) const {
  const Point c(0.5 * width, 0.5 * height);
  const double cs = std::cos(angle), sn = std::sin(angle);
  const Point d = (p - position - c) / scale;
  return c + Point(cs * d.x() + sn * d.y(), -sn * d.x() + cs * d.y());
}

Frame make_texture(int height, int width, int channels, TextureKind kind, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Frame img(height, width, channels);
  if (kind == TextureKind::noise) {
    std::uniform_real_distribution<double> d(0.0, 1.0);
    for (auto& v : img.pixels()) v = d(rng);
    img = gaussian_blur(img, 2.0);
    for (auto& v : img.pixels()) v = std::clamp(0.5 + 6.0 * (v - 0.5), 0.0, 1.0);
    return img;
  }
  constexpr int kPeriod = 24;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double v = ((x / kPeriod + y / kPeriod) % 2) ? 0.65 : 0.35;
      for (int c = 0; c < channels; ++c) img(y, x, c) = v;
    }
  }
  std::uniform_real_distribution<double> ux(0.0, width), uy(0.0, height), radius(5.0, 25.0), amp(-0.3, 0.3);
  const int blobs = std::max(8, width * height / 4000);
  for (int b = 0; b < blobs; ++b) {
    const double cx = ux(rng), cy = uy(rng), r = radius(rng);
    double a[8];
    for (int c = 0; c < channels; ++c) a[std::min(c, 7)] = amp(rng);
    const int x0 = std::max(0, static_cast<int>(cx - 3 * r)), x1 = std::min(width - 1, static_cast<int>(cx + 3 * r));
    const int y0 = std::max(0, static_cast<int>(cy - 3 * r)), y1 = std::min(height - 1, static_cast<int>(cy + 3 * r));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double g = std::exp(-0.5 * ((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (r * r));
        for (int c = 0; c < channels; ++c) img(y, x, c) += a[std::min(c, 7)] * g;
      }
    }
  }
  img = gaussian_blur(img, 2.0);
  for (auto& v : img.pixels()) v = std::clamp(v, 0.0, 1.0);
  return img;
}

Scene generate_scene(const SceneSpec& spec, const GridShape& shape, std::uint64_t seed) {
  spec.validate();
  shape.validate();
  const int n = spec.frames;
  const double w = spec.frame_width, h = spec.frame_height;

  std::mt19937_64 rng(seed);
  const StreamSampler rig(spec.rig, n, rng);
  const StreamSampler ref(spec.ref, n, rng);
  const StreamSampler tgt(spec.tgt, n, rng);
  const std::uint64_t texture_seed = rng();

  const Point baseline((1.0 - spec.overlap) * w, 0.0);
  std::vector<CropPose> ref_poses(n), tgt_poses(n);
  for (int t = 0; t < n; ++t) {
    const Point base = rig.offset(t);
    ref_poses[t] = {base + ref.offset(t), rig.angle(t) + ref.angle(t), 1.0 + ref.scale(t)};
    tgt_poses[t] = {base + baseline + tgt.offset(t), rig.angle(t) + tgt.angle(t), 1.0 + tgt.scale(t)};
    if (spec.integer_positions) {
      ref_poses[t].position = ref_poses[t].position.array().round().matrix();
      tgt_poses[t].position = tgt_poses[t].position.array().round().matrix();
    }
  }

  // Latent canvas: bounding box of every crop corner plus the margin.
  Point lo = Point::Constant(std::numeric_limits<double>::infinity()), hi = -lo;
  for (const auto* poses : {&ref_poses, &tgt_poses}) {
    for (const auto& pose : *poses) {
      for (const Point& q : {Point(0, 0), Point(w - 1, 0), Point(0, h - 1), Point(w - 1, h - 1)}) {
        const Point p = pose.to_latent(q, w, h);
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
      }
    }
  }
  const Point shift = (Point::Constant(spec.margin) - lo).array().round().matrix();
  const Point extent = hi - lo + Point::Constant(2 * spec.margin + 2);
  if (!extent.allFinite() || extent.maxCoeff() > kMaxLatentSide) {
    throw InvalidSpec("scene paths leave the supported latent image size");
  }
  for (auto& pose : ref_poses) pose.position += shift;
  for (auto& pose : tgt_poses) pose.position += shift;

  Scene scene;
  scene.latent = make_texture(static_cast<int>(std::ceil(extent.y())), static_cast<int>(std::ceil(extent.x())),
                              spec.channels, spec.texture, texture_seed);
  const Frame& latent = scene.latent;
  for (const auto* poses : {&ref_poses, &tgt_poses}) {
    for (const auto& pose : *poses) {
      for (const Point& q : {Point(0, 0), Point(w - 1, 0), Point(0, h - 1), Point(w - 1, h - 1)}) {
        const Point p = pose.to_latent(q, w, h);
        if (p.x() < 0 || p.y() < 0 || p.x() > latent.width() - 1 || p.y() > latent.height() - 1) {
          throw InvalidSpec("crop escapes the latent image");
        }
      }
    }
  }

  scene.ref.reserve(n);
  scene.tgt.reserve(n);
  for (int t = 0; t < n; ++t) {
    scene.ref.push_back(render(latent, ref_poses[t], spec.frame_height, spec.frame_width));
    scene.tgt.push_back(render(latent, tgt_poses[t], spec.frame_height, spec.frame_width));
  }

  GroundTruth& gt = scene.truth;
  gt.shape = shape;
  const ControlGrid rigid = rigid_mesh(shape, w, h);
  std::vector<MotionField> stitch(n, MotionField(shape));
  for (int t = 0; t < n; ++t) {
    ControlGrid ms(shape), mt(shape);
    for (std::size_t i = 0; i < rigid.size(); ++i) {
      const Point p = tgt_poses[t].to_latent(rigid[i], w, h);
      ms[i] = ref_poses[t].from_latent(p, w, h);
      mt[i] = t == 0 ? rigid[i] : tgt_poses[t - 1].from_latent(p, w, h);
    }
    gt.spatial.push_back(std::move(ms));
    gt.temporal.push_back(std::move(mt));
    if (t > 0) stitch[t] = stitch_motion(rigid, gt.spatial[t - 1], gt.spatial[t], gt.temporal[t]);
  }
  gt.stitch = stitch_trajectory(stitch);
  gt.ref_poses = std::move(ref_poses);
  gt.tgt_poses = std::move(tgt_poses);
  return scene;
}

std::unique_ptr<MotionProvider> truth_provider(const GroundTruth& truth) {
  if (truth.temporal.empty()) throw InvalidArgument("ground truth holds no frames");
  // M^T(0) is the rigid mesh by construction.
  const ControlGrid& rigid = truth.temporal.front();
  std::vector<MotionField> spatial, temporal;
  for (const auto& m : truth.spatial) spatial.push_back(m - rigid);
  for (const auto& m : truth.temporal) temporal.push_back(m - rigid);
  return std::make_unique<OracleProvider>(std::move(spatial), std::move(temporal));
}

}  // namespace vstitch
