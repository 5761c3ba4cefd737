#include "vstitch/pipeline.hpp"

#include <chrono>
#include <cmath>

#include <spdlog/spdlog.h>

#include "vstitch/error.hpp"

namespace vstitch {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

struct FrameEstimate {
  ControlGrid spatial;
  ControlGrid temporal;
  double spatial_objective = 0.0;
  double temporal_objective = 0.0;
  bool degraded = false;
  double spatial_ms = 0.0;
  double temporal_ms = 0.0;
};

// A failed estimate falls back to the previous spatial mesh (or the rigid
// mesh at t = 0) and to no temporal motion.
FrameEstimate estimate_frame(const MotionProvider& provider, int t, const Frame& ref, const Frame& tgt,
                             const Frame* prev_tgt, const ControlGrid* prev_spatial, const ControlGrid& rigid) {
  FrameEstimate e;
  auto start = Clock::now();
  std::optional<MotionField> prev_motion;
  if (prev_spatial) prev_motion = *prev_spatial - rigid;
  try {
    const auto r = provider.spatial(t, ref, tgt, prev_motion);
    e.spatial = rigid + r.motion;
    e.spatial_objective = r.final_objective;
  } catch (const Error& err) {
    spdlog::warn("frame {}: spatial estimation failed ({}); reusing the previous mesh", t, err.what());
    e.spatial = prev_spatial ? *prev_spatial : rigid;
    e.degraded = true;
  }
  e.spatial_ms = ms_since(start);

  start = Clock::now();
  e.temporal = rigid;
  if (prev_tgt) {
    try {
      const auto r = provider.temporal(t, *prev_tgt, tgt);
      e.temporal = rigid + r.motion;
      e.temporal_objective = r.final_objective;
    } catch (const Error& err) {
      spdlog::warn("frame {}: temporal estimation failed ({}); assuming no motion", t, err.what());
      e.degraded = true;
    }
  }
  e.temporal_ms = ms_since(start);
  return e;
}

void check_frames(const Frame& ref, const Frame& tgt) {
  if (ref.empty() || !ref.same_size(tgt) || ref.channels() != tgt.channels()) {
    throw InvalidArgument("reference and target frames must be non-empty and of equal size");
  }
}

void render(StitchedFrame& f, const ControlGrid& rigid, const Frame& ref, const Frame& tgt, const CanvasSpec& canvas,
            const PipelineConfig& cfg) {
  if (!cfg.render) return;
  auto start = Clock::now();
  Frame warped = warp_frame(rigid, f.mesh, tgt, canvas, cfg.exec, cfg.render_node_step);
  f.timings.warping = ms_since(start);
  start = Clock::now();
  Frame placed = place_on_canvas(ref, canvas, cfg.exec);
  f.image = blend_average(placed, warped);
  f.timings.blending = ms_since(start);
  if (cfg.keep_layers) {
    f.ref_layer = std::move(placed);
    f.tgt_layer = std::move(warped);
  }
}

}  // namespace

void PipelineConfig::validate() const {
  smoothing.validate();
  if (canvas_padding < 0) throw InvalidArgument("canvas padding must be non-negative");
  if (render_node_step < 1) throw InvalidArgument("render node step must be >= 1");
  if (canvas && (canvas->height <= 0 || canvas->width <= 0)) throw InvalidArgument("canvas must be non-empty");
}

CanvasSpec compute_canvas(std::span<const ControlGrid> meshes, double width, double height, int padding) {
  if (meshes.empty()) throw InvalidArgument("compute_canvas needs at least one mesh");
  Point lo(0.0, 0.0), hi(width, height);
  for (const auto& m : meshes) {
    for (const auto& p : m) {
      if (!p.allFinite()) throw InvalidArgument("compute_canvas: non-finite mesh point");
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
  }
  lo = lo.array().floor().matrix();
  hi = hi.array().ceil().matrix();
  CanvasSpec c;
  c.width = static_cast<int>(hi.x() - lo.x()) + 2 * padding;
  c.height = static_cast<int>(hi.y() - lo.y()) + 2 * padding;
  c.offset = Point::Constant(padding) - lo;
  return c;
}

Frame blend_average(const Frame& ref_on_canvas, const Frame& warped_tgt) {
  if (!ref_on_canvas.same_size(warped_tgt) || ref_on_canvas.channels() != warped_tgt.channels()) {
    throw InvalidArgument("blend_average: layers differ in size");
  }
  const int c = ref_on_canvas.channels();
  Frame out(ref_on_canvas.height(), ref_on_canvas.width(), c, 0.0, 0);
  const auto a = ref_on_canvas.pixels(), b = warped_tgt.pixels();
  const auto ma = ref_on_canvas.mask(), mb = warped_tgt.mask();
  auto o = out.pixels();
  auto mo = out.mask();
  for (std::size_t i = 0; i < out.pixel_count(); ++i) {
    const std::size_t k = i * c;
    if (ma[i] && mb[i]) {
      for (int ch = 0; ch < c; ++ch) o[k + ch] = 0.5 * (a[k + ch] + b[k + ch]);
    } else if (ma[i]) {
      for (int ch = 0; ch < c; ++ch) o[k + ch] = a[k + ch];
    } else if (mb[i]) {
      for (int ch = 0; ch < c; ++ch) o[k + ch] = b[k + ch];
    } else {
      continue;
    }
    mo[i] = 1;
  }
  return out;
}

OnlineStitcher::OnlineStitcher(const MotionProvider& provider, PipelineConfig cfg)
    : provider_(provider), cfg_(std::move(cfg)) {
  cfg_.validate();
  raw_ = Trajectory(provider_.shape());
}

std::optional<StitchedFrame> OnlineStitcher::push(const Frame& ref, const Frame& tgt) {
  check_frames(ref, tgt);
  if (spatial_.empty()) {
    height_ = ref.height();
    width_ = ref.width();
    rigid_ = rigid_mesh(provider_.shape(), width_, height_);
  } else if (ref.height() != height_ || ref.width() != width_) {
    throw InvalidArgument("frame size changed mid-stream");
  }
  const auto start = Clock::now();
  const int t = frames_seen();
  const GridShape shape = provider_.shape();

  StitchedFrame f;
  f.t = t;
  FrameEstimate e = estimate_frame(provider_, t, ref, tgt, prev_tgt_ ? &*prev_tgt_ : nullptr,
                                   spatial_.empty() ? nullptr : &spatial_.back(), rigid_);
  f.degraded = e.degraded;
  degraded_ += e.degraded;
  f.spatial_objective = e.spatial_objective;
  f.temporal_objective = e.temporal_objective;
  f.timings.spatial = e.spatial_ms;
  f.timings.temporal = e.temporal_ms;

  auto stage = Clock::now();
  if (t == 0) {
    raw_.push_back(MotionField(shape));
  } else {
    raw_.push_back(raw_.back() + stitch_motion(rigid_, spatial_.back(), e.spatial, e.temporal));
  }
  overlap_.push_back(overlap_mask(e.spatial, width_, height_));
  spatial_.push_back(std::move(e.spatial));
  f.timings.trajectory = ms_since(stage);

  stage = Clock::now();
  const int n = cfg_.smoothing.window;
  f.delta = MotionField(shape);
  if (cfg_.smooth && t + 1 >= n) {
    SmoothingWindow win;
    win.raw = raw_.slice(t - n + 1, n);
    win.meshes.assign(spatial_.end() - n, spatial_.end());
    win.overlap.assign(overlap_.end() - n, overlap_.end());
    win.previous = prev_window_;
    win.width = width_;
    win.height = height_;
    SmoothingResult res = smooth_window(win, cfg_.smoothing, SmoothnessCenters::middle);
    f.delta = res.delta[n - 1];
    if (prev_window_) f.online_discrepancy = online_term(res.smoothed, *prev_window_);
    prev_window_ = std::move(res.smoothed);
  } else {
    f.warmup = cfg_.smooth;
  }
  f.timings.smoothing = ms_since(stage);

  f.raw_mesh = spatial_.back();
  f.mesh = f.raw_mesh - f.delta;
  f.raw_path = raw_.back();
  f.path = f.raw_path + f.delta;
  if (!canvas_) {
    canvas_ = cfg_.canvas ? *cfg_.canvas : compute_canvas({&spatial_.front(), 1}, width_, height_, cfg_.canvas_padding);
  }
  render(f, rigid_, ref, tgt, *canvas_, cfg_);
  prev_tgt_ = tgt;
  f.timings.total = ms_since(start);

  std::optional<StitchedFrame> out = std::move(pending_);
  pending_ = std::move(f);
  return out;
}

std::optional<StitchedFrame> OnlineStitcher::flush() {
  std::optional<StitchedFrame> out = std::move(pending_);
  pending_.reset();
  return out;
}

std::vector<StitchedFrame> stitch_online(std::span<const Frame> ref, std::span<const Frame> tgt,
                                         const MotionProvider& provider, const PipelineConfig& cfg) {
  if (ref.size() != tgt.size()) throw InvalidArgument("streams differ in length");
  OnlineStitcher stitcher(provider, cfg);
  std::vector<StitchedFrame> out;
  for (std::size_t t = 0; t < ref.size(); ++t) {
    if (auto f = stitcher.push(ref[t], tgt[t])) out.push_back(std::move(*f));
  }
  if (auto f = stitcher.flush()) out.push_back(std::move(*f));
  return out;
}

std::vector<StitchedFrame> stitch_offline(std::span<const Frame> ref, std::span<const Frame> tgt,
                                          const MotionProvider& provider, PipelineConfig cfg) {
  cfg.validate();
  if (ref.size() != tgt.size()) throw InvalidArgument("streams differ in length");
  if (ref.size() < 3) throw InvalidArgument("offline stitching needs at least 3 frames");
  const int n = static_cast<int>(ref.size());
  for (int t = 0; t < n; ++t) check_frames(ref[t], tgt[t]);
  for (int t = 1; t < n; ++t) {
    if (!ref[t].same_size(ref[0])) throw InvalidArgument("frame size changed mid-stream");
  }
  const int height = ref[0].height(), width = ref[0].width();
  const GridShape shape = provider.shape();
  const ControlGrid rigid = rigid_mesh(shape, width, height);

  std::vector<StitchedFrame> frames(n);
  std::vector<ControlGrid> spatial;
  std::vector<OverlapMask> overlap;
  Trajectory raw(shape);
  for (int t = 0; t < n; ++t) {
    StitchedFrame& f = frames[t];
    f.t = t;
    FrameEstimate e = estimate_frame(provider, t, ref[t], tgt[t], t ? &tgt[t - 1] : nullptr,
                                     t ? &spatial.back() : nullptr, rigid);
    f.degraded = e.degraded;
    f.spatial_objective = e.spatial_objective;
    f.temporal_objective = e.temporal_objective;
    f.timings.spatial = e.spatial_ms;
    f.timings.temporal = e.temporal_ms;
    const auto stage = Clock::now();
    raw.push_back(t == 0 ? MotionField(shape) : raw.back() + stitch_motion(rigid, spatial.back(), e.spatial, e.temporal));
    overlap.push_back(overlap_mask(e.spatial, width, height));
    spatial.push_back(std::move(e.spatial));
    f.timings.trajectory = ms_since(stage);
  }

  std::vector<MotionField> deltas(n, MotionField(shape));
  if (cfg.smooth) {
    const auto stage = Clock::now();
    // The whole video is one window; stencil width follows N but never
    // exceeds the video.
    SmoothingConfig sc = cfg.smoothing;
    const int half = std::min((sc.window - 1) / 2, (n - 1) / 2);
    sc.window = 2 * half + 1;
    sc.betas.clear();
    for (int j = 1; j <= half; ++j) sc.betas.push_back(0.9 * std::pow(0.5, j - 1));
    SmoothingWindow win{raw, spatial, overlap, std::nullopt, static_cast<double>(width), static_cast<double>(height)};
    const SmoothingResult res = smooth_window(win, sc, SmoothnessCenters::sliding);
    for (int t = 0; t < n; ++t) deltas[t] = res.delta[t];
    const double per_frame = ms_since(stage) / n;
    for (auto& f : frames) f.timings.smoothing = per_frame;
  }

  const CanvasSpec canvas = cfg.canvas ? *cfg.canvas : compute_canvas(spatial, width, height, cfg.canvas_padding);
  for (int t = 0; t < n; ++t) {
    StitchedFrame& f = frames[t];
    f.delta = deltas[t];
    f.raw_mesh = spatial[t];
    f.mesh = f.raw_mesh - f.delta;
    f.raw_path = raw[t];
    f.path = f.raw_path + f.delta;
    render(f, rigid, ref[t], tgt[t], canvas, cfg);
    f.timings.total = f.timings.spatial + f.timings.temporal + f.timings.trajectory + f.timings.smoothing +
                      f.timings.warping + f.timings.blending;
  }
  return frames;
}

}  // namespace vstitch
