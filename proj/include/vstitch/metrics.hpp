#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "vstitch/grid.hpp"
#include "vstitch/image.hpp"
#include "vstitch/trajectory.hpp"

namespace vstitch {

inline constexpr double kPsnrCap = 99.0;

struct SsimOptions {
  int radius = 5;  // 11 x 11 window
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double range = 1.0;
};

/// PSNR over pixels valid in both frames, capped at kPsnrCap. Throws
/// UndefinedMetric when no pixel is shared.
double masked_psnr(const Frame& a, const Frame& b);

/// Mean SSIM over pixels valid in both frames. Window statistics use only
/// mutually valid pixels, with the Gaussian weights renormalized.
double masked_ssim(const Frame& a, const Frame& b, const SsimOptions& opts = {});

struct AlignmentScore {
  double psnr = 0.0;
  double ssim = 0.0;
  int frames = 0;  // frames that entered the average
};

/// Frames sharing less than `min_overlap` of their pixels are left out.
/// Throws UndefinedMetric when every frame is left out.
AlignmentScore alignment_score(std::span<const Frame> ref, std::span<const Frame> warped,
                               double min_overlap = 0.01);

/// Mean over videos of the largest per-frame distortion loss.
double distortion_score(std::span<const std::vector<ControlGrid>> videos, double width, double height);

/// Per video: smoothness term averaged over every window of 2 * betas + 1
/// consecutive positions; then the mean over videos. Videos that are too
/// short are skipped with a warning; throws UndefinedMetric if all are.
double stability_score(std::span<const Trajectory> videos, std::span<const double> betas);

struct MetricsReport {
  std::optional<AlignmentScore> alignment;
  std::optional<double> distortion;
  std::optional<double> stability;
};

/// key=value lines.
void write_metrics_text(std::ostream& out, const MetricsReport& report);
/// "# schema=metrics/1", then a metric,value header and one row per metric.
void write_metrics_csv(std::ostream& out, const MetricsReport& report);

}  // namespace vstitch
