#include "vstitch/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <spdlog/spdlog.h>

#include "parallel.hpp"
#include "vstitch/error.hpp"
#include "vstitch/objectives.hpp"
#include "vstitch/smoothing.hpp"

namespace vstitch {

namespace {

using detail::for_rows;
constexpr auto kExec = kernels::Exec::parallel;

void require_pair(const Frame& a, const Frame& b) {
  if (!a.same_size(b) || a.channels() != b.channels()) {
    throw InvalidArgument("metric inputs differ in size or channel count");
  }
}

std::size_t shared_pixels(const Frame& a, const Frame& b) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.pixel_count(); ++i) n += a.mask()[i] && b.mask()[i];
  return n;
}

// Zero-padded separable convolution of several planes at once.
void filter_planes(std::vector<std::vector<double>>& planes, int h, int w, std::span<const double> taps) {
  const int r = static_cast<int>(taps.size()) / 2;
  std::vector<double> tmp(static_cast<std::size_t>(h) * w);
  for (auto& plane : planes) {
    for_rows(h, kExec, [&](int y) {
      const double* in = plane.data() + static_cast<std::size_t>(y) * w;
      double* out = tmp.data() + static_cast<std::size_t>(y) * w;
      for (int x = 0; x < w; ++x) {
        double s = 0.0;
        for (int k = std::max(-r, -x); k <= std::min(r, w - 1 - x); ++k) s += taps[k + r] * in[x + k];
        out[x] = s;
      }
    });
    for_rows(h, kExec, [&](int y) {
      double* out = plane.data() + static_cast<std::size_t>(y) * w;
      std::fill(out, out + w, 0.0);
      for (int k = std::max(-r, -y); k <= std::min(r, h - 1 - y); ++k) {
        const double t = taps[k + r];
        const double* in = tmp.data() + static_cast<std::size_t>(y + k) * w;
        for (int x = 0; x < w; ++x) out[x] += t * in[x];
      }
    });
  }
}

}  // namespace

double masked_psnr(const Frame& a, const Frame& b) {
  require_pair(a, b);
  const int c = a.channels(), h = a.height(), w = a.width();
  std::vector<double> row_sum(h, 0.0);
  std::vector<std::size_t> row_n(h, 0);
  for_rows(h, kExec, [&](int y) {
    for (int x = 0; x < w; ++x) {
      if (!a.valid(y, x) || !b.valid(y, x)) continue;
      ++row_n[y];
      for (int k = 0; k < c; ++k) {
        const double d = a(y, x, k) - b(y, x, k);
        row_sum[y] += d * d;
      }
    }
  });
  const std::size_t n = std::accumulate(row_n.begin(), row_n.end(), std::size_t{0});
  if (n == 0) throw UndefinedMetric("PSNR needs at least one shared pixel");
  const double mse = std::accumulate(row_sum.begin(), row_sum.end(), 0.0) / (static_cast<double>(n) * c);
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double masked_ssim(const Frame& a, const Frame& b, const SsimOptions& opts) {
  require_pair(a, b);
  if (opts.radius < 0 || !(opts.sigma > 0.0) || !(opts.range > 0.0)) throw InvalidArgument("bad SSIM options");
  const int c = a.channels(), h = a.height(), w = a.width();
  const std::size_t n = a.pixel_count();
  std::vector<double> taps(2 * opts.radius + 1);
  for (int k = -opts.radius; k <= opts.radius; ++k) {
    taps[k + opts.radius] = std::exp(-0.5 * k * k / (opts.sigma * opts.sigma));
  }
  const double c1 = std::pow(opts.k1 * opts.range, 2), c2 = std::pow(opts.k2 * opts.range, 2);

  std::vector<std::uint8_t> mask(n);
  for (std::size_t i = 0; i < n; ++i) mask[i] = a.mask()[i] && b.mask()[i];
  const std::size_t count = std::count(mask.begin(), mask.end(), std::uint8_t{1});
  if (count == 0) throw UndefinedMetric("SSIM needs at least one shared pixel");

  std::vector<double> row_sum(h, 0.0);
  for (int k = 0; k < c; ++k) {
    // m, m x, m y, m x^2, m y^2, m x y
    std::vector<std::vector<double>> planes(6, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      if (!mask[i]) continue;
      const double x = a.pixels()[i * c + k], y = b.pixels()[i * c + k];
      planes[0][i] = 1.0;
      planes[1][i] = x;
      planes[2][i] = y;
      planes[3][i] = x * x;
      planes[4][i] = y * y;
      planes[5][i] = x * y;
    }
    filter_planes(planes, h, w, taps);
    for_rows(h, kExec, [&](int y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        if (!mask[i]) continue;
        const double wsum = planes[0][i];
        const double mx = planes[1][i] / wsum, my = planes[2][i] / wsum;
        const double vx = planes[3][i] / wsum - mx * mx, vy = planes[4][i] / wsum - my * my;
        const double cxy = planes[5][i] / wsum - mx * my;
        row_sum[y] += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      }
    });
  }
  return std::accumulate(row_sum.begin(), row_sum.end(), 0.0) / (static_cast<double>(count) * c);
}

AlignmentScore alignment_score(std::span<const Frame> ref, std::span<const Frame> warped, double min_overlap) {
  if (ref.size() != warped.size()) throw InvalidArgument("alignment_score: frame counts differ");
  AlignmentScore score;
  for (std::size_t t = 0; t < ref.size(); ++t) {
    require_pair(ref[t], warped[t]);
    const double shared = static_cast<double>(shared_pixels(ref[t], warped[t]));
    if (shared == 0.0 || shared < min_overlap * ref[t].pixel_count()) continue;
    score.psnr += masked_psnr(ref[t], warped[t]);
    score.ssim += masked_ssim(ref[t], warped[t]);
    ++score.frames;
  }
  if (score.frames == 0) throw UndefinedMetric("no frame has enough overlap for an alignment score");
  score.psnr /= score.frames;
  score.ssim /= score.frames;
  return score;
}

double distortion_score(std::span<const std::vector<ControlGrid>> videos, double width, double height) {
  if (videos.empty()) throw InvalidArgument("distortion_score needs at least one video");
  double total = 0.0;
  for (const auto& meshes : videos) {
    if (meshes.empty()) throw InvalidArgument("distortion_score: video without meshes");
    double worst = 0.0;
    for (const auto& m : meshes) worst = std::max(worst, distortion_loss(m, width, height));
    total += worst;
  }
  return total / videos.size();
}

double stability_score(std::span<const Trajectory> videos, std::span<const double> betas) {
  const int n = 2 * static_cast<int>(betas.size()) + 1;
  double total = 0.0;
  int used = 0;
  for (std::size_t v = 0; v < videos.size(); ++v) {
    const Trajectory& traj = videos[v];
    if (traj.length() < n) {
      spdlog::warn("stability_score: video {} has {} frames, fewer than the window {}; skipped", v, traj.length(), n);
      continue;
    }
    double sum = 0.0;
    const int windows = traj.length() - n + 1;
    for (int b = 0; b < windows; ++b) sum += smoothness_term(traj.slice(b, n), betas);
    total += sum / windows;
    ++used;
  }
  if (used == 0) throw UndefinedMetric("no video is long enough for a stability score");
  return total / used;
}

void write_metrics_text(std::ostream& out, const MetricsReport& report) {
  out.precision(10);
  if (report.alignment) {
    out << "psnr=" << report.alignment->psnr << "\nssim=" << report.alignment->ssim
        << "\nalignment_frames=" << report.alignment->frames << '\n';
  }
  if (report.distortion) out << "distortion=" << *report.distortion << '\n';
  if (report.stability) out << "stability=" << *report.stability << '\n';
}

void write_metrics_csv(std::ostream& out, const MetricsReport& report) {
  out.precision(10);
  out << "# schema=metrics/1\nmetric,value\n";
  if (report.alignment) {
    out << "psnr," << report.alignment->psnr << "\nssim," << report.alignment->ssim << "\nalignment_frames,"
        << report.alignment->frames << '\n';
  }
  if (report.distortion) out << "distortion," << *report.distortion << '\n';
  if (report.stability) out << "stability," << *report.stability << '\n';
}

}  // namespace vstitch
