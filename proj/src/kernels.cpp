#include "vstitch/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "vstitch/error.hpp"
#include "parallel.hpp"

namespace vstitch::kernels {

namespace {

using detail::for_rows;

// floor() without the libm call; coordinates far outside any image are
// returned unchanged and rejected by the bounds checks.
inline double fast_floor(double v) {
  if (!(std::abs(v) < 1e15)) return v;
  const auto i = static_cast<std::int64_t>(v);
  return static_cast<double>(i - (v < static_cast<double>(i)));
}

inline double snap(double v) {
  const double r = fast_floor(v + 0.5);
  return std::abs(v - r) < 1e-9 ? r : v;
}

inline PaddedSample sample_padded_impl(const Frame& img, int channel, double x, double y) {
  PaddedSample s;
  x = snap(x);
  y = snap(y);
  const double xf = fast_floor(x), yf = fast_floor(y);
  const int h = img.height(), w = img.width();
  if (!(xf >= -1.0 && yf >= -1.0 && xf < w && yf < h)) return s;
  const int x0 = static_cast<int>(xf), y0 = static_cast<int>(yf);
  const double fx = x - xf, fy = y - yf;

  // Corner weights and their partial derivatives.
  const double wt[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
  const double wdx[4] = {-(1 - fy), (1 - fy), -fy, fy};
  const double wdy[4] = {-(1 - fx), -fx, (1 - fx), fx};
  const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
  const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
  for (int k = 0; k < 4; ++k) {
    if (xs[k] < 0 || ys[k] < 0 || xs[k] >= w || ys[k] >= h) continue;
    const double v = img(ys[k], xs[k], channel);
    s.value += wt[k] * v;
    s.dvalue_dx += wdx[k] * v;
    s.dvalue_dy += wdy[k] * v;
    s.weight += wt[k];
    s.dweight_dx += wdx[k];
    s.dweight_dy += wdy[k];
  }
  return s;
}

}  // namespace

void map_lattice(const TpsWarp& warp, const Lattice& lattice, std::span<Point> out, Exec exec) {
  if (out.size() != lattice.size()) throw InvalidArgument("map_lattice: output size mismatch");
  const auto& src = warp.normalized_sources();
  const auto& coef = warp.coefficients();
  const auto k = static_cast<int>(src.size());
  const Point center = warp.center();
  const double inv_scale = 1.0 / warp.scale();

  // Structure-of-arrays copies keep the inner loop vectorizable.
  std::vector<double> sx(k), sy(k), wx(k), wy(k);
  for (int i = 0; i < k; ++i) {
    sx[i] = src[i].x();
    sy[i] = src[i].y();
    wx[i] = coef(i, 0);
    wy[i] = coef(i, 1);
  }
  const double a0x = coef(k, 0), axx = coef(k + 1, 0), ayx = coef(k + 2, 0);
  const double a0y = coef(k, 1), axy = coef(k + 1, 1), ayy = coef(k + 2, 1);

  for_rows(lattice.rows, exec, [&](int r) {
    for (int c = 0; c < lattice.cols; ++c) {
      const Point q = (lattice.at(r, c) - center) * inv_scale;
      const double qx = q.x(), qy = q.y();
      double x = a0x + axx * qx + ayx * qy;
      double y = a0y + axy * qx + ayy * qy;
      for (int i = 0; i < k; ++i) {
        const double dx = qx - sx[i], dy = qy - sy[i];
        const double u = tps_basis_sq(dx * dx + dy * dy);
        x += wx[i] * u;
        y += wy[i] * u;
      }
      out[static_cast<std::size_t>(r) * lattice.cols + c] = Point(x, y);
    }
  });
}

void resample(const Frame& src, std::span<const Point> coords, Frame& dst, Exec exec) {
  if (coords.size() != dst.pixel_count()) throw InvalidArgument("resample: coordinate count mismatch");
  if (src.channels() != dst.channels()) throw InvalidArgument("resample: channel count mismatch");
  const int h = src.height(), w = src.width(), ch = src.channels();
  const int cols = dst.width();
  for_rows(dst.height(), exec, [&](int r) {
    for (int c = 0; c < cols; ++c) {
      const Point& p = coords[static_cast<std::size_t>(r) * cols + c];
      const double x = snap(p.x()), y = snap(p.y());
      const bool inside = x >= 0.0 && y >= 0.0 && x <= w - 1 && y <= h - 1;
      dst.valid(r, c) = inside ? 1 : 0;
      if (!inside) {
        for (int k = 0; k < ch; ++k) dst(r, c, k) = 0.0;
        continue;
      }
      const int x0 = std::min(static_cast<int>(std::floor(x)), w - 1);
      const int y0 = std::min(static_cast<int>(std::floor(y)), h - 1);
      const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
      const double fx = x - x0, fy = y - y0;
      for (int k = 0; k < ch; ++k) {
        double v = src(y0, x0, k);
        if (fx != 0.0 || fy != 0.0) {
          v = (1 - fy) * ((1 - fx) * src(y0, x0, k) + fx * src(y0, x1, k)) +
              fy * ((1 - fx) * src(y1, x0, k) + fx * src(y1, x1, k));
        }
        dst(r, c, k) = v;
      }
    }
  });
}

PaddedSample sample_padded(const Frame& img, int channel, double x, double y) {
  return sample_padded_impl(img, channel, x, y);
}

PhotometricSums photometric_l1(const Frame& anchor, const Frame& moving, std::span<const Point> coords,
                               Exec exec, PhotometricPartials* partials) {
  if (coords.size() != anchor.pixel_count()) throw InvalidArgument("photometric_l1: coordinate count mismatch");
  if (anchor.channels() != moving.channels()) throw InvalidArgument("photometric_l1: channel mismatch");
  const int rows = anchor.height(), cols = anchor.width(), ch = anchor.channels();
  if (partials) {
    partials->d_abs.resize(coords.size());
    partials->d_weight.resize(coords.size());
  }
  std::vector<double> abs_rows(rows, 0.0), weight_rows(rows, 0.0);
  for_rows(rows, exec, [&](int r) {
    double a = 0.0, m = 0.0;
    for (int c = 0; c < cols; ++c) {
      const std::size_t idx = static_cast<std::size_t>(r) * cols + c;
      const Point& p = coords[idx];
      double weight = 0.0, wdx = 0.0, wdy = 0.0, gx = 0.0, gy = 0.0;
      for (int k = 0; k < ch; ++k) {
        const PaddedSample s = sample_padded_impl(moving, k, p.x(), p.y());
        weight = s.weight;
        wdx = s.dweight_dx;
        wdy = s.dweight_dy;
        const double av = anchor(r, c, k);
        const double res = av * s.weight - s.value;
        a += std::abs(res);
        const double sgn = res > 0.0 ? 1.0 : (res < 0.0 ? -1.0 : 0.0);
        gx += sgn * (av * s.dweight_dx - s.dvalue_dx);
        gy += sgn * (av * s.dweight_dy - s.dvalue_dy);
      }
      m += weight;
      if (partials) {
        partials->d_abs[idx] = Point(gx, gy);
        partials->d_weight[idx] = Point(wdx, wdy);
      }
    }
    abs_rows[r] = a;
    weight_rows[r] = m;
  });
  PhotometricSums sums;
  for (int r = 0; r < rows; ++r) {
    sums.abs_sum += abs_rows[r];
    sums.weight_sum += weight_rows[r];
  }
  return sums;
}

double normalized_l1(const PhotometricSums& sums, int channels) {
  return sums.abs_sum / (channels * std::max(sums.weight_sum, 1.0));
}

void photometric_l1_gradient(const PhotometricPartials& partials, const PhotometricSums& sums, int channels,
                             std::span<Point> grad, Exec exec) {
  const std::size_t n = partials.d_abs.size();
  if (grad.size() != n || partials.d_weight.size() != n) {
    throw InvalidArgument("photometric_l1_gradient: size mismatch");
  }
  const bool floored = sums.weight_sum < 1.0;
  const double count = std::max(sums.weight_sum, 1.0);
  const double denom = channels * count;
  // Below the floor the denominator is constant.
  const double mask_coef = floored ? 0.0 : sums.abs_sum / denom / count;
  constexpr std::size_t kBlock = 4096;
  const int blocks = static_cast<int>((n + kBlock - 1) / kBlock);
  for_rows(blocks, exec, [&](int b) {
    const std::size_t end = std::min(n, (b + 1) * kBlock);
    for (std::size_t i = b * kBlock; i < end; ++i) {
      grad[i] = partials.d_abs[i] / denom - mask_coef * partials.d_weight[i];
    }
  });
}

TpsAdjoint tps_alignment_adjoint(const TpsWarp& back, int rows, int cols, std::span<const Point> pixel_grad,
                                 Exec exec) {
  if (pixel_grad.size() != static_cast<std::size_t>(rows) * cols) {
    throw InvalidArgument("tps_alignment_adjoint: size mismatch");
  }
  const auto& src = back.normalized_sources();
  const auto& coef = back.coefficients();
  const int k = static_cast<int>(src.size());
  const Point center = back.center();
  const double inv_scale = 1.0 / back.scale();

  std::vector<double> sx(k), sy(k), cx(k), cy(k);
  for (int i = 0; i < k; ++i) {
    sx[i] = src[i].x();
    sy[i] = src[i].y();
    cx[i] = coef(i, 0);
    cy[i] = coef(i, 1);
  }

  // Per-row partial accumulators: z (K+3 x 2) then kernel (K x 2), flattened.
  const std::size_t stride = static_cast<std::size_t>(2 * (k + 3) + 2 * k);
  std::vector<double> partial(stride * rows, 0.0);

  for_rows(rows, exec, [&](int r) {
    double* zx = &partial[stride * r];
    double* zy = zx + (k + 3);
    double* tx = zy + (k + 3);
    double* ty = tx + k;
    for (int c = 0; c < cols; ++c) {
      const Point& g = pixel_grad[static_cast<std::size_t>(r) * cols + c];
      const double gx = g.x(), gy = g.y();
      if (gx == 0.0 && gy == 0.0) continue;

      const double qx = (c - center.x()) * inv_scale;
      const double qy = (r - center.y()) * inv_scale;
      for (int i = 0; i < k; ++i) {
        const double dx = qx - sx[i], dy = qy - sy[i];
        const double r2 = dx * dx + dy * dy;
        double phi = 0.0, slope = 0.0;
        if (r2 > 0.0) {
          const double lg = std::log(r2);
          phi = 0.5 * r2 * lg;
          slope = lg + 1.0;
        }
        zx[i] += phi * gx;
        zy[i] += phi * gy;
        const double gc = (gx * cx[i] + gy * cy[i]) * slope;
        tx[i] += gc * dx;
        ty[i] += gc * dy;
      }
      zx[k] += gx;
      zy[k] += gy;
      zx[k + 1] += qx * gx;
      zy[k + 1] += qx * gy;
      zx[k + 2] += qy * gx;
      zy[k + 2] += qy * gy;
    }
  });

  TpsAdjoint adj{Eigen::MatrixX2d::Zero(k + 3, 2), Eigen::MatrixX2d::Zero(k, 2)};
  for (int r = 0; r < rows; ++r) {
    const double* zx = &partial[stride * r];
    const double* zy = zx + (k + 3);
    const double* tx = zy + (k + 3);
    const double* ty = tx + k;
    for (int i = 0; i < k + 3; ++i) {
      adj.z(i, 0) += zx[i];
      adj.z(i, 1) += zy[i];
    }
    for (int i = 0; i < k; ++i) {
      adj.kernel(i, 0) += tx[i];
      adj.kernel(i, 1) += ty[i];
    }
  }
  return adj;
}

void separable_filter(std::span<const double> in, int height, int width, std::span<const double> taps,
                      std::span<double> out, Exec exec) {
  const std::size_t n = static_cast<std::size_t>(height) * width;
  if (in.size() != n || out.size() != n) throw InvalidArgument("separable_filter: size mismatch");
  const int radius = static_cast<int>(taps.size() / 2);
  std::vector<double> tmp(n);
  for_rows(height, exec, [&](int y) {
    const double* row = in.data() + static_cast<std::size_t>(y) * width;
    double* dst = tmp.data() + static_cast<std::size_t>(y) * width;
    const int lo = std::min(radius, width), hi = std::max(lo, width - radius);
    const auto clamped = [&](int x) {
      double s = 0.0;
      for (int k = -radius; k <= radius; ++k) s += taps[k + radius] * row[std::clamp(x + k, 0, width - 1)];
      return s;
    };
    for (int x = 0; x < lo; ++x) dst[x] = clamped(x);
    for (int x = lo; x < hi; ++x) {
      double s = 0.0;
      for (int k = -radius; k <= radius; ++k) s += taps[k + radius] * row[x + k];
      dst[x] = s;
    }
    for (int x = hi; x < width; ++x) dst[x] = clamped(x);
  });
  for_rows(height, exec, [&](int y) {
    double* dst = out.data() + static_cast<std::size_t>(y) * width;
    std::fill(dst, dst + width, 0.0);
    for (int k = -radius; k <= radius; ++k) {
      const double* src = tmp.data() + static_cast<std::size_t>(std::clamp(y + k, 0, height - 1)) * width;
      const double t = taps[k + radius];
      for (int x = 0; x < width; ++x) dst[x] += t * src[x];
    }
  });
}

}  // namespace vstitch::kernels
