#pragma once

// Data-parallel pixel kernels. Every kernel runs either serially or with
// OpenMP over image rows; reductions are accumulated per row and summed in
// row order, so both policies return bit-identical results.

#include <span>

#include <Eigen/Core>

#include "vstitch/grid.hpp"
#include "vstitch/image.hpp"
#include "vstitch/tps.hpp"

namespace vstitch::kernels {

enum class Exec { serial, parallel };

/// Regular pixel lattice: point (r, c) = origin + step * (c, r).
struct Lattice {
  int rows = 0;
  int cols = 0;
  Point origin = Point::Zero();
  double step = 1.0;

  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
  Point at(int r, int c) const { return origin + step * Point(c, r); }
};

/// out[r * cols + c] = warp(lattice.at(r, c)).
void map_lattice(const TpsWarp& warp, const Lattice& lattice, std::span<Point> out,
                 Exec exec = Exec::parallel);

/// Bilinear resampling for rendering. dst(r, c) = src(coords[r * cols + c]);
/// the mask is 1 only where the coordinate lies inside [0,W-1]x[0,H-1].
/// Coordinates within 1e-9 px of an integer are snapped to it.
void resample(const Frame& src, std::span<const Point> coords, Frame& dst, Exec exec = Exec::parallel);

/// Zero-padded bilinear sample of one channel plus the sampled all-ones
/// image, with derivatives of both with respect to the sample position.
struct PaddedSample {
  double value = 0.0;
  double dvalue_dx = 0.0;
  double dvalue_dy = 0.0;
  double weight = 0.0;
  double dweight_dx = 0.0;
  double dweight_dy = 0.0;
};
PaddedSample sample_padded(const Frame& img, int channel, double x, double y);

/// Masked photometric L1 between an anchor image (every pixel) and a moving
/// image sampled at coords[i] for anchor pixel i:
///   abs_sum = sum_x sum_c |anchor_c(x) * W(1)(x) - W(moving_c)(x)|,
///   weight_sum = sum_x W(1)(x).
struct PhotometricSums {
  double abs_sum = 0.0;
  double weight_sum = 0.0;
};
/// Per-sample pieces of the derivative, filled on request:
/// d_abs[i] = sum_c sign(residual) * d(residual)/d coords[i], d_weight[i] = d W(1) / d coords[i].
struct PhotometricPartials {
  std::vector<Point> d_abs;
  std::vector<Point> d_weight;
};
PhotometricSums photometric_l1(const Frame& anchor, const Frame& moving, std::span<const Point> coords,
                               Exec exec = Exec::parallel, PhotometricPartials* partials = nullptr);

/// Loss value ell = abs_sum / (C * max(weight_sum, 1)).
double normalized_l1(const PhotometricSums& sums, int channels);

/// grad[i] = d normalized_l1 / d coords[i].
void photometric_l1_gradient(const PhotometricPartials& partials, const PhotometricSums& sums, int channels,
                             std::span<Point> grad, Exec exec = Exec::parallel);

/// Adjoint accumulations for d ell / d(mesh) when coords come from the
/// backward TPS `back` evaluated on the anchor lattice. With g(x) = d ell/dR(x)
/// as produced by photometric_l1_gradient:
///   z.row(k)      += phi_k(x) g(x)^T   (k < K: basis values, then 1, x^, y^)
///   kernel.row(k) += (g(x) . c_k) (log rho^2 + 1) (x^ - s^_k)^T
/// in the warp's normalized frame.
struct TpsAdjoint {
  Eigen::MatrixX2d z;
  Eigen::MatrixX2d kernel;
};
TpsAdjoint tps_alignment_adjoint(const TpsWarp& back, int rows, int cols, std::span<const Point> pixel_grad,
                                 Exec exec = Exec::parallel);

/// Row-wise then column-wise convolution of an h x w plane with replicated
/// borders.
void separable_filter(std::span<const double> in, int height, int width, std::span<const double> taps,
                      std::span<double> out, Exec exec = Exec::parallel);

}  // namespace vstitch::kernels
