#include "vstitch/image.hpp"

#include <algorithm>
#include <cmath>

#include "vstitch/error.hpp"
#include "vstitch/kernels.hpp"

namespace vstitch {

Frame::Frame(int height, int width, int channels, double fill, std::uint8_t valid)
    : height_(height), width_(width), channels_(channels) {
  if (height <= 0 || width <= 0 || channels <= 0) {
    throw InvalidArgument("Frame: dimensions and channel count must be positive");
  }
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
  mask_.assign(static_cast<std::size_t>(height) * width, valid);
}

Frame to_gray(const Frame& frame) {
  if (frame.channels() == 1) return frame;
  Frame out(frame.height(), frame.width(), 1);
  const double inv = 1.0 / frame.channels();
  for (int y = 0; y < frame.height(); ++y) {
    for (int x = 0; x < frame.width(); ++x) {
      double s = 0.0;
      for (int c = 0; c < frame.channels(); ++c) s += frame(y, x, c);
      out(y, x) = s * inv;
      out.valid(y, x) = frame.valid(y, x);
    }
  }
  return out;
}

std::vector<double> gaussian_taps(double sigma, int radius) {
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    taps[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += taps[i + radius];
  }
  for (auto& t : taps) t /= sum;
  return taps;
}

Frame gaussian_blur(const Frame& frame, double sigma) {
  if (!(sigma > 0.0)) return frame;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  const auto taps = gaussian_taps(sigma, radius);
  const int h = frame.height(), w = frame.width(), ch = frame.channels();
  Frame out = frame;
  if (ch == 1) {
    kernels::separable_filter(frame.pixels(), h, w, taps, out.pixels());
    return out;
  }
  const std::size_t n = frame.pixel_count();
  std::vector<double> plane(n), filtered(n);
  for (int c = 0; c < ch; ++c) {
    for (std::size_t i = 0; i < n; ++i) plane[i] = frame.pixels()[i * ch + c];
    kernels::separable_filter(plane, h, w, taps, filtered);
    for (std::size_t i = 0; i < n; ++i) out.pixels()[i * ch + c] = filtered[i];
  }
  return out;
}

Frame downsample(const Frame& frame) {
  const Frame blurred = gaussian_blur(frame, 1.0);
  const int h = (frame.height() + 1) / 2;
  const int w = (frame.width() + 1) / 2;
  Frame out(h, w, frame.channels());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < frame.channels(); ++c) out(y, x, c) = blurred(2 * y, 2 * x, c);
      out.valid(y, x) = frame.valid(2 * y, 2 * x);
    }
  }
  return out;
}

std::vector<Frame> build_pyramid(const Frame& frame, int levels) {
  if (levels < 1) throw InvalidArgument("build_pyramid: need at least one level");
  std::vector<Frame> pyr;
  pyr.reserve(levels);
  pyr.push_back(frame);
  for (int l = 1; l < levels; ++l) pyr.push_back(downsample(pyr.back()));
  return pyr;
}

ImageGradient central_gradient(const Frame& gray) {
  const int h = gray.height(), w = gray.width();
  ImageGradient g{Frame(h, w, 1), Frame(h, w, 1)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int xl = std::max(x - 1, 0), xr = std::min(x + 1, w - 1);
      const int yt = std::max(y - 1, 0), yb = std::min(y + 1, h - 1);
      g.dx(y, x) = xr > xl ? (gray(y, xr) - gray(y, xl)) / (xr - xl) : 0.0;
      g.dy(y, x) = yb > yt ? (gray(yb, x) - gray(yt, x)) / (yb - yt) : 0.0;
    }
  }
  return g;
}

}  // namespace vstitch
