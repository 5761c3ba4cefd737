#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace vstitch {

/// H x W image with C interleaved channels of doubles in [0,1] and a
/// per-pixel validity mask. Source frames carry an all-ones mask.
class Frame {
 public:
  Frame() = default;
  Frame(int height, int width, int channels = 1, double fill = 0.0, std::uint8_t valid = 1);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * width_; }

  double& operator()(int y, int x, int c = 0) { return data_[offset(y, x) + c]; }
  double operator()(int y, int x, int c = 0) const { return data_[offset(y, x) + c]; }
  std::uint8_t& valid(int y, int x) { return mask_[static_cast<std::size_t>(y) * width_ + x]; }
  std::uint8_t valid(int y, int x) const { return mask_[static_cast<std::size_t>(y) * width_ + x]; }

  std::span<double> pixels() { return data_; }
  std::span<const double> pixels() const { return data_; }
  std::span<std::uint8_t> mask() { return mask_; }
  std::span<const std::uint8_t> mask() const { return mask_; }

  bool same_size(const Frame& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }

 private:
  std::size_t offset(int y, int x) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
  std::vector<std::uint8_t> mask_;
};

/// Channel mean; keeps the mask.
Frame to_gray(const Frame& frame);

/// Separable Gaussian with replicated borders; radius ceil(3 sigma).
Frame gaussian_blur(const Frame& frame, double sigma);

/// Normalized 1D Gaussian taps of length 2*radius+1.
std::vector<double> gaussian_taps(double sigma, int radius);

/// Blur (sigma = 1) and keep every second pixel: level pixel i sits at
/// full-resolution coordinate 2i.
Frame downsample(const Frame& frame);

/// Level 0 is the input; each further level is downsample() of the previous.
std::vector<Frame> build_pyramid(const Frame& frame, int levels);

/// Central-difference gradients of a single-channel frame (one-sided at borders).
struct ImageGradient {
  Frame dx;
  Frame dy;
};
ImageGradient central_gradient(const Frame& gray);

}  // namespace vstitch
