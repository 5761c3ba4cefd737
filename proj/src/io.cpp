#include "vstitch/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>

#include <png.h>

#include "vstitch/error.hpp"
#include "vstitch/trajectory.hpp"

namespace vstitch {

namespace fs = std::filesystem;

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open_file(const fs::path& path, const char* mode) {
  File f(std::fopen(path.c_str(), mode));
  if (!f) throw InvalidArgument("cannot open " + path.string());
  return f;
}

std::uint8_t to_byte(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

}  // namespace

Frame read_png(const fs::path& path) {
  const File file = open_file(path, "rb");
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_stdio(&image, file.get())) {
    throw InvalidArgument("cannot read PNG " + path.string() + ": " + image.message);
  }
  const bool color = image.format & PNG_FORMAT_FLAG_COLOR;
  const bool alpha = image.format & PNG_FORMAT_FLAG_ALPHA;
  image.format = (color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY) | (alpha ? PNG_FORMAT_FLAG_ALPHA : 0);
  const int stored = PNG_IMAGE_SAMPLE_CHANNELS(image.format);
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw InvalidArgument("cannot decode PNG " + path.string() + ": " + msg);
  }
  const int channels = color ? 3 : 1;
  Frame f(static_cast<int>(image.height), static_cast<int>(image.width), channels);
  for (std::size_t i = 0; i < f.pixel_count(); ++i) {
    for (int c = 0; c < channels; ++c) f.pixels()[i * channels + c] = buf[i * stored + c] / 255.0;
    if (alpha) f.mask()[i] = buf[i * stored + channels] > 0;
  }
  return f;
}

void write_png(const fs::path& path, const Frame& frame) {
  if (frame.empty() || (frame.channels() != 1 && frame.channels() != 3)) {
    throw InvalidArgument("write_png: need a non-empty 1- or 3-channel frame");
  }
  const bool alpha = std::any_of(frame.mask().begin(), frame.mask().end(), [](std::uint8_t m) { return m == 0; });
  const int channels = frame.channels();
  const int stored = channels + (alpha ? 1 : 0);
  std::vector<std::uint8_t> buf(frame.pixel_count() * stored);
  for (std::size_t i = 0; i < frame.pixel_count(); ++i) {
    for (int c = 0; c < channels; ++c) buf[i * stored + c] = to_byte(frame.pixels()[i * channels + c]);
    if (alpha) buf[i * stored + channels] = frame.mask()[i] ? 255 : 0;
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = frame.width();
  image.height = frame.height();
  image.format = (channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY) | (alpha ? PNG_FORMAT_FLAG_ALPHA : 0);
  const File file = open_file(path, "wb");
  if (!png_image_write_to_stdio(&image, file.get(), 0, buf.data(), 0, nullptr)) {
    throw InvalidArgument("cannot write PNG " + path.string() + ": " + image.message);
  }
}

std::string frame_name(int index) {
  if (index < 0 || index > 999999) throw InvalidArgument("frame index out of the 6-digit range");
  char name[16];
  std::snprintf(name, sizeof name, "%06d.png", index);
  return name;
}

std::vector<fs::path> list_frames(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InvalidArgument("frame directory not found: " + dir.string());
  std::map<int, fs::path> found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() != 10 || entry.path().extension() != ".png") continue;
    const std::string stem = name.substr(0, 6);
    if (!std::all_of(stem.begin(), stem.end(), [](char c) { return c >= '0' && c <= '9'; })) continue;
    found[std::stoi(stem)] = entry.path();
  }
  if (found.empty()) throw InvalidArgument("no numbered PNG frames in " + dir.string());
  std::vector<fs::path> out;
  for (const auto& [index, path] : found) {
    if (index != static_cast<int>(out.size())) {
      throw InvalidArgument("frame " + frame_name(static_cast<int>(out.size())) + " missing in " + dir.string());
    }
    out.push_back(path);
  }
  return out;
}

std::vector<Frame> read_frames(const fs::path& dir) {
  std::vector<Frame> frames;
  for (const auto& p : list_frames(dir)) frames.push_back(read_png(p));
  return frames;
}

void write_frames(const fs::path& dir, std::span<const Frame> frames) {
  fs::create_directories(dir);
  for (std::size_t t = 0; t < frames.size(); ++t) write_png(dir / frame_name(static_cast<int>(t)), frames[t]);
}

void write_meshes_csv(std::ostream& out, std::span<const ControlGrid> meshes) {
  if (meshes.empty()) throw InvalidArgument("write_meshes_csv: no meshes");
  const GridShape shape = meshes.front().shape();
  const ControlGrid origin(shape);
  Trajectory traj(shape);
  for (const auto& m : meshes) traj.push_back(m - origin);
  write_trajectory_csv(out, traj);
}

std::vector<ControlGrid> read_meshes_csv(std::istream& in) {
  const Trajectory traj = read_trajectory_csv(in);
  const ControlGrid origin(traj.shape());
  std::vector<ControlGrid> meshes;
  for (const auto& m : traj) meshes.push_back(origin + m);
  return meshes;
}

void write_metadata_csv(std::ostream& out, std::span<const StitchedFrame> frames) {
  out << "# schema=metadata/1\n"
         "t,warmup,degraded,spatial_objective,temporal_objective,online_discrepancy,"
         "estimate_spatial_ms,estimate_temporal_ms,trajectory_ms,smoothing_ms,warping_ms,blending_ms,total_ms\n";
  out << std::setprecision(10);
  for (const auto& f : frames) {
    const StageTimings& s = f.timings;
    out << f.t << ',' << f.warmup << ',' << f.degraded << ',' << f.spatial_objective << ',' << f.temporal_objective
        << ',' << f.online_discrepancy << ',' << s.spatial << ',' << s.temporal << ',' << s.trajectory << ','
        << s.smoothing << ',' << s.warping << ',' << s.blending << ',' << s.total << '\n';
  }
}

}  // namespace vstitch
