#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "vstitch/grid.hpp"
#include "vstitch/image.hpp"
#include "vstitch/pipeline.hpp"

namespace vstitch {

/// 8-bit PNG to [0,1] values. Gray and RGB load as 1 and 3 channels; an
/// alpha channel becomes the mask (alpha > 0). Throws InvalidArgument
/// naming the path on failure.
Frame read_png(const std::filesystem::path& path);
/// 1 or 3 channels; values are clamped and rounded to 8 bits. Frames with
/// invalid pixels gain an alpha channel holding the mask.
void write_png(const std::filesystem::path& path, const Frame& frame);

/// "000042.png"
std::string frame_name(int index);
/// Numbered PNGs of a directory, in index order. Throws InvalidArgument if
/// the directory is missing, holds no frames or has a gap in the numbering.
std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir);
std::vector<Frame> read_frames(const std::filesystem::path& dir);
void write_frames(const std::filesystem::path& dir, std::span<const Frame> frames);

/// Per-frame meshes in the trajectory CSV layout (t,u,v,x,y).
void write_meshes_csv(std::ostream& out, std::span<const ControlGrid> meshes);
std::vector<ControlGrid> read_meshes_csv(std::istream& in);

/// "# schema=metadata/1", then one row per frame: t, warmup, degraded,
/// objectives, online discrepancy and stage timings in ms.
void write_metadata_csv(std::ostream& out, std::span<const StitchedFrame> frames);

}  // namespace vstitch
