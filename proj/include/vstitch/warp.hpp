#pragma once

#include "vstitch/grid.hpp"
#include "vstitch/image.hpp"
#include "vstitch/kernels.hpp"

namespace vstitch {

/// Output raster. Canvas pixel (r, c) shows reference-frame coordinate
/// (c, r) - offset.
struct CanvasSpec {
  int height = 0;
  int width = 0;
  Point offset = Point::Zero();

  bool operator==(const CanvasSpec&) const = default;
};

/// Backward-mapped rendering of `frame` (whose rigid mesh is `mesh_src`)
/// onto the canvas so that mesh_src lands on mesh_dst. Pixels whose
/// back-mapped position falls outside the source are masked 0.
///
/// node_step > 1 evaluates the spline only every node_step canvas pixels and
/// interpolates bilinearly in between. Affine maps stay exact.
Frame warp_frame(const ControlGrid& mesh_src, const ControlGrid& mesh_dst, const Frame& frame,
                 const CanvasSpec& canvas, kernels::Exec exec = kernels::Exec::parallel, int node_step = 1);

/// The unwarped reference frame placed on the canvas.
Frame place_on_canvas(const Frame& frame, const CanvasSpec& canvas,
                      kernels::Exec exec = kernels::Exec::parallel);

}  // namespace vstitch
