#include "vstitch/warp.hpp"

#include <vector>

#include "parallel.hpp"
#include "vstitch/error.hpp"
#include "vstitch/tps.hpp"

namespace vstitch {

namespace {

kernels::Lattice canvas_lattice(const CanvasSpec& canvas) {
  if (canvas.height <= 0 || canvas.width <= 0) throw InvalidArgument("canvas must be non-empty");
  return {canvas.height, canvas.width, -canvas.offset, 1.0};
}

}  // namespace

Frame warp_frame(const ControlGrid& mesh_src, const ControlGrid& mesh_dst, const Frame& frame,
                 const CanvasSpec& canvas, kernels::Exec exec, int node_step) {
  require_same_shape(mesh_src.shape(), mesh_dst.shape(), "warp_frame");
  if (node_step < 1) throw InvalidArgument("warp_frame: node_step must be >= 1");
  const auto lattice = canvas_lattice(canvas);
  const TpsWarp back = TpsWarp::fit(mesh_dst.values(), mesh_src.values());
  std::vector<Point> coords(lattice.size());
  if (node_step == 1) {
    kernels::map_lattice(back, lattice, coords, exec);
  } else {
    const int s = node_step;
    const kernels::Lattice nodes{(lattice.rows - 1) / s + 2, (lattice.cols - 1) / s + 2, lattice.origin,
                                 static_cast<double>(s)};
    std::vector<Point> at(nodes.size());
    kernels::map_lattice(back, nodes, at, exec);
    detail::for_rows(lattice.rows, exec, [&](int r) {
      const int i = r / s;
      const double fy = static_cast<double>(r - i * s) / s;
      const Point* top = at.data() + static_cast<std::size_t>(i) * nodes.cols;
      const Point* bottom = top + nodes.cols;
      Point* out = coords.data() + static_cast<std::size_t>(r) * lattice.cols;
      for (int c = 0; c < lattice.cols; ++c) {
        const int j = c / s;
        const double fx = static_cast<double>(c - j * s) / s;
        out[c] = (1 - fy) * ((1 - fx) * top[j] + fx * top[j + 1]) + fy * ((1 - fx) * bottom[j] + fx * bottom[j + 1]);
      }
    });
  }
  Frame out(canvas.height, canvas.width, frame.channels(), 0.0, 0);
  kernels::resample(frame, coords, out, exec);
  return out;
}

Frame place_on_canvas(const Frame& frame, const CanvasSpec& canvas, kernels::Exec exec) {
  const auto lattice = canvas_lattice(canvas);
  std::vector<Point> coords(lattice.size());
  for (int r = 0; r < lattice.rows; ++r) {
    for (int c = 0; c < lattice.cols; ++c) coords[static_cast<std::size_t>(r) * lattice.cols + c] = lattice.at(r, c);
  }
  Frame out(canvas.height, canvas.width, frame.channels(), 0.0, 0);
  kernels::resample(frame, coords, out, exec);
  return out;
}

}  // namespace vstitch
