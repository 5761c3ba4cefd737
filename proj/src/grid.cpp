#include "vstitch/grid.hpp"

#include <cmath>
#include <string>

#include "vstitch/error.hpp"

namespace vstitch {

void GridShape::validate() const {
  if (rows_u < 1 || cols_v < 1) {
    throw InvalidArgument("GridShape: U and V must both be >= 1, got " + std::to_string(rows_u) +
                          "x" + std::to_string(cols_v));
  }
}

namespace detail {

template <class Tag>
std::size_t GridArray<Tag>::checked_size(const GridShape& shape) {
  shape.validate();
  return static_cast<std::size_t>(shape.points());
}

template <class Tag>
GridArray<Tag>::GridArray(GridShape shape, std::vector<Point> values)
    : shape_(shape), values_(std::move(values)) {
  if (values_.size() != checked_size(shape_)) {
    throw InvalidArgument("GridArray: expected " + std::to_string(shape_.points()) +
                          " points, got " + std::to_string(values_.size()));
  }
}

template <class Tag>
bool GridArray<Tag>::all_finite() const {
  for (const auto& p : values_) {
    if (!p.allFinite()) return false;
  }
  return true;
}

template class GridArray<PositionTag>;
template class GridArray<DisplacementTag>;

}  // namespace detail

void require_same_shape(const GridShape& a, const GridShape& b, const char* what) {
  if (!(a == b)) {
    throw InvalidArgument(std::string(what) + ": grid shapes differ");
  }
}

namespace {

template <class Out, class A, class B, class Op>
Out combine(const A& a, const B& b, Op op, const char* what) {
  require_same_shape(a.shape(), b.shape(), what);
  Out out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = op(a[i], b[i]);
  return out;
}

}  // namespace

ControlGrid operator+(const ControlGrid& grid, const MotionField& motion) {
  return combine<ControlGrid>(grid, motion, [](const Point& p, const Point& m) -> Point { return p + m; },
                              "ControlGrid + MotionField");
}

ControlGrid operator-(const ControlGrid& grid, const MotionField& motion) {
  return combine<ControlGrid>(grid, motion, [](const Point& p, const Point& m) -> Point { return p - m; },
                              "ControlGrid - MotionField");
}

MotionField operator-(const ControlGrid& a, const ControlGrid& b) {
  return combine<MotionField>(a, b, [](const Point& p, const Point& q) -> Point { return p - q; },
                              "ControlGrid - ControlGrid");
}

MotionField operator+(const MotionField& a, const MotionField& b) {
  return combine<MotionField>(a, b, [](const Point& p, const Point& q) -> Point { return p + q; },
                              "MotionField + MotionField");
}

MotionField operator-(const MotionField& a, const MotionField& b) {
  return combine<MotionField>(a, b, [](const Point& p, const Point& q) -> Point { return p - q; },
                              "MotionField - MotionField");
}

ControlGrid rigid_mesh(const GridShape& shape, double width, double height) {
  shape.validate();
  if (!(width > 0.0) || !(height > 0.0)) {
    throw InvalidArgument("rigid_mesh: width and height must be positive");
  }
  ControlGrid grid(shape);
  for (int u = 0; u <= shape.rows_u; ++u) {
    for (int v = 0; v <= shape.cols_v; ++v) {
      grid.at(u, v) = Point(v * width / shape.cols_v, u * height / shape.rows_u);
    }
  }
  return grid;
}

ControlGrid translated(const ControlGrid& grid, const Point& offset) {
  ControlGrid out = grid;
  for (auto& p : out) p += offset;
  return out;
}

std::vector<double> cell_areas(const ControlGrid& grid) {
  const GridShape& s = grid.shape();
  std::vector<double> areas;
  areas.reserve(static_cast<std::size_t>(s.rows_u * s.cols_v));
  for (int u = 0; u < s.rows_u; ++u) {
    for (int v = 0; v < s.cols_v; ++v) {
      const Point quad[4] = {grid.at(u, v), grid.at(u, v + 1), grid.at(u + 1, v + 1), grid.at(u + 1, v)};
      double twice = 0.0;
      for (int k = 0; k < 4; ++k) {
        const Point& a = quad[k];
        const Point& b = quad[(k + 1) % 4];
        twice += a.x() * b.y() - b.x() * a.y();
      }
      areas.push_back(0.5 * twice);
    }
  }
  return areas;
}

bool is_fold_free(const ControlGrid& grid) {
  for (double a : cell_areas(grid)) {
    if (!(a > 0.0)) return false;
  }
  return true;
}

}  // namespace vstitch
