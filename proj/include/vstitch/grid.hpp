#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace vstitch {

using Point = Eigen::Vector2d;

/// Mesh resolution in cells: U rows by V columns, (U+1)x(V+1) control points.
struct GridShape {
  int rows_u = 6;
  int cols_v = 8;

  int point_rows() const { return rows_u + 1; }
  int point_cols() const { return cols_v + 1; }
  int points() const { return point_rows() * point_cols(); }
  int index(int u, int v) const { return u * point_cols() + v; }

  /// Throws InvalidArgument unless U >= 1 and V >= 1.
  void validate() const;

  bool operator==(const GridShape&) const = default;
};

namespace detail {

struct PositionTag {};
struct DisplacementTag {};

/// Row-major (U+1)x(V+1) array of 2D values. The tag keeps positions and
/// displacements from being mixed up by accident.
template <class Tag>
class GridArray {
 public:
  GridArray() = default;
  explicit GridArray(GridShape shape, Point fill = Point::Zero())
      : shape_(shape), values_(checked_size(shape), fill) {}
  GridArray(GridShape shape, std::vector<Point> values);

  const GridShape& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  Point& operator[](std::size_t i) { return values_[i]; }
  const Point& operator[](std::size_t i) const { return values_[i]; }
  Point& at(int u, int v) { return values_[shape_.index(u, v)]; }
  const Point& at(int u, int v) const { return values_[shape_.index(u, v)]; }

  std::span<Point> values() { return values_; }
  std::span<const Point> values() const { return values_; }

  auto begin() { return values_.begin(); }
  auto end() { return values_.end(); }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  bool all_finite() const;

 private:
  static std::size_t checked_size(const GridShape& shape);

  GridShape shape_{};
  std::vector<Point> values_;
};

}  // namespace detail

/// Control-point positions in pixels (x right, y down).
using ControlGrid = detail::GridArray<detail::PositionTag>;
/// Per-control-point displacements in pixels.
using MotionField = detail::GridArray<detail::DisplacementTag>;

ControlGrid operator+(const ControlGrid& grid, const MotionField& motion);
ControlGrid operator-(const ControlGrid& grid, const MotionField& motion);
MotionField operator-(const ControlGrid& a, const ControlGrid& b);
MotionField operator+(const MotionField& a, const MotionField& b);
MotionField operator-(const MotionField& a, const MotionField& b);

/// Uniformly spaced mesh spanning [0,width]x[0,height]; point (u,v) sits at
/// (v*width/V, u*height/U).
ControlGrid rigid_mesh(const GridShape& shape, double width, double height);

/// Every point of `grid` moved by `offset`.
ControlGrid translated(const ControlGrid& grid, const Point& offset);

/// Signed area of every cell (positive for the rigid orientation).
std::vector<double> cell_areas(const ControlGrid& grid);

/// True if every cell keeps a strictly positive area.
bool is_fold_free(const ControlGrid& grid);

void require_same_shape(const GridShape& a, const GridShape& b, const char* what);

extern template class detail::GridArray<detail::PositionTag>;
extern template class detail::GridArray<detail::DisplacementTag>;

}  // namespace vstitch
