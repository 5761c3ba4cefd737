#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "vstitch/grid.hpp"

namespace vstitch {

/// Per-control-point cumulative paths: one MotionField per frame.
class Trajectory {
 public:
  Trajectory() = default;
  explicit Trajectory(GridShape shape, int length = 0);

  const GridShape& shape() const { return shape_; }
  int length() const { return static_cast<int>(frames_.size()); }
  bool empty() const { return frames_.empty(); }

  MotionField& operator[](int t) { return frames_.at(t); }
  const MotionField& operator[](int t) const { return frames_.at(t); }
  const MotionField& back() const { return frames_.back(); }

  void push_back(MotionField positions);
  /// Frames [begin, begin + count).
  Trajectory slice(int begin, int count) const;
  /// d[0] = positions[0], d[t] = positions[t] - positions[t-1].
  std::vector<MotionField> differences() const;

  auto begin() const { return frames_.begin(); }
  auto end() const { return frames_.end(); }

 private:
  GridShape shape_{};
  std::vector<MotionField> frames_;
};

/// Per-vertex 0/1 flags marking vertices inside the reference frame.
struct OverlapMask {
  GridShape shape{};
  std::vector<std::uint8_t> flags;
};

/// Running sums of motions; motions[0] is treated as zero.
Trajectory camera_trajectory(std::span<const MotionField> motions);

/// Running sums of stitching motions; s[0] is treated as zero.
Trajectory stitch_trajectory(std::span<const MotionField> stitch_motions);

/// s(t) = TPS_{rigid -> ms_prev}(mt_cur) - ms_cur.
MotionField stitch_motion(const ControlGrid& rigid, const ControlGrid& ms_prev, const ControlGrid& ms_cur,
                          const ControlGrid& mt_cur);

/// Flag = 1 iff the vertex lies in the closed box [0,W]x[0,H].
OverlapMask overlap_mask(const ControlGrid& ms, double width, double height);

/// "# schema=trajectory/1" then t,u,v,x,y rows.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
/// Throws InvalidArgument on malformed input.
Trajectory read_trajectory_csv(std::istream& in);

}  // namespace vstitch
