#pragma once

#include <span>
#include <string>
#include <vector>

#include "vstitch/trajectory.hpp"

namespace vstitch {

struct Series {
  std::string label;
  std::vector<double> values;  // sampled at t = 0, 1, ...
};

struct AxisRange {
  double lo = 0.0;
  double hi = 1.0;
};

/// Covers every value with a 5% margin; flat data gets +-1 around it.
AxisRange value_range(std::span<const Series> series);

/// Time-series chart; one polyline per series, first solid, rest dashed.
std::string line_chart_svg(const std::string& title, std::span<const Series> series);

/// x(t) and y(t) panels for control point (u, v). `smoothed` may be null.
std::string control_point_svg(const Trajectory& raw, const Trajectory* smoothed, int u, int v);

}  // namespace vstitch
