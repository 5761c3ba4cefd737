#include "vstitch/trajectory.hpp"

#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "vstitch/error.hpp"
#include "vstitch/tps.hpp"

namespace vstitch {

Trajectory::Trajectory(GridShape shape, int length) : shape_(shape) {
  shape.validate();
  if (length < 0) throw InvalidArgument("trajectory length must be non-negative");
  frames_.assign(length, MotionField(shape));
}

void Trajectory::push_back(MotionField positions) {
  require_same_shape(shape_, positions.shape(), "Trajectory::push_back");
  frames_.push_back(std::move(positions));
}

Trajectory Trajectory::slice(int begin, int count) const {
  if (begin < 0 || count < 0 || begin + count > length()) throw OutOfRange("trajectory slice out of range");
  Trajectory out(shape_);
  out.frames_.assign(frames_.begin() + begin, frames_.begin() + begin + count);
  return out;
}

std::vector<MotionField> Trajectory::differences() const {
  std::vector<MotionField> d;
  d.reserve(frames_.size());
  for (std::size_t t = 0; t < frames_.size(); ++t) d.push_back(t == 0 ? frames_[0] : frames_[t] - frames_[t - 1]);
  return d;
}

namespace {

Trajectory prefix_sums(std::span<const MotionField> motions) {
  if (motions.empty()) throw InvalidArgument("trajectory needs at least one frame");
  Trajectory out(motions[0].shape());
  MotionField acc(motions[0].shape());
  out.push_back(acc);
  for (std::size_t t = 1; t < motions.size(); ++t) {
    acc = acc + motions[t];
    out.push_back(acc);
  }
  return out;
}

}  // namespace

Trajectory camera_trajectory(std::span<const MotionField> motions) { return prefix_sums(motions); }

Trajectory stitch_trajectory(std::span<const MotionField> stitch_motions) { return prefix_sums(stitch_motions); }

MotionField stitch_motion(const ControlGrid& rigid, const ControlGrid& ms_prev, const ControlGrid& ms_cur,
                          const ControlGrid& mt_cur) {
  require_same_shape(ms_prev.shape(), ms_cur.shape(), "stitch_motion");
  require_same_shape(ms_prev.shape(), mt_cur.shape(), "stitch_motion");
  return warp_mesh(rigid, ms_prev, mt_cur) - ms_cur;
}

OverlapMask overlap_mask(const ControlGrid& ms, double width, double height) {
  OverlapMask m{ms.shape(), std::vector<std::uint8_t>(ms.size())};
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const Point& p = ms[i];
    m.flags[i] = p.x() >= 0.0 && p.x() <= width && p.y() >= 0.0 && p.y() <= height;
  }
  return m;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  const GridShape& s = traj.shape();
  out << "# schema=trajectory/1 rows_u=" << s.rows_u << " cols_v=" << s.cols_v << "\n";
  out << "t,u,v,x,y\n";
  out << std::setprecision(17);
  for (int t = 0; t < traj.length(); ++t)
    for (int u = 0; u <= s.rows_u; ++u)
      for (int v = 0; v <= s.cols_v; ++v) {
        const Point& p = traj[t].at(u, v);
        out << t << ',' << u << ',' << v << ',' << p.x() << ',' << p.y() << '\n';
      }
}

Trajectory read_trajectory_csv(std::istream& in) {
  std::string line;
  int line_no = 0;
  std::map<int, std::map<std::pair<int, int>, Point>> rows;
  int max_u = -1, max_v = -1;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line.rfind("t,u,v,x,y", 0) != 0) throw InvalidArgument("trajectory csv: expected header t,u,v,x,y");
      header = true;
      continue;
    }
    std::stringstream ss(line);
    std::string f[5];
    for (auto& x : f) {
      if (!std::getline(ss, x, ',')) throw InvalidArgument("trajectory csv: short row at line " + std::to_string(line_no));
    }
    try {
      const int t = std::stoi(f[0]), u = std::stoi(f[1]), v = std::stoi(f[2]);
      if (t < 0 || u < 0 || v < 0) throw std::invalid_argument("negative index");
      rows[t][{u, v}] = Point(std::stod(f[3]), std::stod(f[4]));
      max_u = std::max(max_u, u);
      max_v = std::max(max_v, v);
    } catch (const std::exception&) {
      throw InvalidArgument("trajectory csv: bad value at line " + std::to_string(line_no));
    }
  }
  if (!header || rows.empty() || max_u < 1 || max_v < 1) throw InvalidArgument("trajectory csv: no data");
  const GridShape shape{max_u, max_v};
  Trajectory traj(shape);
  int expect_t = 0;
  for (const auto& [t, pts] : rows) {
    if (t != expect_t++ || static_cast<int>(pts.size()) != shape.points()) {
      throw InvalidArgument("trajectory csv: frame " + std::to_string(t) + " incomplete or out of order");
    }
    MotionField m(shape);
    for (const auto& [uv, p] : pts) m.at(uv.first, uv.second) = p;
    traj.push_back(std::move(m));
  }
  return traj;
}

}  // namespace vstitch
