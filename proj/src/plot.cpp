#include "vstitch/plot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "vstitch/error.hpp"

namespace vstitch {

namespace {

constexpr double kWidth = 640, kHeight = 300;
constexpr double kLeft = 70, kRight = 20, kTop = 30, kBottom = 40;
constexpr const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728"};

std::string number(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    if (c == '<') {
      out += "&lt;";
    } else if (c == '>') {
      out += "&gt;";
    } else if (c == '&') {
      out += "&amp;";
    } else {
      out += c;
    }
  }
  return out;
}

// Chart body placed at vertical offset `y0`.
void chart(std::ostringstream& out, double y0, const std::string& title, std::span<const Series> series) {
  std::size_t n = 0;
  for (const auto& s : series) n = std::max(n, s.values.size());
  const AxisRange r = value_range(series);
  const double t_hi = n > 1 ? static_cast<double>(n - 1) : 1.0;
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  const auto px = [&](double t) { return kLeft + pw * t / t_hi; };
  const auto py = [&](double v) { return y0 + kTop + ph * (r.hi - v) / (r.hi - r.lo); };

  out << "<g class=\"chart\" data-tmin=\"0\" data-tmax=\"" << number(t_hi) << "\" data-vmin=\"" << number(r.lo)
      << "\" data-vmax=\"" << number(r.hi) << "\">\n";
  out << "<text x=\"" << kLeft << "\" y=\"" << y0 + 20 << "\" font-size=\"14\">" << escape(title) << "</text>\n";
  out << "<rect x=\"" << kLeft << "\" y=\"" << y0 + kTop << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#888\"/>\n";
  out << "<text x=\"" << kLeft - 5 << "\" y=\"" << py(r.hi) + 4 << "\" font-size=\"11\" text-anchor=\"end\">"
      << number(r.hi) << "</text>\n";
  out << "<text x=\"" << kLeft - 5 << "\" y=\"" << py(r.lo) + 4 << "\" font-size=\"11\" text-anchor=\"end\">"
      << number(r.lo) << "</text>\n";
  out << "<text x=\"" << px(0) << "\" y=\"" << y0 + kHeight - kBottom + 15 << "\" font-size=\"11\">0</text>\n";
  out << "<text x=\"" << px(t_hi) << "\" y=\"" << y0 + kHeight - kBottom + 15
      << "\" font-size=\"11\" text-anchor=\"end\">" << number(t_hi) << "</text>\n";
  out << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << y0 + kHeight - 8
      << "\" font-size=\"11\" text-anchor=\"middle\">frame</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    out << "<polyline class=\"series\" data-label=\"" << escape(s.label) << "\" fill=\"none\" stroke=\""
        << kColors[k % 4] << "\" stroke-width=\"1.5\"" << (k ? " stroke-dasharray=\"5,3\"" : "") << " points=\"";
    for (std::size_t t = 0; t < s.values.size(); ++t) {
      out << (t ? " " : "") << number(px(static_cast<double>(t))) << ',' << number(py(s.values[t]));
    }
    out << "\"/>\n";
    out << "<text x=\"" << kWidth - kRight - 5 << "\" y=\"" << y0 + 20 + 14 * k << "\" font-size=\"11\" fill=\""
        << kColors[k % 4] << "\" text-anchor=\"end\">" << escape(s.label) << "</text>\n";
  }
  out << "</g>\n";
}

std::string document(const std::string& body, int panels) {
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight * panels
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight * panels << "\">\n"
      << body << "</svg>\n";
  return out.str();
}

}  // namespace

AxisRange value_range(std::span<const Series> series) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : series)
    for (double v : s.values) {
      if (!std::isfinite(v)) throw InvalidArgument("plot: non-finite value");
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (lo > hi) return {};
  if (hi - lo < 1e-12) return {lo - 1.0, hi + 1.0};
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

std::string line_chart_svg(const std::string& title, std::span<const Series> series) {
  std::ostringstream body;
  chart(body, 0.0, title, series);
  return document(body.str(), 1);
}

std::string control_point_svg(const Trajectory& raw, const Trajectory* smoothed, int u, int v) {
  const GridShape& shape = raw.shape();
  if (u < 0 || v < 0 || u > shape.rows_u || v > shape.cols_v) throw InvalidArgument("plot: control point out of range");
  if (smoothed && smoothed->shape() != shape) throw InvalidArgument("plot: trajectories differ in grid shape");
  std::ostringstream body;
  for (int axis = 0; axis < 2; ++axis) {
    std::vector<Series> series;
    const auto extract = [&](const Trajectory& traj, const char* label) {
      Series s{label, {}};
      for (const auto& m : traj) s.values.push_back(m.at(u, v)[axis]);
      series.push_back(std::move(s));
    };
    extract(raw, "raw");
    if (smoothed) extract(*smoothed, "smoothed");
    const std::string title = "point (" + std::to_string(u) + "," + std::to_string(v) + ") " + (axis ? "y" : "x");
    chart(body, kHeight * axis, title, series);
  }
  return document(body.str(), 2);
}

}  // namespace vstitch
