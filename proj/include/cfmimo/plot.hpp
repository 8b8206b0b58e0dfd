#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "cfmimo/experiment.hpp"

namespace cfmimo {

namespace detail {

inline int axis_value(const ResultRow& r, const std::string& axis) {
  if (axis == "m_size") return r.m_size;
  if (axis == "c_size") return r.c_size;
  if (axis == "iter") return r.iter;
  throw std::runtime_error("plot: unknown x axis '" + axis + "' (m_size | c_size | iter)");
}

/// Picks the column with more than one distinct value among the final rows.
inline std::string detect_axis(const std::vector<ResultRow>& rows) {
  for (const std::string axis : {"c_size", "m_size", "iter"}) {
    std::set<int> vals;
    for (const auto& r : rows) vals.insert(axis_value(r, axis));
    if (vals.size() > 1) return axis;
  }
  return "c_size";
}

}  // namespace detail

/// Renders mean sum-SE vs the swept column, one polyline per scheme, as a
/// static SVG. For iteration sweeps every traced round contributes a point;
/// otherwise only each trial's final row does.
inline void plot_sweep_svg(const std::vector<ResultRow>& rows, const std::string& out_path,
                           std::string axis = "") {
  if (rows.empty()) throw std::runtime_error("plot: no rows");
  if (axis.empty()) axis = detail::detect_axis(rows);

  // mean sum_se per (scheme, x); for non-iter axes use the last traced round
  // of each (trial, x) group, i.e. drop intermediate dual rounds.
  std::map<std::pair<std::string, int>, std::pair<double, int>> acc;
  if (axis == "iter") {
    for (const auto& r : rows) {
      auto& a = acc[{r.scheme, r.iter}];
      a.first += r.sum_se;
      a.second += 1;
    }
  } else {
    std::map<std::tuple<std::string, int, int>, ResultRow> last;
    for (const auto& r : rows)
      last[{r.scheme, detail::axis_value(r, axis), r.trial}] = r;
    for (const auto& [key, r] : last) {
      auto& a = acc[{std::get<0>(key), std::get<1>(key)}];
      a.first += r.sum_se;
      a.second += 1;
    }
  }

  std::map<std::string, std::vector<std::pair<int, double>>> series;
  double ymin = 1e300, ymax = -1e300;
  int xmin = 1 << 30, xmax = -(1 << 30);
  for (const auto& [key, a] : acc) {
    const double mean = a.first / a.second;
    series[key.first].emplace_back(key.second, mean);
    ymin = std::min(ymin, mean);
    ymax = std::max(ymax, mean);
    xmin = std::min(xmin, key.second);
    xmax = std::max(xmax, key.second);
  }
  if (xmin == xmax) { xmin -= 1; xmax += 1; }
  if (ymax - ymin < 1e-12) { ymin -= 1.0; ymax += 1.0; }
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;

  const int W = 640, H = 420, ML = 70, MR = 20, MT = 30, MB = 50;
  auto px = [&](double x) { return ML + (x - xmin) / (xmax - xmin) * (W - ML - MR); };
  auto py = [&](double y) { return H - MB - (y - ymin) / (ymax - ymin) * (H - MT - MB); };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  std::ofstream f(out_path, std::ios::trunc);
  if (!f) throw std::runtime_error("plot: cannot open " + out_path);
  f << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
  f << "<rect width='100%' height='100%' fill='white'/>\n";
  f << "<line x1='" << ML << "' y1='" << H - MB << "' x2='" << W - MR << "' y2='" << H - MB
    << "' stroke='black'/>\n";
  f << "<line x1='" << ML << "' y1='" << MT << "' x2='" << ML << "' y2='" << H - MB
    << "' stroke='black'/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double y = ymin + (ymax - ymin) * i / 5.0;
    f << "<text x='" << ML - 8 << "' y='" << py(y) + 4
      << "' text-anchor='end' font-size='11'>" << static_cast<int>(y * 100) / 100.0
      << "</text>\n";
    const double x = xmin + static_cast<double>(xmax - xmin) * i / 5.0;
    f << "<text x='" << px(x) << "' y='" << H - MB + 18
      << "' text-anchor='middle' font-size='11'>" << static_cast<int>(x * 10) / 10.0
      << "</text>\n";
  }
  f << "<text x='" << (ML + W - MR) / 2 << "' y='" << H - 12
    << "' text-anchor='middle' font-size='13'>" << axis << "</text>\n";
  f << "<text x='16' y='" << (MT + H - MB) / 2
    << "' text-anchor='middle' font-size='13' transform='rotate(-90 16 "
    << (MT + H - MB) / 2 << ")'>mean sum-SE (bits/s/Hz)</text>\n";

  int color = 0;
  for (auto& [scheme, pts] : series) {
    std::sort(pts.begin(), pts.end());
    f << "<polyline fill='none' stroke='" << palette[color % 5] << "' stroke-width='2' points='";
    for (const auto& [x, y] : pts) f << px(x) << "," << py(y) << " ";
    f << "'/>\n";
    for (const auto& [x, y] : pts)
      f << "<circle cx='" << px(x) << "' cy='" << py(y) << "' r='3' fill='"
        << palette[color % 5] << "'/>\n";
    f << "<text x='" << W - MR - 6 << "' y='" << MT + 16 * (color + 1)
      << "' text-anchor='end' font-size='12' fill='" << palette[color % 5] << "'>" << scheme
      << "</text>\n";
    ++color;
  }
  f << "</svg>\n";
}

}  // namespace cfmimo
