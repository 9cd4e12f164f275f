#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "pcsd/error.hpp"
#include "pcsd/harness.hpp"
#include "pcsd/kvconfig.hpp"

namespace pcsd {
namespace {

using Point = std::pair<double, double>;

double round_to(double v, double scale) { return std::round(v * scale) / scale; }

// Zig-zag rows of half hexagons. Adjacent rows share their flat edges, so
// together they trace a honeycomb. Odd rows run right to left.
std::vector<Point> honeycomb(double side, double cell, double inset, bool swap_axes) {
  const double lo = inset;
  const double hi = side - inset;
  const double a = cell / 2.0;
  const double h = a * std::sqrt(3.0) / 2.0;
  constexpr double eps = 1e-9;
  std::vector<Point> path;
  for (std::size_t r = 0; lo + static_cast<double>(r + 1) * h <= hi + eps; ++r) {
    const double ylo = lo + static_cast<double>(r) * h;
    const double yhi = ylo + h;
    const bool high_first = r % 2 == 1;
    const auto level = [&](std::size_t phase) { return ((phase % 2 == 0) == high_first) ? yhi : ylo; };
    std::vector<Point> row{{lo, level(0)}};
    double x = lo;
    std::size_t phase = 0;
    while (x < hi - eps) {
      x = std::min(x + a, hi);
      row.emplace_back(x, level(phase));
      if (x >= hi - eps) break;
      x = std::min(x + a / 2.0, hi);
      row.emplace_back(x, level(++phase));
    }
    if (r % 2 == 1) path.insert(path.end(), row.rbegin(), row.rend());
    else path.insert(path.end(), row.begin(), row.end());
  }
  if (swap_axes) {
    for (auto& p : path) std::swap(p.first, p.second);
  }
  return path;
}

}  // namespace

GCodeProgram benchmark_object(const BenchmarkOptions& o) {
  if (o.layers == 0 || !(o.side > 2.0 * o.infill_inset) || !(o.cell > 0.0) || !(o.layer_height > 0.0) ||
      !(o.print_feed > 0.0) || !(o.travel_feed > 0.0) || !(o.z_feed > 0.0) || !(o.extrusion_per_mm >= 0.0) ||
      !(o.perimeter_inset >= 0.0) || !(o.side > 2.0 * o.perimeter_inset)) {
    throw Error(Errc::invalid_argument, "invalid benchmark options");
  }
  std::string text = "G21\nG90\nM82\nG92 E0\nM107\n";
  double e = 0.0;
  Point pos{0.0, 0.0};
  const auto xy = [](const Point& p) {
    return "X" + format_number(round_to(p.first, 1e4)) + " Y" + format_number(round_to(p.second, 1e4));
  };
  const auto extrude_to = [&](const Point& p, bool with_feed) {
    const double d = std::hypot(p.first - pos.first, p.second - pos.second);
    if (d < 1e-9) return false;
    e += d * o.extrusion_per_mm;
    text += "G1 " + xy(p) + " E" + format_number(round_to(e, 1e5));
    if (with_feed) text += " F" + format_number(o.print_feed);
    text += "\n";
    pos = p;
    return true;
  };

  for (std::size_t layer = 0; layer < o.layers; ++layer) {
    text += ";LAYER:" + std::to_string(layer) + "\n";
    text += "G0 Z" + format_number(round_to(o.layer_height * static_cast<double>(layer + 1), 1e3)) + " F" +
            format_number(o.z_feed) + "\n";

    const double lo = o.perimeter_inset;
    const double hi = o.side - o.perimeter_inset;
    const Point perimeter[] = {{lo, lo}, {hi, lo}, {hi, hi}, {lo, hi}, {lo, lo}};
    text += "G0 " + xy(perimeter[0]) + " F" + format_number(o.travel_feed) + "\n";
    pos = perimeter[0];
    bool first = true;
    for (std::size_t i = 1; i < 5; ++i) {
      if (extrude_to(perimeter[i], first)) first = false;
    }

    const auto infill = honeycomb(o.side, o.cell, o.infill_inset, layer % 2 == 1);
    if (infill.empty()) continue;
    text += "G0 " + xy(infill[0]) + " F" + format_number(o.travel_feed) + "\n";
    pos = infill[0];
    first = true;
    for (std::size_t i = 1; i < infill.size(); ++i) {
      if (extrude_to(infill[i], first)) first = false;
    }
  }
  return parse_gcode(text);
}

}  // namespace pcsd
