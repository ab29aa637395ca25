#include "trajrep/plots.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

namespace trajrep {
namespace {

constexpr double kSize = 800.0;
constexpr double kPad = 50.0;

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* cluster_colour(int cluster) {
  static constexpr std::array<const char*, 8> palette = {
      "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  const auto n = static_cast<std::size_t>(cluster < 0 ? 0 : cluster);
  return palette[n % palette.size()];
}

struct Box {
  double x0 = std::numeric_limits<double>::infinity();
  double x1 = -std::numeric_limits<double>::infinity();
  double y0 = x0;
  double y1 = x1;

  void add(double x, double y) {
    x0 = std::min(x0, x), x1 = std::max(x1, x);
    y0 = std::min(y0, y), y1 = std::max(y1, y);
  }
  bool empty() const { return !(x1 >= x0); }
};

// Maps data coordinates into the drawing area; `equal` keeps one scale.
struct Frame {
  Box box;
  double sx = 1.0, sy = 1.0;

  Frame(Box b, bool equal) : box(b) {
    if (box.empty()) box = {0.0, 1.0, 0.0, 1.0};
    if (box.x1 - box.x0 <= 0.0) box.x1 = box.x0 + 1.0;
    if (box.y1 - box.y0 <= 0.0) box.y1 = box.y0 + 1.0;
    const double span = kSize - 2.0 * kPad;
    sx = span / (box.x1 - box.x0);
    sy = span / (box.y1 - box.y0);
    if (equal) sx = sy = std::min(sx, sy);
  }
  double px(double x) const { return kPad + (x - box.x0) * sx; }
  double py(double y) const { return kSize - kPad - (y - box.y0) * sy; }
};

std::string header(const std::string& title, const Frame& f, const std::string& xlabel,
                   const std::string& ylabel) {
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(kSize) +
                  "\" height=\"" + fixed(kSize) + "\" viewBox=\"0 0 " + fixed(kSize) + " " +
                  fixed(kSize) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + fixed(kSize / 2) + "\" y=\"25\" text-anchor=\"middle\" font-size=\"16\">" +
       escape(title) + "</text>\n";
  s += "<rect x=\"" + fixed(kPad) + "\" y=\"" + fixed(kPad) + "\" width=\"" +
       fixed(kSize - 2 * kPad) + "\" height=\"" + fixed(kSize - 2 * kPad) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  s += "<text x=\"" + fixed(kSize / 2) + "\" y=\"" + fixed(kSize - 12) +
       "\" text-anchor=\"middle\" font-size=\"12\">" + escape(xlabel) + " [" +
       fixed(f.box.x0) + ", " + fixed(f.box.x1) + "]</text>\n";
  s += "<text x=\"14\" y=\"" + fixed(kSize / 2) + "\" font-size=\"12\" transform=\"rotate(-90 14 " +
       fixed(kSize / 2) + ")\" text-anchor=\"middle\">" + escape(ylabel) + " [" +
       fixed(f.box.y0) + ", " + fixed(f.box.y1) + "]</text>\n";
  return s;
}

template <typename Points>
std::string polyline(const Points& pts, const Frame& f, const char* colour, double width,
                     double opacity) {
  std::string s = "<polyline fill=\"none\" stroke=\"" + std::string(colour) +
                  "\" stroke-width=\"" + fixed(width) + "\" stroke-opacity=\"" +
                  fixed(opacity) + "\" points=\"";
  for (const auto& p : pts) s += fixed(f.px(p.x())) + "," + fixed(f.py(p.y())) + " ";
  s += "\"/>\n";
  return s;
}

// Each track as 2-D (x, y) pairs in plot space before framing.
using Curve = std::vector<Eigen::Vector2d>;

std::string curves_svg(const std::vector<Curve>& raw, const std::vector<Curve>& reps,
                       std::span<const WeightedTrajectory> meta, bool equal,
                       const std::string& title, const std::string& xl, const std::string& yl) {
  Box box;
  for (const auto* set : {&raw, &reps})
    for (const auto& c : *set)
      for (const auto& p : c) box.add(p.x(), p.y());
  const Frame f(box, equal);
  std::string s = header(title, f, xl, yl);
  for (const auto& c : raw) s += polyline(c, f, "#888888", 0.5, 0.35);
  for (std::size_t k = 0; k < reps.size(); ++k)
    s += polyline(reps[k], f, cluster_colour(meta[k].cluster), 0.8 + 6.0 * meta[k].weight, 0.9);
  s += "</svg>\n";
  return s;
}

Curve along_track(const std::vector<Eigen::Vector3d>& pts) {
  Curve c;
  double s = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i > 0) s += (pts[i].head<2>() - pts[i - 1].head<2>()).norm();
    c.emplace_back(s, pts[i].z());
  }
  return c;
}

std::vector<Eigen::Vector3d> positions(const Trajectory& t) {
  std::vector<Eigen::Vector3d> out;
  for (const auto& p : t.points) out.push_back(p.position());
  return out;
}

std::string ramp(double x) {
  // Light yellow through orange to dark red.
  static constexpr std::array<std::array<double, 3>, 4> stops = {
      {{255, 255, 204}, {254, 178, 76}, {240, 59, 32}, {128, 0, 38}}};
  x = std::clamp(x, 0.0, 1.0) * (stops.size() - 1);
  const auto i = std::min(static_cast<std::size_t>(x), stops.size() - 2);
  const double t = x - static_cast<double>(i);
  char buf[8];
  int rgb[3];
  for (int c = 0; c < 3; ++c)
    rgb[c] = static_cast<int>(std::lround(stops[i][static_cast<std::size_t>(c)] * (1 - t) +
                                          stops[i + 1][static_cast<std::size_t>(c)] * t));
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

}  // namespace

std::string svg_top_view(std::span<const Trajectory> raw, std::span<const WeightedTrajectory> reps,
                         const std::string& title) {
  std::vector<Curve> a, b;
  for (const auto& t : raw) {
    Curve c;
    for (const auto& p : t.points) c.emplace_back(p.east, p.north);
    a.push_back(std::move(c));
  }
  for (const auto& r : reps) {
    Curve c;
    for (const auto& p : r.points) c.emplace_back(p.x(), p.y());
    b.push_back(std::move(c));
  }
  return curves_svg(a, b, reps, true, title, "east (m)", "north (m)");
}

std::string svg_side_view(std::span<const Trajectory> raw, std::span<const WeightedTrajectory> reps,
                          const std::string& title) {
  std::vector<Curve> a, b;
  for (const auto& t : raw) a.push_back(along_track(positions(t)));
  for (const auto& r : reps) b.push_back(along_track(r.points));
  return curves_svg(a, b, reps, false, title, "along-track distance (m)", "altitude (m)");
}

std::string svg_heatmap(const FootprintGrid& grid, const std::string& title) {
  const auto& g = grid.spec;
  Box box;
  box.add(g.origin_east, g.origin_north);
  box.add(g.origin_east + g.nx * g.cell, g.origin_north + g.ny * g.cell);
  const Frame f(box, true);
  double top = 0.0;
  for (double v : grid.values) top = std::max(top, v);
  std::string s = header(title + " (max " + fixed(top) + "%)", f, "east (m)", "north (m)");
  const double w = g.cell * f.sx;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double v = grid.at(i, j);
      if (v <= 0.0) continue;
      const double x = f.px(g.origin_east + i * g.cell);
      const double y = f.py(g.origin_north + (j + 1) * g.cell);
      s += "<rect x=\"" + fixed(x) + "\" y=\"" + fixed(y) + "\" width=\"" + fixed(w + 0.2) +
           "\" height=\"" + fixed(w + 0.2) + "\" fill=\"" + ramp(top > 0 ? v / top : 0.0) +
           "\"/>\n";
    }
  s += "</svg>\n";
  return s;
}

}  // namespace trajrep
