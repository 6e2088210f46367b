#include "lio/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "lio/csv.hpp"
#include "lio/errors.hpp"

namespace lio {

namespace {

const char* kPalette[] = {"#2563eb", "#dc2626", "#059669", "#d97706",
                          "#7c3aed", "#0891b2", "#be185d", "#4d7c0f"};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

Range data_range(const std::vector<const std::vector<double>*>& columns,
                 bool from_zero) {
  Range r{std::numeric_limits<double>::infinity(),
          -std::numeric_limits<double>::infinity()};
  for (const auto* col : columns)
    for (double v : *col) {
      r.lo = std::min(r.lo, v);
      r.hi = std::max(r.hi, v);
    }
  if (!std::isfinite(r.lo) || !std::isfinite(r.hi)) return {0.0, 1.0};
  if (from_zero) r.lo = std::min(r.lo, 0.0);
  if (r.hi == r.lo) {
    r.lo -= 1.0;
    r.hi += 1.0;
  }
  double pad = 0.05 * (r.hi - r.lo);
  if (!from_zero || r.lo < 0.0) r.lo -= pad;
  r.hi += pad;
  return r;
}

// tick step of the form {1,2,5} * 10^k closest to range/target from below
std::vector<double> ticks(const Range& r, int target = 6) {
  double raw = (r.hi - r.lo) / target;
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (mag * m >= raw) {
      step = mag * m;
      break;
    }
  std::vector<double> out;
  double t = std::ceil(r.lo / step) * step;
  for (; t <= r.hi + 1e-9 * step; t += step) out.push_back(t == 0.0 ? 0.0 : t);
  return out;
}

struct Mapper {
  Range rx, ry;
  double x0, x1, y0, y1;  // pixel box; y grows downward

  double px(double x) const { return x0 + (x - rx.lo) / (rx.hi - rx.lo) * (x1 - x0); }
  double py(double y) const { return y1 - (y - ry.lo) / (ry.hi - ry.lo) * (y1 - y0); }
};

void draw_axes(std::ostringstream& s, const Mapper& m, const std::string& title,
               const std::string& xl, const std::string& yl) {
  s << "<rect x='" << num(m.x0) << "' y='" << num(m.y0) << "' width='"
    << num(m.x1 - m.x0) << "' height='" << num(m.y1 - m.y0)
    << "' fill='white' stroke='#374151'/>\n";
  for (double t : ticks(m.rx)) {
    double x = m.px(t);
    s << "<line x1='" << num(x) << "' y1='" << num(m.y0) << "' x2='" << num(x)
      << "' y2='" << num(m.y1) << "' stroke='#e5e7eb'/>\n";
    s << "<text x='" << num(x) << "' y='" << num(m.y1 + 16)
      << "' font-size='11' text-anchor='middle' fill='#374151'>" << num(t)
      << "</text>\n";
  }
  for (double t : ticks(m.ry)) {
    double y = m.py(t);
    s << "<line x1='" << num(m.x0) << "' y1='" << num(y) << "' x2='" << num(m.x1)
      << "' y2='" << num(y) << "' stroke='#e5e7eb'/>\n";
    s << "<text x='" << num(m.x0 - 6) << "' y='" << num(y + 4)
      << "' font-size='11' text-anchor='end' fill='#374151'>" << num(t)
      << "</text>\n";
  }
  s << "<rect x='" << num(m.x0) << "' y='" << num(m.y0) << "' width='"
    << num(m.x1 - m.x0) << "' height='" << num(m.y1 - m.y0)
    << "' fill='none' stroke='#374151'/>\n";
  double cx = (m.x0 + m.x1) / 2;
  s << "<text x='" << num(cx) << "' y='20' font-size='14' font-weight='bold' "
       "text-anchor='middle' fill='#111827'>"
    << xml_escape(title) << "</text>\n";
  s << "<text x='" << num(cx) << "' y='" << num(m.y1 + 36)
    << "' font-size='12' text-anchor='middle' fill='#111827'>" << xml_escape(xl)
    << "</text>\n";
  s << "<text x='16' y='" << num((m.y0 + m.y1) / 2)
    << "' font-size='12' text-anchor='middle' fill='#111827' transform='rotate(-90 16 "
    << num((m.y0 + m.y1) / 2) << ")'>" << xml_escape(yl) << "</text>\n";
}

// piecewise ramp deep blue -> teal -> yellow
std::string ramp_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  struct Anchor {
    double p;
    int r, g, b;
  };
  static const Anchor anchors[] = {
      {0.0, 68, 1, 84}, {0.33, 49, 104, 142}, {0.66, 53, 183, 121}, {1.0, 253, 231, 37}};
  const Anchor* a = &anchors[0];
  const Anchor* b = &anchors[3];
  for (std::size_t i = 0; i + 1 < std::size(anchors); ++i)
    if (t >= anchors[i].p && t <= anchors[i + 1].p) {
      a = &anchors[i];
      b = &anchors[i + 1];
      break;
    }
  double u = (b->p == a->p) ? 0.0 : (t - a->p) / (b->p - a->p);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                static_cast<int>(std::lround(a->r + u * (b->r - a->r))),
                static_cast<int>(std::lround(a->g + u * (b->g - a->g))),
                static_cast<int>(std::lround(a->b + u * (b->b - a->b))));
  return buf;
}

}  // namespace

std::string render_line_plot(const PlotSpec& spec) {
  if (spec.series.empty()) throw ArgumentError("render_line_plot: no series");
  for (const auto& s : spec.series)
    if (s.x.size() != s.y.size())
      throw ArgumentError("render_line_plot: series x/y length mismatch");

  std::vector<const std::vector<double>*> xs, ys;
  for (const auto& s : spec.series) {
    xs.push_back(&s.x);
    ys.push_back(&s.y);
  }
  Mapper m;
  m.rx = data_range(xs, false);
  m.ry = data_range(ys, spec.y_from_zero);
  m.x0 = 64;
  m.x1 = spec.width - 20;
  m.y0 = 32;
  m.y1 = spec.height - 48;

  std::ostringstream s;
  s << "<svg xmlns='http://www.w3.org/2000/svg' width='" << spec.width
    << "' height='" << spec.height << "' viewBox='0 0 " << spec.width << " "
    << spec.height << "' font-family='Helvetica,Arial,sans-serif'>\n";
  s << "<rect width='100%' height='100%' fill='white'/>\n";
  draw_axes(s, m, spec.title, spec.x_label, spec.y_label);

  for (std::size_t i = 0; i < spec.series.size(); ++i) {
    const auto& ser = spec.series[i];
    std::string color =
        ser.color.empty() ? kPalette[i % std::size(kPalette)] : ser.color;
    if (ser.draw_line && ser.x.size() > 1) {
      s << "<polyline fill='none' stroke='" << color << "' stroke-width='2' points='";
      for (std::size_t p = 0; p < ser.x.size(); ++p)
        s << num(m.px(ser.x[p])) << "," << num(m.py(ser.y[p])) << " ";
      s << "'/>\n";
    }
    if (ser.draw_points)
      for (std::size_t p = 0; p < ser.x.size(); ++p)
        s << "<circle cx='" << num(m.px(ser.x[p])) << "' cy='" << num(m.py(ser.y[p]))
          << "' r='3' fill='" << color << "'/>\n";
  }

  double lx = m.x0 + 12, ly = m.y0 + 14;
  for (std::size_t i = 0; i < spec.series.size(); ++i) {
    const auto& ser = spec.series[i];
    if (ser.name.empty()) continue;
    std::string color =
        ser.color.empty() ? kPalette[i % std::size(kPalette)] : ser.color;
    s << "<line x1='" << num(lx) << "' y1='" << num(ly - 4) << "' x2='"
      << num(lx + 18) << "' y2='" << num(ly - 4) << "' stroke='" << color
      << "' stroke-width='3'/>\n";
    s << "<text x='" << num(lx + 24) << "' y='" << num(ly)
      << "' font-size='12' fill='#111827'>" << xml_escape(ser.name) << "</text>\n";
    ly += 16;
  }
  s << "</svg>\n";
  return s.str();
}

std::string render_colored_scatter(const ScatterSpec& spec) {
  if (spec.x.size() != spec.y.size() || spec.x.size() != spec.value.size())
    throw ArgumentError("render_colored_scatter: column length mismatch");
  if (spec.x.empty()) throw ArgumentError("render_colored_scatter: no points");

  Mapper m;
  m.rx = data_range({&spec.x}, false);
  m.ry = data_range({&spec.y}, false);
  m.x0 = 64;
  m.x1 = spec.width - 84;  // room for the colorbar
  m.y0 = 32;
  m.y1 = spec.height - 48;

  Range vr = data_range({&spec.value}, false);

  std::ostringstream s;
  s << "<svg xmlns='http://www.w3.org/2000/svg' width='" << spec.width
    << "' height='" << spec.height << "' viewBox='0 0 " << spec.width << " "
    << spec.height << "' font-family='Helvetica,Arial,sans-serif'>\n";
  s << "<rect width='100%' height='100%' fill='white'/>\n";
  draw_axes(s, m, spec.title, spec.x_label, spec.y_label);

  for (std::size_t i = 0; i < spec.x.size(); ++i) {
    double t = (spec.value[i] - vr.lo) / (vr.hi - vr.lo);
    s << "<circle cx='" << num(m.px(spec.x[i])) << "' cy='" << num(m.py(spec.y[i]))
      << "' r='4' fill='" << ramp_color(t) << "' stroke='#1f2937' stroke-width='0.4'/>\n";
  }

  double bx = spec.width - 64;
  int steps = 32;
  double bh = (m.y1 - m.y0) / steps;
  for (int i = 0; i < steps; ++i) {
    double t = 1.0 - (i + 0.5) / steps;
    s << "<rect x='" << num(bx) << "' y='" << num(m.y0 + i * bh)
      << "' width='14' height='" << num(bh + 0.5) << "' fill='" << ramp_color(t)
      << "'/>\n";
  }
  s << "<rect x='" << num(bx) << "' y='" << num(m.y0) << "' width='14' height='"
    << num(m.y1 - m.y0) << "' fill='none' stroke='#374151'/>\n";
  s << "<text x='" << num(bx + 7) << "' y='" << num(m.y0 - 8)
    << "' font-size='11' text-anchor='middle' fill='#111827'>"
    << xml_escape(spec.value_label) << "</text>\n";
  s << "<text x='" << num(bx + 18) << "' y='" << num(m.y0 + 10)
    << "' font-size='10' fill='#374151'>" << num(vr.hi) << "</text>\n";
  s << "<text x='" << num(bx + 18) << "' y='" << num(m.y1)
    << "' font-size='10' fill='#374151'>" << num(vr.lo) << "</text>\n";
  s << "</svg>\n";
  return s.str();
}

void write_svg(const std::string& path, const std::string& svg) {
  write_file(path, svg);
}

}  // namespace lio
