#pragma once

#include <string>
#include <vector>

namespace lio {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  std::string color;  // empty picks from the default palette
  bool draw_line = true;
  bool draw_points = true;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  int width = 760;
  int height = 480;
  bool y_from_zero = false;
  std::vector<PlotSeries> series;
};

/// Line/marker chart with axes, ticks, and a legend.  Self-contained SVG.
std::string render_line_plot(const PlotSpec& spec);

struct ScatterSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::string value_label;  // colorbar caption
  int width = 640;
  int height = 560;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> value;  // drives the point color ramp
};

/// Scatter chart with a continuous color ramp over `value`.
std::string render_colored_scatter(const ScatterSpec& spec);

void write_svg(const std::string& path, const std::string& svg);

}  // namespace lio
