#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace fpsis {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool log_y = false;  // non-positive values are dropped
  int width = 640;
  int height = 420;
};

/// Line plot with axes, ticks and a legend. Output depends only on the inputs.
void write_svg_plot(const PlotSpec& spec, std::span<const Series> series, std::ostream& out);

}  // namespace fpsis
