#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace popshift::svg {

struct Series {
  std::string name;
  std::vector<double> y;
  std::vector<std::uint8_t> defined;  // empty = all defined
  std::vector<double> error;         // half-height of error bars; empty = none
  std::string color = "#1f77b4";
};

struct Marker {
  std::size_t x_index = 0;
  std::string color;  // fill of the circle
  std::string label;
};

struct LineChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<std::string> x_ticks;  // one label per index; sparse labels may be empty
  std::vector<Series> series;
  std::vector<Marker> markers;  // drawn on the first series
  std::optional<double> reference_y;  // horizontal guide, e.g. zero
};

struct ScatterChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<double> x;
  std::vector<double> y;
  std::optional<double> fit_slope;
  std::optional<double> fit_intercept;
  std::string annotation;
};

void write_line_chart(std::ostream& out, const LineChart& chart);
void write_scatter(std::ostream& out, const ScatterChart& chart);

std::string escape(const std::string& text);

} // namespace popshift::svg
