#pragma once
// Minimal deterministic SVG 1.1 line/scatter plots: axes, five ticks per
// axis, axis labels, title, and one polyline or marker set per series.
// Enough to eyeball scans and waveforms; not a charting library.

#include <string>
#include <vector>

namespace icq::io {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool markers = false; // circles instead of a connected polyline
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
};

void write_svg(const std::string& path, const Plot& plot);

} // namespace icq::io
