#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "core/error.hpp"

namespace icq::io {

namespace {

constexpr double kWidth = 640.0, kHeight = 480.0;
constexpr double kLeft = 72.0, kRight = 24.0, kTop = 44.0, kBottom = 56.0;
constexpr int kTicks = 5;

const char* const kPalette[] = {"#1f6fb4", "#d1495b", "#3a7d44", "#8a5fbf"};

std::string px(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", value);
  return buf;
}

std::string tick_label(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", value);
  return buf;
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out += c;
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void include(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (hi <= lo) { // flat data still gets a visible band
      const double bump = (lo == 0.0) ? 1.0 : 0.05 * std::abs(lo);
      lo -= bump;
      hi += bump;
    } else {
      const double bump = 0.04 * (hi - lo);
      lo -= bump;
      hi += bump;
    }
  }
};

} // namespace

void write_svg(const std::string& path, const Plot& plot) {
  require(!plot.series.empty(), "svg: plot has no series");
  Range xr, yr;
  for (const PlotSeries& s : plot.series) {
    require(!s.x.empty(), "svg: series '" + s.label + "' has no points");
    require(s.x.size() == s.y.size(),
            "svg: series '" + s.label + "' has mismatched x/y lengths");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      require(std::isfinite(s.x[i]) && std::isfinite(s.y[i]),
              "svg: series '" + s.label + "' has a non-finite point");
      xr.include(s.x[i]);
      yr.include(s.y[i]);
    }
  }
  xr.pad();
  yr.pad();

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const auto to_x = [&](double v) {
    return kLeft + (v - xr.lo) / (xr.hi - xr.lo) * plot_w;
  };
  const auto to_y = [&](double v) {
    return kTop + plot_h - (v - yr.lo) / (yr.hi - yr.lo) * plot_h;
  };

  std::ofstream out(path);
  require(out.good(), "svg: cannot open '" + path + "' for writing");

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\""
      << kWidth << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' '
      << kHeight << "\">\n"
      << "<rect width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" fill=\"#ffffff\"/>\n";

  // frame
  out << "<rect x=\"" << px(kLeft) << "\" y=\"" << px(kTop) << "\" width=\""
      << px(plot_w) << "\" height=\"" << px(plot_h)
      << "\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1\"/>\n";

  // ticks and grid
  for (int i = 0; i < kTicks; ++i) {
    const double f = static_cast<double>(i) / (kTicks - 1);
    const double xv = xr.lo + f * (xr.hi - xr.lo);
    const double yv = yr.lo + f * (yr.hi - yr.lo);
    const double xp = to_x(xv);
    const double yp = to_y(yv);
    out << "<line x1=\"" << px(xp) << "\" y1=\"" << px(kTop + plot_h) << "\" x2=\""
        << px(xp) << "\" y2=\"" << px(kTop + plot_h + 5) << "\" stroke=\"#444444\"/>\n"
        << "<text x=\"" << px(xp) << "\" y=\"" << px(kTop + plot_h + 20)
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">"
        << tick_label(xv) << "</text>\n"
        << "<line x1=\"" << px(kLeft - 5) << "\" y1=\"" << px(yp) << "\" x2=\""
        << px(kLeft) << "\" y2=\"" << px(yp) << "\" stroke=\"#444444\"/>\n"
        << "<text x=\"" << px(kLeft - 8) << "\" y=\"" << px(yp + 4)
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">"
        << tick_label(yv) << "</text>\n";
  }

  // series
  for (std::size_t si = 0; si < plot.series.size(); ++si) {
    const PlotSeries& s = plot.series[si];
    const char* color = kPalette[si % (sizeof kPalette / sizeof kPalette[0])];
    if (s.markers) {
      for (std::size_t i = 0; i < s.x.size(); ++i)
        out << "<circle cx=\"" << px(to_x(s.x[i])) << "\" cy=\"" << px(to_y(s.y[i]))
            << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
    } else {
      out << "<polyline fill=\"none\" stroke=\"" << color
          << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (i) out << ' ';
        out << px(to_x(s.x[i])) << ',' << px(to_y(s.y[i]));
      }
      out << "\"/>\n";
    }
    if (!s.label.empty()) {
      const double ly = kTop + 16.0 + 16.0 * static_cast<double>(si);
      out << "<rect x=\"" << px(kLeft + plot_w - 150) << "\" y=\"" << px(ly - 9)
          << "\" width=\"12\" height=\"4\" fill=\"" << color << "\"/>\n"
          << "<text x=\"" << px(kLeft + plot_w - 134) << "\" y=\"" << px(ly)
          << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(s.label)
          << "</text>\n";
    }
  }

  // labels and title
  out << "<text x=\"" << px(kLeft + plot_w / 2) << "\" y=\"" << px(kHeight - 14)
      << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">"
      << escape(plot.x_label) << "</text>\n"
      << "<text x=\"18\" y=\"" << px(kTop + plot_h / 2)
      << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
         "transform=\"rotate(-90 18 "
      << px(kTop + plot_h / 2) << ")\">" << escape(plot.y_label) << "</text>\n"
      << "<text x=\"" << px(kLeft + plot_w / 2) << "\" y=\"26\" "
      << "font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">"
      << escape(plot.title) << "</text>\n</svg>\n";

  out.flush();
  require(out.good(), "svg: write to '" + path + "' failed");
}

} // namespace icq::io
