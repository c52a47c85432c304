#include "netmpg/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace netmpg {

namespace {

std::string fmt(Real v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

} // namespace

SvgPlot::SvgPlot(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

void SvgPlot::add_line(const std::vector<Real>& x, const std::vector<Real>& y,
                       const std::string& name, const std::string& color) {
  if (x.size() != y.size()) throw std::invalid_argument("SvgPlot: x/y size mismatch");
  series_.push_back({x, y, name, color, false});
}

void SvgPlot::add_markers(const std::vector<Real>& x, const std::vector<Real>& y,
                          const std::string& name, const std::string& color) {
  if (x.size() != y.size()) throw std::invalid_argument("SvgPlot: x/y size mismatch");
  series_.push_back({x, y, name, color, true});
}

std::string SvgPlot::render() const {
  constexpr Real W = 720, H = 480;
  constexpr Real ML = 72, MR = 24, MT = 40, MB = 56;
  const Real plot_w = W - ML - MR, plot_h = H - MT - MB;

  Real xmin = std::numeric_limits<Real>::infinity(), xmax = -xmin;
  Real ymin = xmin, ymax = -xmin;
  for (const auto& s : series_) {
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      Real yv = s.y[k];
      if (log_y_ && yv <= 0.0) continue;
      if (log_y_) yv = std::log10(yv);
      xmin = std::min(xmin, s.x[k]);
      xmax = std::max(xmax, s.x[k]);
      ymin = std::min(ymin, yv);
      ymax = std::max(ymax, yv);
    }
  }
  if (!(xmin <= xmax)) { xmin = 0; xmax = 1; }
  if (!(ymin <= ymax)) { ymin = 0; ymax = 1; }
  if (xmax == xmin) { xmax = xmin + 1; }
  if (ymax == ymin) { ymax = ymin + 1; ymin -= 1; }
  const Real ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  auto px = [&](Real x) { return ML + (x - xmin) / (xmax - xmin) * plot_w; };
  auto py = [&](Real y) {
    if (log_y_) y = std::log10(std::max(y, 1e-300));
    return MT + plot_h - (y - ymin) / (ymax - ymin) * plot_h;
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(W) + "\" height=\"" +
         fmt(H) + "\" viewBox=\"0 0 " + fmt(W) + " " + fmt(H) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fmt(W / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" "
         "font-family=\"sans-serif\">" + title_ + "</text>\n";

  // Axes and ticks.
  svg += "<rect x=\"" + fmt(ML) + "\" y=\"" + fmt(MT) + "\" width=\"" + fmt(plot_w) +
         "\" height=\"" + fmt(plot_h) + "\" fill=\"none\" stroke=\"black\"/>\n";
  constexpr int kTicks = 5;
  for (int t = 0; t <= kTicks; ++t) {
    const Real fx = xmin + (xmax - xmin) * t / kTicks;
    const Real gy = ymin + (ymax - ymin) * t / kTicks;
    const Real X = px(fx);
    const Real Y = MT + plot_h - (gy - ymin) / (ymax - ymin) * plot_h;
    svg += "<line x1=\"" + fmt(X) + "\" y1=\"" + fmt(MT + plot_h) + "\" x2=\"" + fmt(X) +
           "\" y2=\"" + fmt(MT + plot_h + 5) + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + fmt(X) + "\" y=\"" + fmt(MT + plot_h + 20) +
           "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">" + fmt(fx) +
           "</text>\n";
    svg += "<line x1=\"" + fmt(ML - 5) + "\" y1=\"" + fmt(Y) + "\" x2=\"" + fmt(ML) +
           "\" y2=\"" + fmt(Y) + "\" stroke=\"black\"/>\n";
    const std::string ylabel = log_y_ ? ("1e" + fmt(gy)) : fmt(gy);
    svg += "<text x=\"" + fmt(ML - 8) + "\" y=\"" + fmt(Y + 4) +
           "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" + ylabel +
           "</text>\n";
  }
  svg += "<text x=\"" + fmt(ML + plot_w / 2) + "\" y=\"" + fmt(H - 12) +
         "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">" + x_label_ +
         "</text>\n";
  svg += "<text x=\"16\" y=\"" + fmt(MT + plot_h / 2) +
         "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" transform=\"rotate(-90 16 " +
         fmt(MT + plot_h / 2) + ")\">" + y_label_ + "</text>\n";

  // Series.
  Real legend_y = MT + 14;
  for (const auto& s : series_) {
    if (s.markers) {
      for (std::size_t k = 0; k < s.x.size(); ++k) {
        if (log_y_ && s.y[k] <= 0.0) continue;
        svg += "<circle cx=\"" + fmt(px(s.x[k])) + "\" cy=\"" + fmt(py(s.y[k])) +
               "\" r=\"4\" fill=\"" + s.color + "\"/>\n";
      }
    } else {
      std::string pts;
      for (std::size_t k = 0; k < s.x.size(); ++k) {
        if (log_y_ && s.y[k] <= 0.0) continue;
        if (!pts.empty()) pts += ' ';
        pts += fmt(px(s.x[k])) + "," + fmt(py(s.y[k]));
      }
      svg += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + s.color +
             "\" stroke-width=\"1.5\"/>\n";
    }
    svg += "<rect x=\"" + fmt(ML + 8) + "\" y=\"" + fmt(legend_y - 8) +
           "\" width=\"10\" height=\"10\" fill=\"" + s.color + "\"/>\n";
    svg += "<text x=\"" + fmt(ML + 22) + "\" y=\"" + fmt(legend_y + 1) +
           "\" font-size=\"12\" font-family=\"sans-serif\">" + s.name + "</text>\n";
    legend_y += 16;
  }
  svg += "</svg>\n";
  return svg;
}

void SvgPlot::write_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("SvgPlot: cannot open " + path);
  out << render();
  if (!out) throw std::runtime_error("SvgPlot: write failed for " + path);
}

} // namespace netmpg
