#pragma once

#include <string>
#include <vector>

#include "netmpg/types.hpp"

namespace netmpg {

// Minimal deterministic SVG line/scatter plotting. Output depends only on the
// data, so re-rendering the same inputs yields identical bytes.
class SvgPlot {
 public:
  SvgPlot(std::string title, std::string x_label, std::string y_label);

  void add_line(const std::vector<Real>& x, const std::vector<Real>& y,
                const std::string& name, const std::string& color);
  void add_markers(const std::vector<Real>& x, const std::vector<Real>& y,
                   const std::string& name, const std::string& color);
  void set_log_y(bool on) { log_y_ = on; }

  std::string render() const;
  void write_file(const std::string& path) const;

 private:
  struct Series {
    std::vector<Real> x, y;
    std::string name, color;
    bool markers = false;
  };
  std::string title_, x_label_, y_label_;
  std::vector<Series> series_;
  bool log_y_ = false;
};

} // namespace netmpg
