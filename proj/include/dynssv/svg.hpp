// Minimal SVG line-plot writer: polylines, filled bands, and labeled axes.
// Gaps (NaN) split lines instead of being interpolated.
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace dynssv {

class SvgPlot {
 public:
  SvgPlot(std::string title, std::string x_label, std::string y_label);

  void polyline(std::span<const double> x, std::span<const double> y,
                const std::string& color, double width = 1.0,
                double opacity = 1.0);
  // Filled region between lo and hi; NaN segments are skipped whole.
  void band(std::span<const double> x, std::span<const double> lo,
            std::span<const double> hi, const std::string& color,
            double opacity);

  std::string render(int pixel_width = 860, int pixel_height = 420) const;

 private:
  struct Series {
    bool filled = false;
    std::vector<double> x, y, y2;
    std::string color;
    double width = 1.0;
    double opacity = 1.0;
  };

  std::string title_, x_label_, y_label_;
  std::vector<Series> series_;
};

}  // namespace dynssv
