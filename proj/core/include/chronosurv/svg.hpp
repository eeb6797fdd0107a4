#pragma once

#include <string>
#include <vector>

#include "chronosurv/grid.hpp"
#include "chronosurv/survstats.hpp"

namespace chronosurv {

// Minimal self-contained SVG plotting: axes, polylines, Kaplan-Meier step
// paths with censor tick marks, and a legend. No plotting dependency; the
// output is plain text readable by any browser.
class SvgPlot {
 public:
  SvgPlot(std::string title, std::string x_label, std::string y_label);

  void set_x_range(double lo, double hi);
  void set_y_range(double lo, double hi);

  // Step function: horizontal segments dropping at each x (KM style). The
  // emitted <path> carries class "km-step"; censor marks carry "censor-tick".
  void add_km_curve(const KMCurve& km, const std::string& color, const std::string& label,
                    double x_max);
  void add_polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                    const std::string& color, const std::string& label);

  void write(const std::string& path) const;

 private:
  struct Series {
    std::string color, label;
    bool step = false;
    std::vector<double> xs, ys;
    std::vector<double> censor_x, censor_y;
  };

  double map_x(double x) const;
  double map_y(double y) const;

  std::string title_, x_label_, y_label_;
  double x_lo_ = 0.0, x_hi_ = 1.0, y_lo_ = 0.0, y_hi_ = 1.0;
  std::vector<Series> series_;
};

// Grayscale P5 PGM, values clamped to [0,1] and scaled to 0..255.
void write_pgm(const Image2D& img, const std::string& path);

// Saliency overlay: channel-0 rendering with a heat overlay, emitted as
// coarse rect blocks so the SVG stays self-contained.
void write_saliency_svg(const Image2D& base, const Image2D& heat, const std::string& path,
                        int block = 8);

}  // namespace chronosurv
