#include "chronosurv/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "chronosurv/errors.hpp"

namespace chronosurv {

namespace {
constexpr double kWidth = 640.0, kHeight = 440.0;
constexpr double kLeft = 70.0, kRight = 24.0, kTop = 40.0, kBottom = 56.0;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}
}  // namespace

SvgPlot::SvgPlot(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

void SvgPlot::set_x_range(double lo, double hi) {
  x_lo_ = lo;
  x_hi_ = hi > lo ? hi : lo + 1.0;
}

void SvgPlot::set_y_range(double lo, double hi) {
  y_lo_ = lo;
  y_hi_ = hi > lo ? hi : lo + 1.0;
}

double SvgPlot::map_x(double x) const {
  return kLeft + (x - x_lo_) / (x_hi_ - x_lo_) * (kWidth - kLeft - kRight);
}

double SvgPlot::map_y(double y) const {
  return kHeight - kBottom - (y - y_lo_) / (y_hi_ - y_lo_) * (kHeight - kTop - kBottom);
}

void SvgPlot::add_km_curve(const KMCurve& km, const std::string& color, const std::string& label,
                           double x_max) {
  Series s;
  s.color = color;
  s.label = label;
  s.step = true;
  // Start at (0, 1) and drop at each event time.
  s.xs.push_back(0.0);
  s.ys.push_back(1.0);
  for (std::size_t i = 0; i < km.event_times.size(); ++i) {
    if (km.event_times[i] > x_max) break;
    s.xs.push_back(km.event_times[i]);
    s.ys.push_back(km.survival[i]);
  }
  s.xs.push_back(x_max);
  s.ys.push_back(s.ys.back());
  for (const double t : km.censor_marks) {
    if (t > x_max) continue;
    s.censor_x.push_back(t);
    s.censor_y.push_back(km.at(t));
  }
  series_.push_back(std::move(s));
}

void SvgPlot::add_polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                           const std::string& color, const std::string& label) {
  Series s;
  s.color = color;
  s.label = label;
  s.xs = xs;
  s.ys = ys;
  series_.push_back(std::move(s));
}

void SvgPlot::write(const std::string& path) const {
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << title_ << "</text>\n";

  // axes
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << kWidth - kRight
      << "\" y2=\"" << kHeight - kBottom << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
      << kHeight - kBottom << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = x_lo_ + (x_hi_ - x_lo_) * i / 5.0;
    const double yv = y_lo_ + (y_hi_ - y_lo_) * i / 5.0;
    out << "<line x1=\"" << map_x(xv) << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << map_x(xv)
        << "\" y2=\"" << kHeight - kBottom + 5 << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << map_x(xv) << "\" y=\"" << kHeight - kBottom + 20
        << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt(xv) << "</text>\n";
    out << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << map_y(yv) << "\" x2=\"" << kLeft
        << "\" y2=\"" << map_y(yv) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << kLeft - 9 << "\" y=\"" << map_y(yv) + 4
        << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(yv) << "</text>\n";
  }
  out << "<text x=\"" << (kLeft + kWidth - kRight) / 2 << "\" y=\"" << kHeight - 14
      << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label_ << "</text>\n";
  out << "<text x=\"18\" y=\"" << (kTop + kHeight - kBottom) / 2
      << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
      << (kTop + kHeight - kBottom) / 2 << ")\">" << y_label_ << "</text>\n";

  for (const Series& s : series_) {
    if (s.xs.empty()) continue;
    if (s.step) {
      std::ostringstream d;
      d << "M " << fmt(map_x(s.xs[0])) << ' ' << fmt(map_y(s.ys[0]));
      for (std::size_t i = 1; i < s.xs.size(); ++i) {
        d << " H " << fmt(map_x(s.xs[i]));  // run flat to the next time
        d << " V " << fmt(map_y(s.ys[i]));  // drop
      }
      out << "<path class=\"km-step\" d=\"" << d.str() << "\" fill=\"none\" stroke=\"" << s.color
          << "\" stroke-width=\"1.8\"/>\n";
      for (std::size_t i = 0; i < s.censor_x.size(); ++i) {
        const double cx = map_x(s.censor_x[i]);
        const double cy = map_y(s.censor_y[i]);
        out << "<line class=\"censor-tick\" x1=\"" << cx << "\" y1=\"" << cy - 4 << "\" x2=\"" << cx
            << "\" y2=\"" << cy + 4 << "\" stroke=\"" << s.color << "\" stroke-width=\"1.4\"/>\n";
      }
    } else {
      out << "<polyline class=\"series\" fill=\"none\" stroke=\"" << s.color
          << "\" stroke-width=\"1.8\" points=\"";
      for (std::size_t i = 0; i < s.xs.size(); ++i) {
        if (i != 0) out << ' ';
        out << fmt(map_x(s.xs[i])) << ',' << fmt(map_y(s.ys[i]));
      }
      out << "\"/>\n";
    }
  }

  // legend
  double ly = kTop + 8.0;
  for (const Series& s : series_) {
    if (s.label.empty()) continue;
    out << "<line class=\"legend\" x1=\"" << kWidth - kRight - 150 << "\" y1=\"" << ly << "\" x2=\""
        << kWidth - kRight - 124 << "\" y2=\"" << ly << "\" stroke=\"" << s.color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << kWidth - kRight - 118 << "\" y=\"" << ly + 4
        << "\" font-size=\"12\">" << s.label << "</text>\n";
    ly += 18.0;
  }
  out << "</svg>\n";

  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write svg: " + path);
  f << out.str();
  if (!f) throw IoError("svg write failed: " + path);
}

void write_pgm(const Image2D& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write pgm: " + path);
  out << "P5\n" << img.cols << ' ' << img.rows << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(img.cols));
  for (int r = 0; r < img.rows; ++r) {
    for (int c = 0; c < img.cols; ++c) {
      const double v = std::clamp(img.at(r, c), 0.0, 1.0);
      row[static_cast<std::size_t>(c)] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    out.write(reinterpret_cast<const char*>(row.data()), img.cols);
  }
  if (!out) throw IoError("pgm write failed: " + path);
}

void write_saliency_svg(const Image2D& base, const Image2D& heat, const std::string& path,
                        int block) {
  if (base.rows != heat.rows || base.cols != heat.cols)
    throw InvalidInputError("write_saliency_svg: size mismatch");
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << base.cols << "\" height=\""
      << base.rows << "\" viewBox=\"0 0 " << base.cols << ' ' << base.rows << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"black\"/>\n";

  double base_max = 0.0;
  for (const double v : base.v) base_max = std::max(base_max, v);
  const double base_scale = base_max > 0.0 ? 1.0 / base_max : 0.0;

  for (int r = 0; r < base.rows; r += block) {
    for (int c = 0; c < base.cols; c += block) {
      double b = 0.0, h = 0.0;
      int n = 0;
      for (int i = r; i < std::min(base.rows, r + block); ++i)
        for (int j = c; j < std::min(base.cols, c + block); ++j) {
          b += base.at(i, j);
          h = std::max(h, heat.at(i, j));
          ++n;
        }
      b = b / n * base_scale;
      const int gray = static_cast<int>(std::lround(std::clamp(b, 0.0, 1.0) * 255.0));
      out << "<rect x=\"" << c << "\" y=\"" << r << "\" width=\"" << block << "\" height=\""
          << block << "\" fill=\"rgb(" << gray << ',' << gray << ',' << gray << ")\"/>\n";
      if (h > 1e-6) {
        out << "<rect class=\"heat\" x=\"" << c << "\" y=\"" << r << "\" width=\"" << block
            << "\" height=\"" << block << "\" fill=\"red\" fill-opacity=\"" << fmt(0.6 * h)
            << "\"/>\n";
      }
    }
  }
  out << "</svg>\n";
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write svg: " + path);
  f << out.str();
  if (!f) throw IoError("svg write failed: " + path);
}

}  // namespace chronosurv
