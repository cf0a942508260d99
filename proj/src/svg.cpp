#include "latmod/svg.hpp"

#include "latmod/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace latmod {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 480.0;
constexpr double kMarginLeft = 64.0;
constexpr double kMarginRight = 24.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 52.0;

struct Range {
  double lo = 0.0;
  double hi = 1.0;
  double span() const { return hi - lo; }
};

Range pad_range(double lo, double hi) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string fmt_tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

class SvgCanvas {
 public:
  SvgCanvas(const std::string& path, const std::string& title, const std::string& x_label,
            const std::string& y_label, Range x, Range y)
      : os_(path, std::ios::trunc), x_(x), y_(y) {
    if (!os_) throw IoError("cannot open '" + path + "' for writing");
    os_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    os_ << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
    os_ << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"15\">" << xml_escape(title) << "</text>\n";
    draw_axes(x_label, y_label);
  }

  double px(double v) const {
    return kMarginLeft + (v - x_.lo) / x_.span() * (kWidth - kMarginLeft - kMarginRight);
  }
  double py(double v) const {
    return kHeight - kMarginBottom - (v - y_.lo) / y_.span() * (kHeight - kMarginTop - kMarginBottom);
  }

  void circle(double x, double y, const std::string& color) {
    os_ << "<circle cx=\"" << fmt(px(x)) << "\" cy=\"" << fmt(py(y))
        << "\" r=\"2.5\" fill=\"" << color << "\" fill-opacity=\"0.7\"/>\n";
  }

  void bar(double x0, double x1, double height, const std::string& color) {
    const double top = py(height);
    const double bottom = py(0.0);
    os_ << "<rect x=\"" << fmt(px(x0)) << "\" y=\"" << fmt(top) << "\" width=\""
        << fmt(px(x1) - px(x0)) << "\" height=\"" << fmt(std::max(0.0, bottom - top))
        << "\" fill=\"" << color << "\" fill-opacity=\"0.55\"/>\n";
  }

  void legend(const std::vector<std::pair<std::string, std::string>>& entries) {
    double y = kMarginTop + 8.0;
    for (const auto& [name, color] : entries) {
      const double x = kWidth - kMarginRight - 150.0;
      os_ << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y - 9) << "\" width=\"12\" height=\"12\" "
          << "fill=\"" << color << "\"/>\n";
      os_ << "<text x=\"" << fmt(x + 18) << "\" y=\"" << fmt(y + 2)
          << "\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(name) << "</text>\n";
      y += 18.0;
    }
  }

  void finish() { os_ << "</svg>\n"; }

 private:
  void draw_axes(const std::string& x_label, const std::string& y_label) {
    const double x0 = kMarginLeft, x1 = kWidth - kMarginRight;
    const double y0 = kHeight - kMarginBottom, y1 = kMarginTop;
    os_ << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0
        << "\" stroke=\"black\"/>\n";
    os_ << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1
        << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 5; ++t) {
      const double fx = x_.lo + x_.span() * t / 5.0;
      const double fy = y_.lo + y_.span() * t / 5.0;
      os_ << "<line x1=\"" << fmt(px(fx)) << "\" y1=\"" << y0 << "\" x2=\"" << fmt(px(fx))
          << "\" y2=\"" << y0 + 5 << "\" stroke=\"black\"/>\n";
      os_ << "<text x=\"" << fmt(px(fx)) << "\" y=\"" << y0 + 20
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
          << fmt_tick(fx) << "</text>\n";
      os_ << "<line x1=\"" << x0 - 5 << "\" y1=\"" << fmt(py(fy)) << "\" x2=\"" << x0
          << "\" y2=\"" << fmt(py(fy)) << "\" stroke=\"black\"/>\n";
      os_ << "<text x=\"" << x0 - 8 << "\" y=\"" << fmt(py(fy) + 4)
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
          << fmt_tick(fy) << "</text>\n";
    }
    os_ << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 12
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
        << xml_escape(x_label) << "</text>\n";
    os_ << "<text x=\"16\" y=\"" << (y0 + y1) / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        << "transform=\"rotate(-90 16 " << (y0 + y1) / 2 << ")\">" << xml_escape(y_label)
        << "</text>\n";
  }

  std::ofstream os_;
  Range x_, y_;
};

}  // namespace

std::string series_color(std::size_t index) {
  static const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                   "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  return kPalette[index % (sizeof(kPalette) / sizeof(kPalette[0]))];
}

void write_scatter_svg(const std::string& path, const std::string& title,
                       const std::string& x_label, const std::string& y_label,
                       const std::vector<SvgSeries>& series) {
  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_min = x_min, y_max = -x_min;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  }
  if (!std::isfinite(x_min)) {
    x_min = y_min = 0.0;
    x_max = y_max = 1.0;
  }
  SvgCanvas canvas(path, title, x_label, y_label, pad_range(x_min, x_max),
                   pad_range(y_min, y_max));
  std::vector<std::pair<std::string, std::string>> legend;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) canvas.circle(x, y, s.color);
    legend.emplace_back(s.name, s.color);
  }
  canvas.legend(legend);
  canvas.finish();
}

void write_histogram_svg(const std::string& path, const std::string& title,
                         const std::string& x_label, const std::string& y_label,
                         const std::vector<SvgHistSeries>& series) {
  double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
  double y_max = 0.0;
  for (const auto& s : series) {
    if (s.edges.size() != s.heights.size() + 1) {
      throw ValidationError("write_histogram_svg: edges must be heights + 1");
    }
    if (!s.edges.empty()) {
      x_min = std::min(x_min, s.edges.front());
      x_max = std::max(x_max, s.edges.back());
    }
    for (double h : s.heights) y_max = std::max(y_max, h);
  }
  if (!std::isfinite(x_min)) {
    x_min = 0.0;
    x_max = 1.0;
  }
  if (y_max <= 0.0) y_max = 1.0;
  SvgCanvas canvas(path, title, x_label, y_label, pad_range(x_min, x_max),
                   Range{0.0, y_max * 1.05});
  std::vector<std::pair<std::string, std::string>> legend;
  for (const auto& s : series) {
    for (std::size_t b = 0; b < s.heights.size(); ++b) {
      if (s.heights[b] > 0.0) canvas.bar(s.edges[b], s.edges[b + 1], s.heights[b], s.color);
    }
    legend.emplace_back(s.name, s.color);
  }
  canvas.legend(legend);
  canvas.finish();
}

}  // namespace latmod
