#ifndef LATMOD_SVG_HPP
#define LATMOD_SVG_HPP

#include <string>
#include <utility>
#include <vector>

namespace latmod {

// Minimal deterministic SVG emission for scatter and histogram reports.

struct SvgSeries {
  std::string name;
  std::string color;  // e.g. "#1f77b4"
  std::vector<std::pair<double, double>> points;
};

struct SvgHistSeries {
  std::string name;
  std::string color;
  std::vector<double> edges;    // n_bins + 1 ascending edges
  std::vector<double> heights;  // n_bins
};

void write_scatter_svg(const std::string& path, const std::string& title,
                       const std::string& x_label, const std::string& y_label,
                       const std::vector<SvgSeries>& series);

void write_histogram_svg(const std::string& path, const std::string& title,
                         const std::string& x_label, const std::string& y_label,
                         const std::vector<SvgHistSeries>& series);

// Default qualitative palette, cycled by index.
std::string series_color(std::size_t index);

}  // namespace latmod

#endif  // LATMOD_SVG_HPP
