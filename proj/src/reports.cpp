#include "latmod/reports.hpp"

#include "latmod/core.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>

namespace latmod {

std::string report_file_name(const std::string& kind, const std::string& group,
                             const std::string& tag, const std::string& extension) {
  return "report_" + kind + "_" + group + "_" + tag + "." + extension;
}

std::string timestamp_tag() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d%02d%02dT%02d%02d%02d", tm_utc.tm_year + 1900,
                tm_utc.tm_mon + 1, tm_utc.tm_mday, tm_utc.tm_hour, tm_utc.tm_min, tm_utc.tm_sec);
  return buf;
}

namespace {

std::ofstream open_csv(const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  return os;
}

}  // namespace

void write_confusion_csv(const std::string& path, const ConfusionMatrix& cm) {
  auto os = open_csv(path);
  os << "true\\predicted";
  for (const auto& name : cm.class_names) os << "," << name;
  os << ",recall\n";
  for (int t = 0; t < cm.counts.rows(); ++t) {
    os << cm.class_names[static_cast<std::size_t>(t)];
    for (int p = 0; p < cm.counts.cols(); ++p) os << "," << cm.counts(t, p);
    os << "," << format_double(cm.per_class_recall[static_cast<std::size_t>(t)]) << "\n";
  }
  os << "accuracy," << format_double(cm.accuracy) << "\n";
}

void write_loss_curve_csv(const std::string& path, const std::vector<std::string>& axis_names,
                          const std::vector<std::vector<double>>& rows) {
  auto os = open_csv(path);
  os << "step,total,recon";
  for (const auto& name : axis_names) os << ",contrastive_" << name;
  os << "\n";
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) os << ",";
      if (c == 0) {
        os << static_cast<long long>(row[c]);
      } else {
        os << format_double(row[c]);
      }
    }
    os << "\n";
  }
}

void write_llsep_csv(const std::string& path, const LlSeparationReport& report) {
  auto os = open_csv(path);
  os << "true_group,ll_" << report.group_a << ",ll_" << report.group_b << ",predicted\n";
  for (const auto& row : report.rows) {
    os << (row.true_group == 0 ? report.group_a : report.group_b) << ","
       << format_double(row.ll_a) << "," << format_double(row.ll_b) << ","
       << (row.predicted == 0 ? report.group_a : report.group_b) << "\n";
  }
  os << "accuracy," << format_double(report.accuracy) << ",,\n";
}

void write_llsep_svg(const std::string& path, const LlSeparationReport& report) {
  SvgSeries series_a{report.group_a, series_color(0), {}};
  SvgSeries series_b{report.group_b, series_color(1), {}};
  for (const auto& row : report.rows) {
    (row.true_group == 0 ? series_a : series_b).points.emplace_back(row.ll_a, row.ll_b);
  }
  write_scatter_svg(path, "log-likelihood separation: " + report.group_a + " vs " + report.group_b,
                    "LL under " + report.group_a, "LL under " + report.group_b,
                    {series_a, series_b});
}

void write_scores_csv(const std::string& path, const std::vector<ScoreDistribution>& dists) {
  auto os = open_csv(path);
  os << "bin_lo,bin_hi";
  for (const auto& d : dists) os << ",count_" << d.label << ",frac_" << d.label;
  os << "\n";
  const std::size_t n_bins = dists.empty() ? 0 : dists.front().bins.size();
  for (std::size_t b = 0; b < n_bins; ++b) {
    const double lo = -2.0 + static_cast<double>(b) * dists.front().bin_width;
    os << format_double(lo) << "," << format_double(lo + dists.front().bin_width);
    for (const auto& d : dists) {
      const double frac = d.count > 0 ? static_cast<double>(d.bins[b]) / d.count : 0.0;
      os << "," << d.bins[b] << "," << format_double(frac);
    }
    os << "\n";
  }
}

void write_scores_svg(const std::string& path, const std::string& title,
                      const std::vector<ScoreDistribution>& dists) {
  std::vector<SvgHistSeries> series;
  for (std::size_t s = 0; s < dists.size(); ++s) {
    SvgHistSeries hs;
    hs.name = dists[s].label;
    hs.color = series_color(s);
    for (std::size_t b = 0; b <= dists[s].bins.size(); ++b) {
      hs.edges.push_back(-2.0 + static_cast<double>(b) * dists[s].bin_width);
    }
    for (std::int64_t c : dists[s].bins) {
      hs.heights.push_back(dists[s].count > 0 ? static_cast<double>(c) / dists[s].count : 0.0);
    }
    series.push_back(std::move(hs));
  }
  write_histogram_svg(path, title, "similarity score", "fraction", series);
}

void write_projection_csv(const std::string& path, const PcaResult& pca,
                          const std::vector<std::string>& point_groups) {
  auto os = open_csv(path);
  os << "pc1,pc2,group\n";
  for (Eigen::Index i = 0; i < pca.coords.rows(); ++i) {
    os << format_double(pca.coords(i, 0)) << "," << format_double(pca.coords(i, 1)) << ","
       << point_groups[static_cast<std::size_t>(i)] << "\n";
  }
  os << "explained_fraction," << format_double(pca.explained_fractions(0)) << ","
     << format_double(pca.explained_fractions(1)) << "\n";
}

void write_projection_svg(const std::string& path, const std::string& title,
                          const PcaResult& pca, const std::vector<std::string>& point_groups) {
  std::map<std::string, SvgSeries> by_group;
  std::size_t color_index = 0;
  for (Eigen::Index i = 0; i < pca.coords.rows(); ++i) {
    const std::string& g = point_groups[static_cast<std::size_t>(i)];
    auto it = by_group.find(g);
    if (it == by_group.end()) {
      it = by_group.emplace(g, SvgSeries{g, series_color(color_index++), {}}).first;
    }
    it->second.points.emplace_back(pca.coords(i, 0), pca.coords(i, 1));
  }
  std::vector<SvgSeries> series;
  for (auto& [name, s] : by_group) series.push_back(std::move(s));
  write_scatter_svg(path, title, "PC 1", "PC 2", series);
}

}  // namespace latmod
