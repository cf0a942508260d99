#ifndef LATMOD_REPORTS_HPP
#define LATMOD_REPORTS_HPP

#include "latmod/evaluation.hpp"
#include "latmod/svg.hpp"

#include <string>
#include <vector>

namespace latmod {

// Report files are named report_<kind>_<group>_<tag>.{csv,svg}. The pipeline
// passes a tag derived from the config hash so that reruns of the same
// configuration produce byte-identical artifacts; ad-hoc CLI invocations use
// a wall-clock timestamp instead.
std::string report_file_name(const std::string& kind, const std::string& group,
                             const std::string& tag, const std::string& extension);
std::string timestamp_tag();

void write_confusion_csv(const std::string& path, const ConfusionMatrix& cm);

void write_loss_curve_csv(const std::string& path,
                          const std::vector<std::string>& axis_names,
                          const std::vector<std::vector<double>>& rows);  // step,total,recon,per-axis

void write_llsep_csv(const std::string& path, const LlSeparationReport& report);
void write_llsep_svg(const std::string& path, const LlSeparationReport& report);

// Overlaid normalized histograms of similarity scores.
void write_scores_csv(const std::string& path, const std::vector<ScoreDistribution>& dists);
void write_scores_svg(const std::string& path, const std::string& title,
                      const std::vector<ScoreDistribution>& dists);

struct ProjectionSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

void write_projection_csv(const std::string& path, const PcaResult& pca,
                          const std::vector<std::string>& point_groups);
void write_projection_svg(const std::string& path, const std::string& title,
                          const PcaResult& pca, const std::vector<std::string>& point_groups);

}  // namespace latmod

#endif  // LATMOD_REPORTS_HPP
