#ifndef LATMOD_EVALUATION_HPP
#define LATMOD_EVALUATION_HPP

#include "latmod/core.hpp"
#include "latmod/gmm.hpp"

#include <string>
#include <vector>

namespace latmod {

// Multinomial logistic regression head; the last weight row is the bias.
struct SoftmaxClassifier {
  MatD weights;  // (q+1) x k
  double final_loss = 0.0;
  int epochs_run = 0;

  int dim() const { return static_cast<int>(weights.rows()) - 1; }
  int classes() const { return static_cast<int>(weights.cols()); }
};

// Full-batch gradient descent on cross-entropy from zero initialization
// (convex objective, so the fit is order-independent and deterministic; the
// seed parameter is accepted for interface stability but unused).
SoftmaxClassifier train_softmax_classifier(const MatD& X,
                                           const std::vector<std::uint16_t>& labels,
                                           int n_classes, int epochs, double lr,
                                           std::uint64_t seed = 0);

std::vector<std::uint16_t> classify_batch(const SoftmaxClassifier& clf, const MatD& X);

struct ConfusionMatrix {
  std::string axis;
  std::vector<std::string> class_names;
  Eigen::MatrixXi counts;  // true x predicted
  std::vector<double> per_class_recall;
  double accuracy = 0.0;
  int evaluated = 0;
};

ConfusionMatrix confusion_matrix(const SoftmaxClassifier& clf, const MatD& X,
                                 const std::vector<std::uint16_t>& true_labels,
                                 const std::string& axis_name,
                                 const std::vector<std::string>& class_names);

// S(u, v) = u.v / (|u||v|) - 1, spanning [-2, 0]; S(u, u) == 0 exactly.
double cosine_similarity_score(const VecD& u, const VecD& v);

enum class ScoreMode { within, between };

struct ScoreDistribution {
  std::string label;
  std::vector<std::int64_t> bins;  // histogram over [-2, 0]
  double bin_width = 0.02;
  std::int64_t count = 0;

  double lo() const { return -2.0; }
  double hi() const { return 0.0; }
};

// within: all unordered pairs of set_a; between: all cross pairs a x b.
ScoreDistribution score_distributions(const MatD& set_a, const MatD& set_b, ScoreMode mode,
                                      int n_bins = 100, const std::string& label = "");

// Overlap of two normalized histograms: sum over bins of min(p, q), in [0, 1].
double histogram_intersection(const ScoreDistribution& a, const ScoreDistribution& b);

struct LlSeparationReport {
  std::string group_a, group_b;
  struct Row {
    int true_group;  // 0 = a, 1 = b
    double ll_a, ll_b;
    int predicted;   // argmax, ties to 0
  };
  std::vector<Row> rows;
  double accuracy = 0.0;
};

LlSeparationReport ll_separation(const GmmModel& model_a, const GmmModel& model_b,
                                 const MatD& test_a, const MatD& test_b);

struct PcaResult {
  MatD coords;               // n x out_dim
  VecD explained_fractions;  // out_dim entries, non-increasing
  MatD components;           // q x out_dim, orthonormal columns
  VecD mean;                 // q
};

// Mean-centered projection onto the top right singular vectors. Sign
// convention: the largest-|loading| coordinate of each component is positive.
PcaResult pca_project(const MatD& X, int out_dim = 2);

}  // namespace latmod

#endif  // LATMOD_EVALUATION_HPP
