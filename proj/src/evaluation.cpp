#include "latmod/evaluation.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace latmod {

namespace {

// Row-wise softmax with max shift.
MatD softmax_rows(const MatD& logits) {
  MatD p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    const Eigen::ArrayXd e = (logits.row(i).array() - m).exp();
    p.row(i) = (e / e.sum()).matrix();
  }
  return p;
}

MatD with_bias_column(const MatD& X) {
  MatD xb(X.rows(), X.cols() + 1);
  xb.leftCols(X.cols()) = X;
  xb.col(X.cols()).setOnes();
  return xb;
}

double cross_entropy(const MatD& probs, const std::vector<std::uint16_t>& labels) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    loss -= std::log(std::max(probs(i, labels[static_cast<std::size_t>(i)]), 1e-300));
  }
  return loss / static_cast<double>(probs.rows());
}

}  // namespace

SoftmaxClassifier train_softmax_classifier(const MatD& X,
                                           const std::vector<std::uint16_t>& labels,
                                           int n_classes, int epochs, double lr,
                                           std::uint64_t /*seed*/) {
  if (static_cast<std::size_t>(X.rows()) != labels.size()) {
    throw ShapeError("train_softmax_classifier: label count does not match rows");
  }
  if (n_classes < 2) throw ValidationError("train_softmax_classifier: need >= 2 classes");
  if (epochs < 0) throw ValidationError("train_softmax_classifier: epochs must be >= 0");
  if (!(lr > 0.0)) throw ValidationError("train_softmax_classifier: lr must be > 0");
  std::set<std::uint16_t> present(labels.begin(), labels.end());
  if (present.size() < 2) {
    throw ValidationError("train_softmax_classifier: data contains a single class");
  }
  for (std::uint16_t label : present) {
    if (label >= n_classes) {
      throw ValidationError("train_softmax_classifier: label " + std::to_string(label) +
                            " out of range for " + std::to_string(n_classes) + " classes");
    }
  }

  const MatD xb = with_bias_column(X);
  const double n = static_cast<double>(X.rows());

  // One-hot targets.
  MatD y = MatD::Zero(X.rows(), n_classes);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    y(i, labels[static_cast<std::size_t>(i)]) = 1.0;
  }

  SoftmaxClassifier clf;
  clf.weights = MatD::Zero(xb.cols(), n_classes);
  double loss = cross_entropy(softmax_rows(xb * clf.weights), labels);
  double step = lr;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const MatD probs = softmax_rows(xb * clf.weights);
    const MatD grad = xb.transpose() * (probs - y) / n;
    // Backtracking: halve the step until the full-batch loss does not increase.
    bool accepted = false;
    for (int tries = 0; tries < 60; ++tries) {
      const MatD proposal = clf.weights - step * grad;
      const double new_loss = cross_entropy(softmax_rows(xb * proposal), labels);
      if (new_loss <= loss) {
        clf.weights = proposal;
        loss = new_loss;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    clf.epochs_run = epoch + 1;
    if (!accepted) break;  // step underflowed; we are at a (numerical) optimum
  }
  clf.final_loss = loss;
  return clf;
}

std::vector<std::uint16_t> classify_batch(const SoftmaxClassifier& clf, const MatD& X) {
  if (X.cols() != clf.dim()) {
    throw ShapeError("classify_batch: input dim " + std::to_string(X.cols()) +
                     " does not match classifier dim " + std::to_string(clf.dim()));
  }
  const MatD logits = with_bias_column(X) * clf.weights;
  std::vector<std::uint16_t> predicted(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    // argmax with ties broken by the lowest class index
    int best = 0;
    for (int k = 1; k < logits.cols(); ++k) {
      if (logits(i, k) > logits(i, best)) best = k;
    }
    predicted[static_cast<std::size_t>(i)] = static_cast<std::uint16_t>(best);
  }
  return predicted;
}

ConfusionMatrix confusion_matrix(const SoftmaxClassifier& clf, const MatD& X,
                                 const std::vector<std::uint16_t>& true_labels,
                                 const std::string& axis_name,
                                 const std::vector<std::string>& class_names) {
  if (static_cast<std::size_t>(X.rows()) != true_labels.size()) {
    throw ShapeError("confusion_matrix: label count does not match rows");
  }
  const auto predicted = classify_batch(clf, X);
  const int k = clf.classes();

  ConfusionMatrix cm;
  cm.axis = axis_name;
  cm.class_names = class_names;
  cm.counts = Eigen::MatrixXi::Zero(k, k);
  for (std::size_t i = 0; i < true_labels.size(); ++i) {
    if (true_labels[i] >= k) {
      throw ValidationError("confusion_matrix: true label out of range");
    }
    cm.counts(true_labels[i], predicted[i]) += 1;
  }
  cm.evaluated = static_cast<int>(true_labels.size());
  cm.per_class_recall.resize(static_cast<std::size_t>(k), 0.0);
  int correct = 0;
  for (int t = 0; t < k; ++t) {
    const int row_total = cm.counts.row(t).sum();
    if (row_total > 0) {
      cm.per_class_recall[static_cast<std::size_t>(t)] =
          static_cast<double>(cm.counts(t, t)) / row_total;
    }
    correct += cm.counts(t, t);
  }
  cm.accuracy = cm.evaluated > 0 ? static_cast<double>(correct) / cm.evaluated : 0.0;
  return cm;
}

double cosine_similarity_score(const VecD& u, const VecD& v) {
  if (u.size() != v.size()) throw ShapeError("cosine_similarity_score: dim mismatch");
  const double uu = u.squaredNorm();
  const double vv = v.squaredNorm();
  if (uu == 0.0 || vv == 0.0) {
    throw ValidationError("cosine_similarity_score: zero vector");
  }
  // For u == v the numerator and sqrt(uu*vv) coincide bit-for-bit, so the
  // score is exactly 0.
  return u.dot(v) / std::sqrt(uu * vv) - 1.0;
}

ScoreDistribution score_distributions(const MatD& set_a, const MatD& set_b, ScoreMode mode,
                                      int n_bins, const std::string& label) {
  if (n_bins < 1) throw ValidationError("score_distributions: need >= 1 bin");
  ScoreDistribution dist;
  dist.label = label;
  dist.bin_width = 2.0 / n_bins;
  dist.bins.assign(static_cast<std::size_t>(n_bins), 0);

  auto check_rows = [](const MatD& m, const char* which) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (m.row(i).squaredNorm() == 0.0) {
        throw ValidationError(std::string("score_distributions: zero vector in set ") + which +
                              " at index " + std::to_string(i));
      }
    }
  };

  auto add_score = [&](double s) {
    int bin = static_cast<int>(std::floor((s + 2.0) / dist.bin_width));
    bin = std::clamp(bin, 0, n_bins - 1);
    dist.bins[static_cast<std::size_t>(bin)] += 1;
    dist.count += 1;
  };

  if (mode == ScoreMode::within) {
    check_rows(set_a, "A");
    for (Eigen::Index i = 0; i < set_a.rows(); ++i) {
      for (Eigen::Index j = i + 1; j < set_a.rows(); ++j) {
        add_score(cosine_similarity_score(set_a.row(i).transpose(), set_a.row(j).transpose()));
      }
    }
  } else {
    check_rows(set_a, "A");
    check_rows(set_b, "B");
    if (set_a.cols() != set_b.cols()) {
      throw ShapeError("score_distributions: sets have different dims");
    }
    for (Eigen::Index i = 0; i < set_a.rows(); ++i) {
      for (Eigen::Index j = 0; j < set_b.rows(); ++j) {
        add_score(cosine_similarity_score(set_a.row(i).transpose(), set_b.row(j).transpose()));
      }
    }
  }
  return dist;
}

double histogram_intersection(const ScoreDistribution& a, const ScoreDistribution& b) {
  if (a.bins.size() != b.bins.size()) {
    throw ShapeError("histogram_intersection: bin counts differ");
  }
  if (a.count == 0 || b.count == 0) return 0.0;
  double overlap = 0.0;
  for (std::size_t i = 0; i < a.bins.size(); ++i) {
    overlap += std::min(static_cast<double>(a.bins[i]) / a.count,
                        static_cast<double>(b.bins[i]) / b.count);
  }
  return overlap;
}

LlSeparationReport ll_separation(const GmmModel& model_a, const GmmModel& model_b,
                                 const MatD& test_a, const MatD& test_b) {
  if (model_a.dim() != model_b.dim()) {
    throw ShapeError("ll_separation: models have different dims");
  }
  LlSeparationReport report;
  report.group_a = model_a.group.name();
  report.group_b = model_b.group.name();

  auto add_rows = [&](const MatD& data, int true_group) {
    const VecD ll_a = per_sample_log_likelihood(model_a, data);
    const VecD ll_b = per_sample_log_likelihood(model_b, data);
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      LlSeparationReport::Row row;
      row.true_group = true_group;
      row.ll_a = ll_a(i);
      row.ll_b = ll_b(i);
      row.predicted = ll_b(i) > ll_a(i) ? 1 : 0;
      report.rows.push_back(row);
    }
  };
  add_rows(test_a, 0);
  add_rows(test_b, 1);

  int correct = 0;
  for (const auto& row : report.rows) {
    if (row.predicted == row.true_group) ++correct;
  }
  report.accuracy = report.rows.empty()
                        ? 0.0
                        : static_cast<double>(correct) / static_cast<double>(report.rows.size());
  return report;
}

PcaResult pca_project(const MatD& X, int out_dim) {
  if (X.rows() < 2) throw ValidationError("pca_project: need at least 2 rows");
  if (out_dim < 1 || out_dim > std::min(X.rows(), X.cols())) {
    throw ValidationError("pca_project: invalid output dimension");
  }
  PcaResult result;
  result.mean = X.colwise().mean();
  const MatD centered = X.rowwise() - result.mean.transpose();

  Eigen::BDCSVD<MatD> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VecD sv = svd.singularValues();
  const double total = sv.array().square().sum();
  if (!(total > 0.0)) {
    throw ValidationError("pca_project: data has rank 0 (all rows identical)");
  }

  MatD components = svd.matrixV().leftCols(out_dim);
  // Deterministic sign: make the largest-|loading| coordinate positive.
  for (Eigen::Index c = 0; c < components.cols(); ++c) {
    Eigen::Index arg_max = 0;
    components.col(c).cwiseAbs().maxCoeff(&arg_max);
    if (components(arg_max, c) < 0.0) components.col(c) = -components.col(c);
  }

  result.components = components;
  result.coords = centered * components;
  result.explained_fractions.resize(out_dim);
  for (int c = 0; c < out_dim; ++c) {
    result.explained_fractions(c) = sv(c) * sv(c) / total;
  }
  return result;
}

}  // namespace latmod
