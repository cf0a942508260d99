#ifndef LATMOD_CONTRASTIVE_HPP
#define LATMOD_CONTRASTIVE_HPP

#include "latmod/autoencoder.hpp"
#include "latmod/core.hpp"

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace latmod {

struct ContrastiveConfig {
  double alpha = 1.0;                 // negative margin
  std::vector<double> axis_weights;   // empty = all 1.0
  double lambda1 = 100.0;             // contrastive weight
  double lambda2 = 1.0;               // reconstruction weight
  bool squared_recon = true;          // mean ||w - w*||^2 / d; flag for unsquared

  void validate(std::size_t n_axes) const;
  double axis_weight(std::size_t axis) const {
    return axis_weights.empty() ? 1.0 : axis_weights.at(axis);
  }
};

// Exhaustive unordered pairing of a mini-batch on one label axis.
struct PairSets {
  std::vector<std::pair<int, int>> positives;  // same label, i < j, lexicographic
  std::vector<std::pair<int, int>> negatives;  // different label
};

PairSets build_pair_sets(std::span<const std::uint16_t> labels);

struct LossBreakdown {
  double total = 0.0;
  double recon = 0.0;
  std::vector<double> contrastive_per_axis;
  double contrastive_total = 0.0;  // weighted sum over axes
  MatF d_bottleneck;
  MatF d_reconstruction;
};

// ---------------------------------------------------------------------------
// Lifted-structured loss on a batch of embeddings:
//   L = 1/(2|P|) * sum_{(i,j) in P} max(0, L_ij)^2
//   L_ij = log( sum_{(i,k) in N} e^{alpha - l_ik} + sum_{(j,l) in N} e^{alpha - l_jl} ) + l_ij
// with l the Euclidean distance. The inner log uses a max-shift so large
// margins and distances stay finite. Positive pairs whose endpoints have no
// negative partner contribute zero, as does an empty positive set.
// ---------------------------------------------------------------------------

template <class S>
struct LiftedLossResult {
  double loss = 0.0;
  Mat<S> d_embeddings;
};

template <class S>
LiftedLossResult<S> lifted_structured_loss(const Mat<S>& embeddings, const PairSets& pairs,
                                           double alpha);

// Per-positive-pair L_ij values (pre-hinge), for diagnostics and tests.
template <class S>
std::vector<double> lifted_pair_terms(const Mat<S>& embeddings, const PairSets& pairs,
                                      double alpha);

template <class S>
struct CombinedContrastiveResult {
  std::vector<double> per_axis;
  double total = 0.0;  // sum_g c_g * L_g
  Mat<S> d_embeddings;
};

template <class S>
CombinedContrastiveResult<S> combined_contrastive_loss(const Mat<S>& embeddings,
                                                       const LabelMatrix& labels,
                                                       const ContrastiveConfig& cfg);

// Total objective: lambda1 * sum_g c_g L_contrastive^g + lambda2 * L_recon,
// with L_recon the batch mean of ||w - w*||^2 / d.
LossBreakdown total_training_loss(const AutoencoderModel& model, const MatF& batch,
                                  const LabelMatrix& labels, const ContrastiveConfig& cfg);

// One optimization step: forward, loss, backward, Adam update.
LossBreakdown training_step(AutoencoderModel& model, AdamState& state, const MatF& batch,
                            const LabelMatrix& labels, const ContrastiveConfig& cfg);

// f64 path used by gradient checking: loss value and parameter gradients of
// the total objective for an arbitrary-precision copy of the network.
double total_loss_value(const NetT<double>& net, const MatD& batch, const LabelMatrix& labels,
                        const ContrastiveConfig& cfg);
GradientsT<double> total_loss_gradients(const NetT<double>& net, const MatD& batch,
                                        const LabelMatrix& labels, const ContrastiveConfig& cfg);

// Convenience wrapper running the finite-difference check on the full
// training objective at the model's current parameters.
GradCheckReport check_training_gradients(const AutoencoderModel& model, const MatF& batch,
                                         const LabelMatrix& labels, const ContrastiveConfig& cfg,
                                         double h, double tol, std::size_t n_coords = 200,
                                         std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Template definitions
// ---------------------------------------------------------------------------

namespace detail {

// Pairwise Euclidean distances in double precision.
template <class S>
MatD pairwise_distances(const Mat<S>& embeddings) {
  const Eigen::Index n = embeddings.rows();
  MatD dist = MatD::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double sq = 0.0;
      for (Eigen::Index c = 0; c < embeddings.cols(); ++c) {
        const double d = static_cast<double>(embeddings(i, c)) - static_cast<double>(embeddings(j, c));
        sq += d * d;
      }
      dist(i, j) = dist(j, i) = std::sqrt(sq);
    }
  }
  return dist;
}

// Per-sample negative-partner cache: for sample m, the partners k with
// (m,k) in N and the shifted exponentials p_mk = exp(alpha - l_mk - c_m).
struct NegativeCache {
  std::vector<std::vector<int>> partners;
  std::vector<std::vector<double>> shifted_exp;
  std::vector<double> shift;    // c_m = max_k (alpha - l_mk), -inf if none
  std::vector<double> sum_exp;  // sum_k p_mk
};

inline NegativeCache build_negative_cache(const MatD& dist,
                                          const std::vector<std::pair<int, int>>& negatives,
                                          double alpha, Eigen::Index n) {
  NegativeCache cache;
  cache.partners.resize(static_cast<std::size_t>(n));
  cache.shifted_exp.resize(static_cast<std::size_t>(n));
  cache.shift.assign(static_cast<std::size_t>(n), -std::numeric_limits<double>::infinity());
  cache.sum_exp.assign(static_cast<std::size_t>(n), 0.0);
  for (const auto& [a, b] : negatives) {
    cache.partners[static_cast<std::size_t>(a)].push_back(b);
    cache.partners[static_cast<std::size_t>(b)].push_back(a);
  }
  for (std::size_t m = 0; m < cache.partners.size(); ++m) {
    for (int k : cache.partners[m]) {
      cache.shift[m] = std::max(cache.shift[m],
                                alpha - dist(static_cast<Eigen::Index>(m), k));
    }
    cache.shifted_exp[m].reserve(cache.partners[m].size());
    for (int k : cache.partners[m]) {
      const double p = std::exp(alpha - dist(static_cast<Eigen::Index>(m), k) - cache.shift[m]);
      cache.shifted_exp[m].push_back(p);
      cache.sum_exp[m] += p;
    }
  }
  return cache;
}

// Combined log-sum-exp over the negatives of samples i and j.
inline double pair_log_sum(const NegativeCache& cache, int i, int j) {
  const double ci = cache.shift[static_cast<std::size_t>(i)];
  const double cj = cache.shift[static_cast<std::size_t>(j)];
  if (!std::isfinite(ci) && !std::isfinite(cj)) {
    return -std::numeric_limits<double>::infinity();
  }
  const double c = std::max(ci, cj);
  double s = 0.0;
  if (std::isfinite(ci)) s += cache.sum_exp[static_cast<std::size_t>(i)] * std::exp(ci - c);
  if (std::isfinite(cj)) s += cache.sum_exp[static_cast<std::size_t>(j)] * std::exp(cj - c);
  return c + std::log(s);
}

}  // namespace detail

template <class S>
std::vector<double> lifted_pair_terms(const Mat<S>& embeddings, const PairSets& pairs,
                                      double alpha) {
  const MatD dist = detail::pairwise_distances(embeddings);
  const auto cache = detail::build_negative_cache(dist, pairs.negatives, alpha, embeddings.rows());
  std::vector<double> terms;
  terms.reserve(pairs.positives.size());
  for (const auto& [i, j] : pairs.positives) {
    const double log_sum = detail::pair_log_sum(cache, i, j);
    terms.push_back(std::isfinite(log_sum)
                        ? log_sum + dist(i, j)
                        : -std::numeric_limits<double>::infinity());
  }
  return terms;
}

template <class S>
LiftedLossResult<S> lifted_structured_loss(const Mat<S>& embeddings, const PairSets& pairs,
                                           double alpha) {
  if (!embeddings.allFinite()) {
    throw NumericError("lifted_structured_loss: non-finite embedding");
  }
  const Eigen::Index n = embeddings.rows();
  LiftedLossResult<S> result;
  result.d_embeddings = Mat<S>::Zero(n, embeddings.cols());
  if (pairs.positives.empty()) return result;

  const MatD dist = detail::pairwise_distances(embeddings);
  const auto cache = detail::build_negative_cache(dist, pairs.negatives, alpha, n);

  // Accumulate d(loss)/d(l_mn) here, then map distances back to embeddings.
  MatD dist_coeff = MatD::Zero(n, n);
  const double inv_p = 1.0 / static_cast<double>(pairs.positives.size());

  double loss = 0.0;
  for (const auto& [i, j] : pairs.positives) {
    const double log_sum = detail::pair_log_sum(cache, i, j);
    if (!std::isfinite(log_sum)) continue;  // no negative partner for either endpoint
    const double term = log_sum + dist(i, j);
    if (term <= 0.0) continue;  // hinge
    loss += 0.5 * inv_p * term * term;

    const double g = inv_p * term;  // d(loss)/d(L_ij)
    dist_coeff(i, j) += g;          // dL_ij/dl_ij = 1
    for (int endpoint : {i, j}) {
      const auto& partners = cache.partners[static_cast<std::size_t>(endpoint)];
      const auto& shifted = cache.shifted_exp[static_cast<std::size_t>(endpoint)];
      if (partners.empty()) continue;
      // exp(alpha - l_mk) / S_total = p_mk * exp(c_m - log_sum)
      const double factor = std::exp(cache.shift[static_cast<std::size_t>(endpoint)] - log_sum);
      for (std::size_t t = 0; t < partners.size(); ++t) {
        const int k = partners[t];
        const double w = shifted[t] * factor;
        const int a = std::min(endpoint, k);
        const int b = std::max(endpoint, k);
        dist_coeff(a, b) -= g * w;  // dL_ij/dl_mk = -w
      }
    }
  }
  result.loss = loss;

  // dl_mn/dB_m = (B_m - B_n) / l_mn; zero subgradient at coincident points.
  MatD d_emb = MatD::Zero(n, embeddings.cols());
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a + 1; b < n; ++b) {
      const double coeff = dist_coeff(a, b);
      if (coeff == 0.0 || dist(a, b) <= 0.0) continue;
      const double scale = coeff / dist(a, b);
      for (Eigen::Index c = 0; c < embeddings.cols(); ++c) {
        const double diff = static_cast<double>(embeddings(a, c)) - static_cast<double>(embeddings(b, c));
        d_emb(a, c) += scale * diff;
        d_emb(b, c) -= scale * diff;
      }
    }
  }
  result.d_embeddings = d_emb.cast<S>();
  return result;
}

template <class S>
CombinedContrastiveResult<S> combined_contrastive_loss(const Mat<S>& embeddings,
                                                       const LabelMatrix& labels,
                                                       const ContrastiveConfig& cfg) {
  if (labels.rows() != embeddings.rows()) {
    throw ShapeError("combined_contrastive_loss: label rows do not match batch");
  }
  const std::size_t n_axes = static_cast<std::size_t>(labels.cols());
  cfg.validate(n_axes);

  CombinedContrastiveResult<S> result;
  result.per_axis.resize(n_axes, 0.0);
  result.d_embeddings = Mat<S>::Zero(embeddings.rows(), embeddings.cols());
  std::vector<std::uint16_t> axis_labels(static_cast<std::size_t>(labels.rows()));
  for (std::size_t a = 0; a < n_axes; ++a) {
    for (Eigen::Index i = 0; i < labels.rows(); ++i) {
      axis_labels[static_cast<std::size_t>(i)] = labels(i, static_cast<Eigen::Index>(a));
    }
    const PairSets pairs = build_pair_sets(axis_labels);
    const double weight = cfg.axis_weight(a);
    auto axis_loss = lifted_structured_loss(embeddings, pairs, cfg.alpha);
    result.per_axis[a] = axis_loss.loss;
    result.total += weight * axis_loss.loss;
    if (weight != 0.0) {
      result.d_embeddings += static_cast<S>(weight) * axis_loss.d_embeddings;
    }
  }
  return result;
}

}  // namespace latmod

#endif  // LATMOD_CONTRASTIVE_HPP
