#include "latmod/contrastive.hpp"

namespace latmod {

void ContrastiveConfig::validate(std::size_t n_axes) const {
  if (!(alpha > 0.0)) throw ValidationError("contrastive config: alpha must be > 0");
  if (!axis_weights.empty() && axis_weights.size() != n_axes) {
    throw ValidationError("contrastive config: axis_weights size " +
                          std::to_string(axis_weights.size()) + " does not match axis count " +
                          std::to_string(n_axes));
  }
  for (double w : axis_weights) {
    if (!(w >= 0.0)) throw ValidationError("contrastive config: axis weights must be >= 0");
  }
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) {
    throw ValidationError("contrastive config: lambda weights must be >= 0");
  }
  if (lambda1 == 0.0 && lambda2 == 0.0) {
    throw ValidationError("contrastive config: lambda1 and lambda2 cannot both be zero");
  }
}

PairSets build_pair_sets(std::span<const std::uint16_t> labels) {
  if (labels.size() < 2) throw ValidationError("build_pair_sets: batch size must be >= 2");
  PairSets pairs;
  for (std::size_t i = 0; i + 1 < labels.size(); ++i) {
    for (std::size_t j = i + 1; j < labels.size(); ++j) {
      auto& bucket = labels[i] == labels[j] ? pairs.positives : pairs.negatives;
      bucket.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  }
  return pairs;
}

namespace {

// Reconstruction loss terms in double precision; returns loss and the
// gradient factor applied to (W* - W).
template <class S>
double reconstruction_loss(const Mat<S>& input, const Mat<S>& reconstruction, bool squared,
                           Mat<S>* d_reconstruction) {
  const Eigen::Index n = input.rows();
  const Eigen::Index d = input.cols();
  const double denom = static_cast<double>(n) * static_cast<double>(d);
  double loss = 0.0;
  MatD grad = MatD::Zero(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    double sq = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double diff = static_cast<double>(reconstruction(i, j)) - static_cast<double>(input(i, j));
      sq += diff * diff;
      grad(i, j) = diff;
    }
    if (squared) {
      loss += sq / denom;
      grad.row(i) *= 2.0 / denom;
    } else {
      const double norm = std::sqrt(sq);
      loss += norm / denom;
      if (norm > 0.0) {
        grad.row(i) /= norm * denom;
      } else {
        grad.row(i).setZero();
      }
    }
  }
  if (d_reconstruction != nullptr) {
    *d_reconstruction = grad.cast<S>();
  }
  return loss;
}

template <class S>
struct TotalLossParts {
  ForwardTraceT<S> trace;
  LossBreakdown breakdown_scalars;  // gradients filled by callers as needed
  Mat<S> d_bottleneck;
  Mat<S> d_reconstruction;
};

template <class S>
TotalLossParts<S> total_loss_parts(const NetT<S>& net, const Mat<S>& batch,
                                   const LabelMatrix& labels, const ContrastiveConfig& cfg) {
  if (batch.rows() < 2) throw ValidationError("total loss: batch size must be >= 2");
  TotalLossParts<S> parts;
  parts.trace = net_forward(net, batch);
  const Mat<S>& bottleneck = parts.trace.act[net.n_encoder_layers];

  auto contrastive = combined_contrastive_loss(bottleneck, labels, cfg);
  const double recon =
      reconstruction_loss(batch, parts.trace.reconstruction(), cfg.squared_recon,
                          &parts.d_reconstruction);

  parts.breakdown_scalars.recon = recon;
  parts.breakdown_scalars.contrastive_per_axis = contrastive.per_axis;
  parts.breakdown_scalars.contrastive_total = contrastive.total;
  parts.breakdown_scalars.total = cfg.lambda1 * contrastive.total + cfg.lambda2 * recon;

  parts.d_bottleneck = static_cast<S>(cfg.lambda1) * contrastive.d_embeddings;
  parts.d_reconstruction *= static_cast<S>(cfg.lambda2);
  return parts;
}

}  // namespace

LossBreakdown total_training_loss(const AutoencoderModel& model, const MatF& batch,
                                  const LabelMatrix& labels, const ContrastiveConfig& cfg) {
  auto parts = total_loss_parts(model.net, batch, labels, cfg);
  LossBreakdown breakdown = parts.breakdown_scalars;
  breakdown.d_bottleneck = std::move(parts.d_bottleneck);
  breakdown.d_reconstruction = std::move(parts.d_reconstruction);
  return breakdown;
}

LossBreakdown training_step(AutoencoderModel& model, AdamState& state, const MatF& batch,
                            const LabelMatrix& labels, const ContrastiveConfig& cfg) {
  auto parts = total_loss_parts(model.net, batch, labels, cfg);
  if (!std::isfinite(parts.breakdown_scalars.total)) {
    throw NumericError("training_step: non-finite loss (recon=" +
                       std::to_string(parts.breakdown_scalars.recon) + ", contrastive=" +
                       std::to_string(parts.breakdown_scalars.contrastive_total) + ")");
  }
  const Gradients grads =
      net_backward(model.net, parts.trace, parts.d_bottleneck, parts.d_reconstruction);
  adam_step(model, grads, state);
  LossBreakdown breakdown = parts.breakdown_scalars;
  breakdown.d_bottleneck = std::move(parts.d_bottleneck);
  breakdown.d_reconstruction = std::move(parts.d_reconstruction);
  return breakdown;
}

double total_loss_value(const NetT<double>& net, const MatD& batch, const LabelMatrix& labels,
                        const ContrastiveConfig& cfg) {
  return total_loss_parts(net, batch, labels, cfg).breakdown_scalars.total;
}

GradientsT<double> total_loss_gradients(const NetT<double>& net, const MatD& batch,
                                        const LabelMatrix& labels, const ContrastiveConfig& cfg) {
  auto parts = total_loss_parts(net, batch, labels, cfg);
  return net_backward(net, parts.trace, parts.d_bottleneck, parts.d_reconstruction);
}

GradCheckReport check_training_gradients(const AutoencoderModel& model, const MatF& batch,
                                         const LabelMatrix& labels, const ContrastiveConfig& cfg,
                                         double h, double tol, std::size_t n_coords,
                                         std::uint64_t seed) {
  const MatD batch_d = batch.cast<double>();
  return gradient_check(
      model,
      [&](const NetT<double>& net) { return total_loss_value(net, batch_d, labels, cfg); },
      [&](const NetT<double>& net) { return total_loss_gradients(net, batch_d, labels, cfg); },
      h, tol, n_coords, seed);
}

}  // namespace latmod
