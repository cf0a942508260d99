#ifndef LATMOD_AUTOENCODER_HPP
#define LATMOD_AUTOENCODER_HPP

#include "latmod/core.hpp"
#include "latmod/dataset.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace latmod {

struct AutoencoderConfig {
  std::vector<int> encoder_dims{8192, 4096, 2048, 1024, 512};
  std::vector<int> decoder_dims{512, 1024, 2048, 4096, 8192};
  double leaky_slope = 0.01;
  std::uint64_t init_seed = 0;
  double learning_rate = 0.001;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
  int input_dim() const { return encoder_dims.front(); }
  int bottleneck_dim() const { return encoder_dims.back(); }

  nlohmann::json to_json() const;
  static AutoencoderConfig from_json(const nlohmann::json& j);
};

// Plain MLP stack: encoder chain followed by decoder chain. Hidden layers use
// LeakyReLU; the final decoder layer stays affine so outputs keep the input
// range.
template <class S>
struct NetT {
  struct Layer {
    Mat<S> weight;  // in x out
    Vec<S> bias;    // out
  };
  std::vector<Layer> layers;
  std::size_t n_encoder_layers = 0;
  S slope = S(0.01);

  std::size_t n_layers() const { return layers.size(); }
  bool is_output_layer(std::size_t l) const { return l + 1 == layers.size(); }

  template <class T>
  NetT<T> cast() const {
    NetT<T> out;
    out.n_encoder_layers = n_encoder_layers;
    out.slope = static_cast<T>(slope);
    out.layers.reserve(layers.size());
    for (const auto& layer : layers) {
      out.layers.push_back({layer.weight.template cast<T>(), layer.bias.template cast<T>()});
    }
    return out;
  }
};

template <class S>
struct ForwardTraceT {
  std::vector<Mat<S>> pre;  // pre-activations per layer
  std::vector<Mat<S>> act;  // act[0] = input, act[l+1] = activation of layer l

  const Mat<S>& input() const { return act.front(); }
  const Mat<S>& reconstruction() const { return act.back(); }
};

template <class S>
struct GradientsT {
  std::vector<Mat<S>> d_weight;
  std::vector<Vec<S>> d_bias;
};

using Net = NetT<float>;
using ForwardTrace = ForwardTraceT<float>;
using Gradients = GradientsT<float>;

struct AutoencoderModel {
  AutoencoderConfig config;
  Net net;
  std::optional<Standardizer> standardizer;
  int bottleneck_dim() const { return config.bottleneck_dim(); }
  int input_dim() const { return config.input_dim(); }
};

struct AdamState {
  std::vector<MatF> m_weight, v_weight;
  std::vector<VecF> m_bias, v_bias;
  std::int64_t step = 0;
};

// ---------------------------------------------------------------------------
// Templated forward/backward core, shared by the f32 training path and the
// f64 gradient-check path.
// ---------------------------------------------------------------------------

template <class S>
inline Mat<S> leaky_relu(const Mat<S>& x, S slope) {
  return x.array().max(x.array() * slope).matrix();
}

template <class S>
ForwardTraceT<S> net_forward(const NetT<S>& net, const Mat<S>& input);

// For a loss whose partials w.r.t. the bottleneck activation and the
// reconstruction are d_bottleneck and d_reconstruction, returns exact
// reverse-mode parameter gradients. The bottleneck node accumulates both the
// direct term and the contribution flowing back through the decoder.
template <class S>
GradientsT<S> net_backward(const NetT<S>& net, const ForwardTraceT<S>& trace,
                           const Mat<S>& d_bottleneck, const Mat<S>& d_reconstruction);

template <class S>
Mat<S> net_encode(const NetT<S>& net, const Mat<S>& input);

template <class S>
Mat<S> net_decode(const NetT<S>& net, const Mat<S>& bottleneck);

// ---------------------------------------------------------------------------
// Model-level operations (spec surface, float path)
// ---------------------------------------------------------------------------

AutoencoderModel init_autoencoder(const AutoencoderConfig& cfg);

MatF encode_batch(const AutoencoderModel& model, const MatF& batch);
MatF decode_batch(const AutoencoderModel& model, const MatF& bottleneck);
ForwardTrace forward(const AutoencoderModel& model, const MatF& batch);

Gradients backward_pass(const AutoencoderModel& model, const ForwardTrace& trace,
                        const MatF& d_bottleneck, const MatF& d_reconstruction);

AdamState make_adam_state(const AutoencoderModel& model);
void adam_step(AutoencoderModel& model, const Gradients& grads, AdamState& state);

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_parameter = 0;  // flattened parameter index
  std::size_t n_checked = 0;
  bool passed = false;
};

// Central finite differences on a f64 copy of the model against the analytic
// gradient produced by `grad_fn`. `eval_fn` must be a pure function of the
// parameters.
GradCheckReport gradient_check(
    const AutoencoderModel& model,
    const std::function<double(const NetT<double>&)>& eval_fn,
    const std::function<GradientsT<double>(const NetT<double>&)>& grad_fn,
    double h, double tol, std::size_t n_coords = 200, std::uint64_t seed = 0);

void save_model(const AutoencoderModel& model, const std::string& path);
AutoencoderModel load_model(const std::string& path);

// --------------------------------------------------------------------------
// Template definitions
// --------------------------------------------------------------------------

template <class S>
ForwardTraceT<S> net_forward(const NetT<S>& net, const Mat<S>& input) {
  if (net.layers.empty()) throw ShapeError("net_forward: empty network");
  if (input.cols() != net.layers.front().weight.rows()) {
    throw ShapeError("net_forward: input width " + std::to_string(input.cols()) +
                     " does not match first layer width " +
                     std::to_string(net.layers.front().weight.rows()));
  }
  ForwardTraceT<S> trace;
  trace.pre.resize(net.n_layers());
  trace.act.resize(net.n_layers() + 1);
  trace.act[0] = input;
  for (std::size_t l = 0; l < net.n_layers(); ++l) {
    const auto& layer = net.layers[l];
    trace.pre[l] = (trace.act[l] * layer.weight).rowwise() + layer.bias.transpose();
    trace.act[l + 1] = net.is_output_layer(l) ? trace.pre[l] : leaky_relu(trace.pre[l], net.slope);
    if (!trace.act[l + 1].allFinite()) {
      throw NumericError("net_forward: non-finite output at layer " + std::to_string(l));
    }
  }
  return trace;
}

template <class S>
Mat<S> net_encode(const NetT<S>& net, const Mat<S>& input) {
  if (input.cols() != net.layers.front().weight.rows()) {
    throw ShapeError("net_encode: input width mismatch");
  }
  Mat<S> x = input;
  for (std::size_t l = 0; l < net.n_encoder_layers; ++l) {
    const auto& layer = net.layers[l];
    Mat<S> pre = (x * layer.weight).rowwise() + layer.bias.transpose();
    x = net.is_output_layer(l) ? pre : leaky_relu(pre, net.slope);
    if (!x.allFinite()) {
      throw NumericError("net_encode: non-finite output at layer " + std::to_string(l));
    }
  }
  return x;
}

template <class S>
Mat<S> net_decode(const NetT<S>& net, const Mat<S>& bottleneck) {
  if (net.n_encoder_layers >= net.n_layers()) throw ShapeError("net_decode: no decoder layers");
  if (bottleneck.cols() != net.layers[net.n_encoder_layers].weight.rows()) {
    throw ShapeError("net_decode: bottleneck width mismatch");
  }
  Mat<S> x = bottleneck;
  for (std::size_t l = net.n_encoder_layers; l < net.n_layers(); ++l) {
    const auto& layer = net.layers[l];
    Mat<S> pre = (x * layer.weight).rowwise() + layer.bias.transpose();
    x = net.is_output_layer(l) ? pre : leaky_relu(pre, net.slope);
    if (!x.allFinite()) {
      throw NumericError("net_decode: non-finite output at layer " + std::to_string(l));
    }
  }
  return x;
}

template <class S>
GradientsT<S> net_backward(const NetT<S>& net, const ForwardTraceT<S>& trace,
                           const Mat<S>& d_bottleneck, const Mat<S>& d_reconstruction) {
  const std::size_t n = net.n_layers();
  if (trace.pre.size() != n || trace.act.size() != n + 1) {
    throw ShapeError("net_backward: trace does not match network");
  }
  if (d_bottleneck.rows() != trace.act[0].rows() ||
      d_bottleneck.cols() != trace.act[net.n_encoder_layers].cols()) {
    throw ShapeError("net_backward: d_bottleneck shape mismatch");
  }
  if (d_reconstruction.rows() != trace.act[0].rows() ||
      d_reconstruction.cols() != trace.act[n].cols()) {
    throw ShapeError("net_backward: d_reconstruction shape mismatch");
  }

  GradientsT<S> grads;
  grads.d_weight.resize(n);
  grads.d_bias.resize(n);

  Mat<S> delta = d_reconstruction;  // dL/d(activation of current layer)
  for (std::size_t l = n; l-- > 0;) {
    Mat<S> d_pre;
    if (net.is_output_layer(l)) {
      d_pre = delta;
    } else {
      // LeakyReLU'(x) = 1 for x >= 0, slope otherwise.
      d_pre = (trace.pre[l].array() >= S(0))
                  .select(delta, delta * net.slope);
    }
    grads.d_weight[l] = trace.act[l].transpose() * d_pre;
    grads.d_bias[l] = d_pre.colwise().sum().transpose();
    delta = d_pre * net.layers[l].weight.transpose();
    if (l == net.n_encoder_layers) {
      delta += d_bottleneck;  // loss also feeds the bottleneck activation directly
    }
  }
  return grads;
}

}  // namespace latmod

#endif  // LATMOD_AUTOENCODER_HPP
