#include "latmod/autoencoder.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstring>
#include <fstream>

namespace latmod {

using nlohmann::json;

void AutoencoderConfig::validate() const {
  if (encoder_dims.size() < 2 || decoder_dims.size() < 2) {
    throw ValidationError("autoencoder config: encoder/decoder need at least two widths");
  }
  for (int w : encoder_dims) {
    if (w < 1) throw ValidationError("autoencoder config: encoder width must be >= 1");
  }
  for (int w : decoder_dims) {
    if (w < 1) throw ValidationError("autoencoder config: decoder width must be >= 1");
  }
  if (decoder_dims.front() != encoder_dims.back()) {
    throw ValidationError("autoencoder config: decoder must start at the bottleneck width");
  }
  if (decoder_dims.back() != encoder_dims.front()) {
    throw ValidationError("autoencoder config: decoder must end at the input width");
  }
  if (!(leaky_slope >= 0.0)) throw ValidationError("autoencoder config: slope must be >= 0");
  if (!(learning_rate > 0.0)) throw ValidationError("autoencoder config: learning rate must be > 0");
}

json AutoencoderConfig::to_json() const {
  return json{{"encoder_dims", encoder_dims},
              {"decoder_dims", decoder_dims},
              {"leaky_slope", leaky_slope},
              {"init_seed", init_seed},
              {"learning_rate", learning_rate},
              {"adam_beta1", adam_beta1},
              {"adam_beta2", adam_beta2},
              {"adam_eps", adam_eps}};
}

AutoencoderConfig AutoencoderConfig::from_json(const json& j) {
  AutoencoderConfig cfg;
  cfg.encoder_dims = j.at("encoder_dims").get<std::vector<int>>();
  cfg.decoder_dims = j.at("decoder_dims").get<std::vector<int>>();
  if (j.contains("leaky_slope")) cfg.leaky_slope = j.at("leaky_slope").get<double>();
  if (j.contains("init_seed")) cfg.init_seed = j.at("init_seed").get<std::uint64_t>();
  if (j.contains("learning_rate")) cfg.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("adam_beta1")) cfg.adam_beta1 = j.at("adam_beta1").get<double>();
  if (j.contains("adam_beta2")) cfg.adam_beta2 = j.at("adam_beta2").get<double>();
  if (j.contains("adam_eps")) cfg.adam_eps = j.at("adam_eps").get<double>();
  cfg.validate();
  return cfg;
}

AutoencoderModel init_autoencoder(const AutoencoderConfig& cfg) {
  cfg.validate();
  AutoencoderModel model;
  model.config = cfg;
  model.net.slope = static_cast<float>(cfg.leaky_slope);
  model.net.n_encoder_layers = cfg.encoder_dims.size() - 1;

  RandomSource rng(mix_seed(cfg.init_seed, "he-uniform-init"));
  auto add_layer = [&](int fan_in, int fan_out) {
    Net::Layer layer;
    layer.weight.resize(fan_in, fan_out);
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) {
        layer.weight(i, j) = static_cast<float>((2.0 * rng.uniform01() - 1.0) * bound);
      }
    }
    layer.bias = VecF::Zero(fan_out);
    model.net.layers.push_back(std::move(layer));
  };
  for (std::size_t l = 0; l + 1 < cfg.encoder_dims.size(); ++l) {
    add_layer(cfg.encoder_dims[l], cfg.encoder_dims[l + 1]);
  }
  for (std::size_t l = 0; l + 1 < cfg.decoder_dims.size(); ++l) {
    add_layer(cfg.decoder_dims[l], cfg.decoder_dims[l + 1]);
  }
  return model;
}

MatF encode_batch(const AutoencoderModel& model, const MatF& batch) {
  return net_encode(model.net, batch);
}

MatF decode_batch(const AutoencoderModel& model, const MatF& bottleneck) {
  return net_decode(model.net, bottleneck);
}

ForwardTrace forward(const AutoencoderModel& model, const MatF& batch) {
  return net_forward(model.net, batch);
}

Gradients backward_pass(const AutoencoderModel& model, const ForwardTrace& trace,
                        const MatF& d_bottleneck, const MatF& d_reconstruction) {
  return net_backward(model.net, trace, d_bottleneck, d_reconstruction);
}

AdamState make_adam_state(const AutoencoderModel& model) {
  AdamState state;
  for (const auto& layer : model.net.layers) {
    state.m_weight.push_back(MatF::Zero(layer.weight.rows(), layer.weight.cols()));
    state.v_weight.push_back(MatF::Zero(layer.weight.rows(), layer.weight.cols()));
    state.m_bias.push_back(VecF::Zero(layer.bias.size()));
    state.v_bias.push_back(VecF::Zero(layer.bias.size()));
  }
  return state;
}

void adam_step(AutoencoderModel& model, const Gradients& grads, AdamState& state) {
  if (grads.d_weight.size() != model.net.n_layers()) {
    throw ShapeError("adam_step: gradient layer count mismatch");
  }
  for (std::size_t l = 0; l < model.net.n_layers(); ++l) {
    if (!grads.d_weight[l].allFinite() || !grads.d_bias[l].allFinite()) {
      throw NumericError("adam_step: non-finite gradient at layer " + std::to_string(l));
    }
  }
  state.step += 1;
  const float b1 = static_cast<float>(model.config.adam_beta1);
  const float b2 = static_cast<float>(model.config.adam_beta2);
  const float lr = static_cast<float>(model.config.learning_rate);
  const float eps = static_cast<float>(model.config.adam_eps);
  const float m_corr = 1.0f - std::pow(b1, static_cast<float>(state.step));
  const float v_corr = 1.0f - std::pow(b2, static_cast<float>(state.step));

  for (std::size_t l = 0; l < model.net.n_layers(); ++l) {
    auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
      m = b1 * m + (1.0f - b1) * g;
      v = b2 * v + (1.0f - b2) * g.cwiseProduct(g);
      param.array() -= lr * (m.array() / m_corr) / ((v.array() / v_corr).sqrt() + eps);
    };
    update(model.net.layers[l].weight, state.m_weight[l], state.v_weight[l], grads.d_weight[l]);
    update(model.net.layers[l].bias, state.m_bias[l], state.v_bias[l], grads.d_bias[l]);
  }
}

namespace {

// Flattened parameter view helpers for the finite-difference path.
std::size_t parameter_count(const NetT<double>& net) {
  std::size_t n = 0;
  for (const auto& layer : net.layers) {
    n += static_cast<std::size_t>(layer.weight.size()) + static_cast<std::size_t>(layer.bias.size());
  }
  return n;
}

double* parameter_at(NetT<double>& net, std::size_t index) {
  for (auto& layer : net.layers) {
    const std::size_t wn = static_cast<std::size_t>(layer.weight.size());
    if (index < wn) return layer.weight.data() + index;
    index -= wn;
    const std::size_t bn = static_cast<std::size_t>(layer.bias.size());
    if (index < bn) return layer.bias.data() + index;
    index -= bn;
  }
  throw ValidationError("gradient_check: parameter index out of range");
}

double gradient_at(const GradientsT<double>& grads, std::size_t index) {
  for (std::size_t l = 0; l < grads.d_weight.size(); ++l) {
    const std::size_t wn = static_cast<std::size_t>(grads.d_weight[l].size());
    if (index < wn) return grads.d_weight[l].data()[index];
    index -= wn;
    const std::size_t bn = static_cast<std::size_t>(grads.d_bias[l].size());
    if (index < bn) return grads.d_bias[l].data()[index];
    index -= bn;
  }
  throw ValidationError("gradient_check: gradient index out of range");
}

}  // namespace

GradCheckReport gradient_check(
    const AutoencoderModel& model,
    const std::function<double(const NetT<double>&)>& eval_fn,
    const std::function<GradientsT<double>(const NetT<double>&)>& grad_fn,
    double h, double tol, std::size_t n_coords, std::uint64_t seed) {
  if (!(h > 0.0)) throw ValidationError("gradient_check: step h must be > 0");
  if (!(tol > 0.0)) throw ValidationError("gradient_check: tolerance must be > 0");

  NetT<double> net = model.net.cast<double>();
  const GradientsT<double> analytic = grad_fn(net);

  const std::size_t total = parameter_count(net);
  std::vector<std::size_t> coords(total);
  for (std::size_t i = 0; i < total; ++i) coords[i] = i;
  if (total > n_coords) {
    RandomSource rng(mix_seed(seed, "gradient-check"));
    rng.shuffle(coords);
    coords.resize(n_coords);
  }

  GradCheckReport report;
  report.n_checked = coords.size();
  for (std::size_t index : coords) {
    double* p = parameter_at(net, index);
    const double original = *p;
    *p = original + h;
    const double f_plus = eval_fn(net);
    *p = original - h;
    const double f_minus = eval_fn(net);
    *p = original;

    const double numeric = (f_plus - f_minus) / (2.0 * h);
    const double exact = gradient_at(analytic, index);
    const double diff = std::abs(exact - numeric);
    double rel = 0.0;
    if (diff > 1e-9) {
      rel = diff / std::max(std::abs(exact), std::abs(numeric));
    }
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_parameter = index;
    }
  }
  report.passed = report.max_rel_error <= tol;
  return report;
}

// ---------------------------------------------------------------------------
// LMAE container
// ---------------------------------------------------------------------------

namespace {
constexpr char kLmaeMagic[4] = {'L', 'M', 'A', 'E'};
constexpr std::uint32_t kLmaeVersion = 1;
}  // namespace

void save_model(const AutoencoderModel& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path + "' for writing");

  json config = model.config.to_json();
  config["has_standardizer"] = model.standardizer.has_value();
  if (model.standardizer) {
    config["standardizer_dim"] = model.standardizer->dim();
  }
  const std::string blob = config.dump();

  os.write(kLmaeMagic, 4);
  write_u32(os, kLmaeVersion);
  write_u32(os, static_cast<std::uint32_t>(blob.size()));
  os.write(blob.data(), static_cast<std::streamsize>(blob.size()));

  for (const auto& layer : model.net.layers) {
    write_f32_array(os, layer.weight.data(), static_cast<std::size_t>(layer.weight.size()));
    write_f32_array(os, layer.bias.data(), static_cast<std::size_t>(layer.bias.size()));
  }
  if (model.standardizer) {
    write_f64_array(os, model.standardizer->mean.data(),
                    static_cast<std::size_t>(model.standardizer->mean.size()));
    write_f64_array(os, model.standardizer->scale.data(),
                    static_cast<std::size_t>(model.standardizer->scale.size()));
  }
  if (!os) throw IoError("write to '" + path + "' failed");
}

AutoencoderModel load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  char magic[4];
  is.read(magic, 4);
  if (is.gcount() != 4 || std::memcmp(magic, kLmaeMagic, 4) != 0) {
    throw FormatError("'" + path + "': bad LMAE magic");
  }
  const std::uint32_t version = read_u32(is);
  if (version != kLmaeVersion) {
    throw FormatError("'" + path + "': unsupported LMAE version " + std::to_string(version));
  }
  const std::uint32_t blob_len = read_u32(is);
  std::string blob(blob_len, '\0');
  is.read(blob.data(), blob_len);
  if (is.gcount() != static_cast<std::streamsize>(blob_len)) {
    throw FormatError("'" + path + "': truncated config blob");
  }
  json config_json;
  try {
    config_json = json::parse(blob);
  } catch (const json::exception& e) {
    throw FormatError("'" + path + "': config blob is not valid JSON: " + e.what());
  }

  AutoencoderModel model;
  model.config = AutoencoderConfig::from_json(config_json);
  model.net.slope = static_cast<float>(model.config.leaky_slope);
  model.net.n_encoder_layers = model.config.encoder_dims.size() - 1;

  auto read_layer = [&](int fan_in, int fan_out) {
    Net::Layer layer;
    layer.weight.resize(fan_in, fan_out);
    read_f32_array(is, layer.weight.data(), static_cast<std::size_t>(layer.weight.size()));
    layer.bias.resize(fan_out);
    read_f32_array(is, layer.bias.data(), static_cast<std::size_t>(layer.bias.size()));
    model.net.layers.push_back(std::move(layer));
  };
  const auto& enc = model.config.encoder_dims;
  const auto& dec = model.config.decoder_dims;
  for (std::size_t l = 0; l + 1 < enc.size(); ++l) read_layer(enc[l], enc[l + 1]);
  for (std::size_t l = 0; l + 1 < dec.size(); ++l) read_layer(dec[l], dec[l + 1]);

  if (config_json.value("has_standardizer", false)) {
    const std::size_t dim = config_json.at("standardizer_dim").get<std::size_t>();
    Standardizer st;
    st.mean.resize(static_cast<Eigen::Index>(dim));
    st.scale.resize(static_cast<Eigen::Index>(dim));
    read_f64_array(is, st.mean.data(), dim);
    read_f64_array(is, st.scale.data(), dim);
    model.standardizer = std::move(st);
  }
  return model;
}

}  // namespace latmod
