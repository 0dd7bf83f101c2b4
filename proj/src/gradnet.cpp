#include "progrisk/gradnet.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "progrisk/errors.hpp"
#include "progrisk/rng.hpp"

namespace progrisk::gradnet {

namespace {

double activate(Activation a, double z) {
  return a == Activation::relu ? (z > 0.0 ? z : 0.0) : std::tanh(z);
}

// Derivative expressed through the pre-activation and the cached output.
double activate_grad(Activation a, double z, double out) {
  return a == Activation::relu ? (z > 0.0 ? 1.0 : 0.0) : 1.0 - out * out;
}

bool finite_all(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

constexpr int kCheckpointVersion = 1;

}  // namespace

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation '" + s + "' (expected relu or tanh)");
}

void EncoderConfig::validate() const {
  if (input_dim == 0) throw ConfigError("encoder input_dim must be >= 1");
  if (hidden_dims.empty()) throw ConfigError("encoder hidden_dims must be non-empty");
  for (std::size_t h : hidden_dims)
    if (h == 0) throw ConfigError("encoder hidden_dims entries must be >= 1");
}

std::size_t EncoderModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

bool EncoderModel::all_finite() const {
  for (const auto& l : layers)
    if (!finite_all(l.weights) || !finite_all(l.bias)) return false;
  return true;
}

bool EncoderModel::operator==(const EncoderModel& other) const {
  if (config.input_dim != other.config.input_dim || config.hidden_dims != other.config.hidden_dims ||
      config.activation != other.config.activation || config.seed != other.config.seed ||
      layers.size() != other.layers.size())
    return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].weights != other.layers[i].weights || layers[i].bias != other.layers[i].bias)
      return false;
  }
  return true;
}

Gradients Gradients::zeros_like(const EncoderModel& model) {
  Gradients g;
  g.layers.reserve(model.layers.size());
  for (const auto& l : model.layers) {
    g.layers.push_back(Layer{l.rows, l.cols, std::vector<double>(l.weights.size(), 0.0),
                             std::vector<double>(l.bias.size(), 0.0)});
  }
  return g;
}

void Gradients::add(const Gradients& other, double scale) {
  if (other.layers.size() != layers.size()) throw std::invalid_argument("gradient shape mismatch");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& a = layers[i];
    const auto& b = other.layers[i];
    if (a.weights.size() != b.weights.size() || a.bias.size() != b.bias.size())
      throw std::invalid_argument("gradient shape mismatch");
    for (std::size_t k = 0; k < a.weights.size(); ++k) a.weights[k] += scale * b.weights[k];
    for (std::size_t k = 0; k < a.bias.size(); ++k) a.bias[k] += scale * b.bias[k];
  }
}

void Gradients::scale(double factor) {
  for (auto& l : layers) {
    for (double& w : l.weights) w *= factor;
    for (double& b : l.bias) b *= factor;
  }
}

bool Gradients::all_finite() const {
  for (const auto& l : layers)
    if (!finite_all(l.weights) || !finite_all(l.bias)) return false;
  return true;
}

EncoderModel init_kaiming(const EncoderConfig& config) {
  config.validate();
  EncoderModel model;
  model.config = config;
  Rng rng = make_rng(config.seed, {0x6b61696dULL});

  std::vector<std::size_t> dims;
  dims.push_back(config.input_dim);
  dims.insert(dims.end(), config.hidden_dims.begin(), config.hidden_dims.end());
  dims.push_back(1);

  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const std::size_t fan_in = dims[i];
    Layer layer{dims[i + 1], fan_in, std::vector<double>(dims[i + 1] * fan_in),
                std::vector<double>(dims[i + 1], 0.0)};
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    for (double& w : layer.weights) w = normal(rng);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

ForwardTrace forward(const EncoderModel& model, std::span<const double> x) {
  if (x.size() != model.config.input_dim) {
    throw std::invalid_argument("forward: input has " + std::to_string(x.size()) +
                                " entries, model expects " +
                                std::to_string(model.config.input_dim));
  }
  for (double v : x)
    if (!std::isfinite(v)) throw std::invalid_argument("forward: non-finite input entry");

  ForwardTrace trace;
  trace.input.assign(x.begin(), x.end());
  const std::size_t n_layers = model.layers.size();
  trace.pre.resize(n_layers);
  trace.post.resize(n_layers - 1);

  const std::vector<double>* in = &trace.input;
  for (std::size_t li = 0; li < n_layers; ++li) {
    const Layer& layer = model.layers[li];
    auto& z = trace.pre[li];
    z.resize(layer.rows);
    for (std::size_t r = 0; r < layer.rows; ++r) {
      const double* row = &layer.weights[r * layer.cols];
      double acc = layer.bias[r];
      for (std::size_t c = 0; c < layer.cols; ++c) acc += row[c] * (*in)[c];
      z[r] = acc;
    }
    if (li + 1 < n_layers) {
      auto& a = trace.post[li];
      a.resize(layer.rows);
      for (std::size_t r = 0; r < layer.rows; ++r) a[r] = activate(model.config.activation, z[r]);
      in = &a;
    }
  }
  trace.logit = trace.pre.back()[0];
  return trace;
}

void backward_into(const EncoderModel& model, const ForwardTrace& trace, double dlogit,
                   std::span<const double> dpenultimate, Gradients& out) {
  const std::size_t n_layers = model.layers.size();
  if (trace.pre.size() != n_layers || trace.post.size() + 1 != n_layers ||
      out.layers.size() != n_layers)
    throw std::invalid_argument("backward: trace or gradient buffer does not match model");
  if (trace.input.size() != model.layers[0].cols)
    throw std::invalid_argument("backward: trace input does not match model");
  for (std::size_t li = 0; li < n_layers; ++li) {
    const Layer& layer = model.layers[li];
    if (trace.pre[li].size() != layer.rows || (li + 1 < n_layers && trace.post[li].size() != layer.rows) ||
        out.layers[li].weights.size() != layer.weights.size() ||
        out.layers[li].bias.size() != layer.bias.size())
      throw std::invalid_argument("backward: trace or gradient buffer does not match model");
  }
  if (!dpenultimate.empty() && dpenultimate.size() != model.penultimate_dim())
    throw std::invalid_argument("backward: dpenultimate has wrong dimension");

  // delta holds dL/d(pre-activation) of the current layer.
  std::vector<double> delta{dlogit};
  std::vector<double> upstream;
  for (std::size_t li = n_layers; li-- > 0;) {
    const Layer& layer = model.layers[li];
    const std::vector<double>& in = li == 0 ? trace.input : trace.post[li - 1];
    Layer& g = out.layers[li];
    for (std::size_t r = 0; r < layer.rows; ++r) {
      const double d = delta[r];
      if (d == 0.0) continue;
      g.bias[r] += d;
      double* grow = &g.weights[r * layer.cols];
      for (std::size_t c = 0; c < layer.cols; ++c) grow[c] += d * in[c];
    }
    if (li == 0) break;

    upstream.assign(layer.cols, 0.0);
    for (std::size_t r = 0; r < layer.rows; ++r) {
      const double d = delta[r];
      if (d == 0.0) continue;
      const double* row = &layer.weights[r * layer.cols];
      for (std::size_t c = 0; c < layer.cols; ++c) upstream[c] += d * row[c];
    }
    if (li == n_layers - 1 && !dpenultimate.empty()) {
      for (std::size_t c = 0; c < upstream.size(); ++c) upstream[c] += dpenultimate[c];
    }
    const auto& z = trace.pre[li - 1];
    const auto& a = trace.post[li - 1];
    delta.resize(upstream.size());
    for (std::size_t c = 0; c < upstream.size(); ++c)
      delta[c] = upstream[c] * activate_grad(model.config.activation, z[c], a[c]);
  }
}

Gradients backward(const EncoderModel& model, const ForwardTrace& trace, double dlogit,
                   std::span<const double> dpenultimate) {
  Gradients g = Gradients::zeros_like(model);
  backward_into(model, trace, dlogit, dpenultimate, g);
  return g;
}

AdamState AdamState::for_model(const EncoderModel& model, const AdamConfig& hyper) {
  return AdamState{hyper, 0, Gradients::zeros_like(model), Gradients::zeros_like(model)};
}

void adam_step(AdamState& state, EncoderModel& model, const Gradients& grads) {
  if (grads.layers.size() != model.layers.size() ||
      state.first_moment.layers.size() != model.layers.size())
    throw std::invalid_argument("adam_step: shape mismatch");
  if (!grads.all_finite()) throw std::invalid_argument("adam_step: non-finite gradient");

  const AdamConfig& h = state.hyper;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(h.beta1, t);
  const double bc2 = 1.0 - std::pow(h.beta2, t);

  auto update = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                    std::vector<double>& v) {
    if (p.size() != g.size() || p.size() != m.size())
      throw std::invalid_argument("adam_step: shape mismatch");
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = h.beta1 * m[k] + (1.0 - h.beta1) * g[k];
      v[k] = h.beta2 * v[k] + (1.0 - h.beta2) * g[k] * g[k];
      const double m_hat = m[k] / bc1;
      const double v_hat = v[k] / bc2;
      p[k] -= h.lr * (m_hat / (std::sqrt(v_hat) + h.eps) + h.weight_decay * p[k]);
    }
  };

  for (std::size_t li = 0; li < model.layers.size(); ++li) {
    update(model.layers[li].weights, grads.layers[li].weights, state.first_moment.layers[li].weights,
           state.second_moment.layers[li].weights);
    update(model.layers[li].bias, grads.layers[li].bias, state.first_moment.layers[li].bias,
           state.second_moment.layers[li].bias);
  }
}

nlohmann::json to_json(const EncoderModel& model) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : model.layers) {
    layers.push_back({{"rows", l.rows}, {"cols", l.cols}, {"weights", l.weights}, {"bias", l.bias}});
  }
  return {{"format", "progrisk-encoder"},
          {"version", kCheckpointVersion},
          {"config",
           {{"input_dim", model.config.input_dim},
            {"hidden_dims", model.config.hidden_dims},
            {"activation", to_string(model.config.activation)},
            {"seed", model.config.seed}}},
          {"layers", layers}};
}

EncoderModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "progrisk-encoder") throw DataError("not a progrisk encoder checkpoint");
    if (j.at("version") != kCheckpointVersion)
      throw DataError("unsupported checkpoint version " + j.at("version").dump());
    EncoderModel model;
    const auto& c = j.at("config");
    model.config.input_dim = c.at("input_dim").get<std::size_t>();
    model.config.hidden_dims = c.at("hidden_dims").get<std::vector<std::size_t>>();
    model.config.activation = activation_from_string(c.at("activation").get<std::string>());
    model.config.seed = c.at("seed").get<std::uint64_t>();
    model.config.validate();

    std::size_t expect_cols = model.config.input_dim;
    std::vector<std::size_t> rows = model.config.hidden_dims;
    rows.push_back(1);
    const auto& layers = j.at("layers");
    if (layers.size() != rows.size()) throw DataError("checkpoint layer count does not match config");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      Layer l;
      l.rows = layers[i].at("rows").get<std::size_t>();
      l.cols = layers[i].at("cols").get<std::size_t>();
      l.weights = layers[i].at("weights").get<std::vector<double>>();
      l.bias = layers[i].at("bias").get<std::vector<double>>();
      if (l.rows != rows[i] || l.cols != expect_cols || l.weights.size() != l.rows * l.cols ||
          l.bias.size() != l.rows)
        throw DataError("checkpoint layer " + std::to_string(i) + " has inconsistent shape");
      expect_cols = l.rows;
      model.layers.push_back(std::move(l));
    }
    if (!model.all_finite()) throw DataError("checkpoint contains non-finite parameters");
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const EncoderModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out << to_json(model).dump() << '\n';
}

EncoderModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed checkpoint " + path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace progrisk::gradnet
