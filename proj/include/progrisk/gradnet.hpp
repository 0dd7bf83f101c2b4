#pragma once

// Small feed-forward scorer with hand-derived gradients and an AdamW optimizer.
//
// Layout: input -> hidden_dims[0] -> ... -> hidden_dims.back() -> 1 (logit).
// Every hidden layer is affine followed by the configured activation; the
// output head is affine only. The "penultimate representation" is the
// activation output of the last hidden layer.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace progrisk::gradnet {

enum class Activation { relu, tanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct EncoderConfig {
  std::size_t input_dim = 16;
  std::vector<std::size_t> hidden_dims{32, 16};
  Activation activation = Activation::relu;
  std::uint64_t seed = 0;

  void validate() const;
};

// Dense affine map stored row-major: out[r] = sum_c weights[r * cols + c] * in[c] + bias[r].
struct Layer {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  double& w(std::size_t r, std::size_t c) { return weights[r * cols + c]; }
  double w(std::size_t r, std::size_t c) const { return weights[r * cols + c]; }
};

struct EncoderModel {
  EncoderConfig config;
  std::vector<Layer> layers;  // hidden layers followed by the scalar head

  std::size_t parameter_count() const;
  std::size_t penultimate_dim() const { return config.hidden_dims.back(); }
  bool all_finite() const;
  bool operator==(const EncoderModel& other) const;
};

// Gradient buffers share the parameter layout of the model they came from.
struct Gradients {
  std::vector<Layer> layers;

  static Gradients zeros_like(const EncoderModel& model);
  void add(const Gradients& other, double scale = 1.0);
  void scale(double factor);
  bool all_finite() const;
};

struct ForwardTrace {
  double logit = 0.0;
  std::vector<double> input;
  std::vector<std::vector<double>> pre;   // per layer, before activation
  std::vector<std::vector<double>> post;  // per hidden layer, after activation

  const std::vector<double>& penultimate() const { return post.back(); }
};

// Weights ~ N(0, 2 / fan_in), biases 0. Same config (incl. seed) -> same bits.
EncoderModel init_kaiming(const EncoderConfig& config);

ForwardTrace forward(const EncoderModel& model, std::span<const double> x);

// Gradients of L where dL/dlogit = dlogit and dL/dpenultimate = dpenultimate
// (empty span means zero). The two paths add at the last hidden activation.
Gradients backward(const EncoderModel& model, const ForwardTrace& trace, double dlogit,
                   std::span<const double> dpenultimate = {});

// Accumulating form used by the training loop; avoids a temporary per sample.
void backward_into(const EncoderModel& model, const ForwardTrace& trace, double dlogit,
                   std::span<const double> dpenultimate, Gradients& out);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
};

struct AdamState {
  AdamConfig hyper;
  std::uint64_t step = 0;
  Gradients first_moment;
  Gradients second_moment;

  static AdamState for_model(const EncoderModel& model, const AdamConfig& hyper);
};

// One bias-corrected Adam step. Weight decay is decoupled (AdamW): it shrinks
// parameters directly and never enters the moment estimates.
void adam_step(AdamState& state, EncoderModel& model, const Gradients& grads);

// Checkpoint I/O. See docs/checkpoint_format.md.
nlohmann::json to_json(const EncoderModel& model);
EncoderModel model_from_json(const nlohmann::json& j);
void save_checkpoint(const EncoderModel& model, const std::filesystem::path& path);
EncoderModel load_checkpoint(const std::filesystem::path& path);

}  // namespace progrisk::gradnet
