#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "progrisk/gradnet.hpp"
#include "support/grad_oracle.hpp"

using namespace progrisk;
using namespace progrisk::gradnet;

namespace {

EncoderModel zero_model(const EncoderConfig& c) {
  EncoderModel m = init_kaiming(c);
  for (auto& l : m.layers) {
    std::fill(l.weights.begin(), l.weights.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  return m;
}

}  // namespace

TEST_CASE("init_kaiming is deterministic and zeroes biases") {
  EncoderConfig c;
  c.input_dim = 4;
  c.hidden_dims = {8};
  c.seed = 7;
  const EncoderModel a = init_kaiming(c);
  const EncoderModel b = init_kaiming(c);
  CHECK(a == b);
  REQUIRE(a.layers.size() == 2);
  CHECK(a.layers[0].rows == 8);
  CHECK(a.layers[0].cols == 4);
  CHECK(a.layers[1].rows == 1);
  CHECK(a.layers[1].cols == 8);
  for (const auto& l : a.layers)
    for (double v : l.bias) CHECK(v == 0.0);
  c.seed = 8;
  CHECK_FALSE(init_kaiming(c) == a);
}

TEST_CASE("init_kaiming weight scale matches sqrt(2 / fan_in)") {
  // fan_in 8: 1250 rows x 8 cols = 10^4 samples in the first layer.
  EncoderConfig c;
  c.input_dim = 8;
  c.hidden_dims = {1250};
  c.seed = 11;
  const EncoderModel m = init_kaiming(c);
  for (const auto& layer : m.layers) {
    double sum = 0, sq = 0;
    for (double w : layer.weights) {
      sum += w;
      sq += w * w;
    }
    const double n = static_cast<double>(layer.weights.size());
    const double sd = std::sqrt(sq / n - (sum / n) * (sum / n));
    const double expected = std::sqrt(2.0 / static_cast<double>(layer.cols));
    CHECK(std::abs(sd - expected) / expected < 0.10);
  }
}

TEST_CASE("config validation rejects zero dimensions") {
  EncoderConfig c;
  c.input_dim = 0;
  CHECK_THROWS(init_kaiming(c));
  c.input_dim = 3;
  c.hidden_dims = {};
  CHECK_THROWS(init_kaiming(c));
  c.hidden_dims = {4, 0};
  CHECK_THROWS(init_kaiming(c));
}

TEST_CASE("forward: zero model gives logit 0, hand-evaluated two-layer relu net") {
  EncoderConfig c;
  c.input_dim = 2;
  c.hidden_dims = {2};
  const EncoderModel z = zero_model(c);
  const std::vector<double> x{0.3, -7.0};
  CHECK(forward(z, x).logit == 0.0);

  // hidden = relu(I x + b), logit = sum(hidden) + 0.5
  EncoderModel m = z;
  m.layers[0].w(0, 0) = 1.0;
  m.layers[0].w(1, 1) = 1.0;
  m.layers[0].bias = {0.25, 0.0};
  m.layers[1].weights = {1.0, 1.0};
  m.layers[1].bias = {0.5};
  const std::vector<double> in{1.0, -1.0};
  const ForwardTrace t = forward(m, in);
  // relu(1.25) + relu(-1) + 0.5
  CHECK(t.logit == doctest::Approx(1.75).epsilon(1e-15));
  REQUIRE(t.penultimate().size() == 2);
  CHECK(t.penultimate()[0] == 1.25);
  CHECK(t.penultimate()[1] == 0.0);

  m.config.activation = Activation::tanh;
  CHECK(forward(m, in).logit == doctest::Approx(std::tanh(1.25) + std::tanh(-1.0) + 0.5));
}

TEST_CASE("forward rejects bad input") {
  EncoderConfig c;
  c.input_dim = 3;
  c.hidden_dims = {4};
  const EncoderModel m = init_kaiming(c);
  CHECK_THROWS(forward(m, std::vector<double>{1.0, 2.0}));
  CHECK_THROWS(forward(m, std::vector<double>{1.0, NAN, 0.0}));
  CHECK_THROWS(forward(m, std::vector<double>{1.0, INFINITY, 0.0}));
}

TEST_CASE("backward: zero upstream gives zero gradients") {
  EncoderConfig c;
  c.input_dim = 5;
  c.hidden_dims = {6, 3};
  c.seed = 3;
  const EncoderModel m = init_kaiming(c);
  const std::vector<double> x{0.1, -0.2, 0.3, 0.9, -1.1};
  const Gradients g = backward(m, forward(m, x), 0.0, std::vector<double>(3, 0.0));
  for (const auto& l : g.layers) {
    for (double v : l.weights) CHECK(v == 0.0);
    for (double v : l.bias) CHECK(v == 0.0);
  }
}

TEST_CASE("backward: output-layer weight gradient equals its input") {
  // With dlogit = 1 the head's weight gradient is the penultimate activation,
  // which is x itself for an identity hidden layer and positive x.
  EncoderConfig c;
  c.input_dim = 3;
  c.hidden_dims = {3};
  EncoderModel m = zero_model(c);
  for (std::size_t i = 0; i < 3; ++i) m.layers[0].w(i, i) = 1.0;
  const std::vector<double> x{0.5, 2.0, 1.5};
  const ForwardTrace t = forward(m, x);
  const Gradients g = backward(m, t, 1.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(g.layers[1].weights[i] == x[i]);
  CHECK(g.layers[1].bias[0] == 1.0);
}

TEST_CASE("backward shape mismatch is rejected") {
  EncoderConfig c;
  c.input_dim = 2;
  c.hidden_dims = {3};
  const EncoderModel m = init_kaiming(c);
  const ForwardTrace t = forward(m, std::vector<double>{1.0, 2.0});
  CHECK_THROWS(backward(m, t, 1.0, std::vector<double>{1.0}));
  c.hidden_dims = {4};
  CHECK_THROWS(backward(init_kaiming(c), t, 1.0));
}

TEST_CASE("backward matches central finite differences on random models") {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_int_distribution<int> dim(1, 5);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    EncoderConfig c;
    c.input_dim = static_cast<std::size_t>(dim(rng));
    c.hidden_dims = {static_cast<std::size_t>(dim(rng)), static_cast<std::size_t>(dim(rng))};
    c.activation = trial % 2 ? Activation::tanh : Activation::relu;
    c.seed = rng();
    EncoderModel m = init_kaiming(c);
    for (auto& l : m.layers)
      for (auto& b : l.bias) b = 0.3 * nd(rng);
    const auto x = testing::random_vector(rng, c.input_dim);
    const double a = nd(rng);
    const auto v = testing::random_vector(rng, c.hidden_dims.back());
    // L = a * logit + v . penultimate
    auto loss = [&](const EncoderModel& mm) {
      const ForwardTrace t = forward(mm, x);
      double s = a * t.logit;
      for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * t.penultimate()[i];
      return s;
    };
    const Gradients g = backward(m, forward(m, x), a, v);
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
      auto sweep = [&](std::vector<double>& p, const std::vector<double>& an) {
        for (std::size_t i = 0; i < p.size(); ++i) {
          const double o = p[i];
          p[i] = o + 1e-5;
          const double up = loss(m);
          p[i] = o - 1e-5;
          const double dn = loss(m);
          p[i] = o;
          worst = std::max(worst, testing::relative_error(an[i], (up - dn) / 2e-5));
        }
      };
      sweep(m.layers[l].weights, g.layers[l].weights);
      sweep(m.layers[l].bias, g.layers[l].bias);
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("adam: zero gradients and no decay leave parameters unchanged") {
  EncoderConfig c;
  c.input_dim = 3;
  c.hidden_dims = {4};
  c.seed = 5;
  EncoderModel m = init_kaiming(c);
  const EncoderModel before = m;
  AdamConfig h;
  h.weight_decay = 0.0;
  AdamState s = AdamState::for_model(m, h);
  adam_step(s, m, Gradients::zeros_like(m));
  CHECK(s.step == 1);
  CHECK(m == before);
  adam_step(s, m, Gradients::zeros_like(m));
  CHECK(s.step == 2);
}

TEST_CASE("adam: first step from zero with unit gradient moves by lr") {
  EncoderConfig c;
  c.input_dim = 1;
  c.hidden_dims = {1};
  EncoderModel m = zero_model(c);
  AdamConfig h;
  h.lr = 0.1;
  h.weight_decay = 1e-4;  // decay of a zero parameter is zero
  AdamState s = AdamState::for_model(m, h);
  Gradients g = Gradients::zeros_like(m);
  for (auto& l : g.layers) {
    std::fill(l.weights.begin(), l.weights.end(), 1.0);
    std::fill(l.bias.begin(), l.bias.end(), 1.0);
  }
  adam_step(s, m, g);
  // m1 = 0.1, v1 = 0.001, bias-corrected to 1 and 1: w = -0.1 * 1 / (1 + 1e-8)
  const double expected = -0.1 / (1.0 + 1e-8);
  for (const auto& l : m.layers) {
    for (double w : l.weights) CHECK(w == doctest::Approx(expected).epsilon(1e-12));
    for (double b : l.bias) CHECK(b == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("adam: decoupled weight decay shrinks parameters without gradients") {
  EncoderConfig c;
  c.input_dim = 2;
  c.hidden_dims = {2};
  c.seed = 9;
  EncoderModel m = init_kaiming(c);
  const EncoderModel before = m;
  AdamConfig h;
  h.lr = 0.01;
  h.weight_decay = 0.5;
  AdamState s = AdamState::for_model(m, h);
  adam_step(s, m, Gradients::zeros_like(m));
  for (std::size_t l = 0; l < m.layers.size(); ++l)
    for (std::size_t i = 0; i < m.layers[l].weights.size(); ++i)
      CHECK(m.layers[l].weights[i] ==
            doctest::Approx(before.layers[l].weights[i] * (1.0 - 0.01 * 0.5)).epsilon(1e-14));
}

TEST_CASE("adam rejects non-finite gradients and is deterministic") {
  EncoderConfig c;
  c.input_dim = 3;
  c.hidden_dims = {4, 2};
  c.seed = 1;
  EncoderModel m = init_kaiming(c);
  AdamState s = AdamState::for_model(m, {});
  Gradients bad = Gradients::zeros_like(m);
  bad.layers[0].weights[0] = NAN;
  CHECK_THROWS(adam_step(s, m, bad));

  auto run = [&] {
    EncoderModel mm = init_kaiming(c);
    AdamState ss = AdamState::for_model(mm, {});
    std::mt19937_64 rng(77);
    for (int i = 0; i < 20; ++i) {
      const auto x = testing::random_vector(rng, 3);
      const Gradients g = backward(mm, forward(mm, x), 1.0);
      adam_step(ss, mm, g);
    }
    return mm;
  };
  CHECK(run() == run());
}

TEST_CASE("checkpoint round trip is exact") {
  EncoderConfig c;
  c.input_dim = 4;
  c.hidden_dims = {5, 3};
  c.activation = Activation::tanh;
  c.seed = 123;
  const EncoderModel m = init_kaiming(c);
  CHECK(model_from_json(to_json(m)) == m);
  const auto path = std::filesystem::temp_directory_path() / "progrisk_ckpt_test.json";
  save_checkpoint(m, path);
  const EncoderModel back = load_checkpoint(path);
  CHECK(back == m);
  CHECK(back.config.activation == Activation::tanh);
  CHECK(back.config.seed == 123);
  std::filesystem::remove(path);
  CHECK_THROWS(load_checkpoint(path));

  nlohmann::json j = to_json(m);
  j["layers"][0]["weights"].erase(0);
  CHECK_THROWS(model_from_json(j));
}
