#include <doctest.h>

#include <cmath>
#include <random>

#include "progrisk/regularizers.hpp"
#include "support/grad_oracle.hpp"

using namespace progrisk;
using namespace progrisk::regularizers;

TEST_CASE("contrastive_loss spot values") {
  const std::vector<double> z{0.0, 0.0}, far{3.0, 4.0}, p{0.2, -1.0};
  CHECK(contrastive_loss(p, p, 1, 1.0).loss == 0.0);
  CHECK(contrastive_loss(p, p, 0, 1.0).loss == 1.0);
  CHECK(contrastive_loss(z, far, 0, 1.0).loss == 0.0);
  CHECK(contrastive_loss(z, far, 1, 1.0).loss == doctest::Approx(25.0));
  CHECK_THROWS(contrastive_loss(z, std::vector<double>{1.0}, 0, 1.0));
  CHECK_THROWS(contrastive_loss(z, far, 0, 0.0));
}

TEST_CASE("contrastive_loss is non-negative and zero for similar pairs only at h1 == h2") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 500; ++i) {
    const auto a = testing::random_vector(rng, 4);
    const auto b = testing::random_vector(rng, 4);
    for (int y : {0, 1}) CHECK(contrastive_loss(a, b, y, 1.5).loss >= 0.0);
    CHECK(contrastive_loss(a, b, 1, 1.5).loss > 0.0);
  }
}

TEST_CASE("riskreg_loss spot values") {
  CHECK(riskreg_loss(0.0, 0.0, 2.0).loss == 2.0);
  const auto r = riskreg_loss(-5.0, 5.0, 2.0);
  CHECK(r.loss == 0.0);
  CHECK(r.dlogit1 == 0.0);
  CHECK(r.dlogit2 == 0.0);
  CHECK(riskreg_loss(5.0, -5.0, 2.0).loss == doctest::Approx(7.0).epsilon(1e-12));
  CHECK_THROWS(riskreg_loss(NAN, 0.0, 2.0));
  CHECK_THROWS(riskreg_loss(0.0, 0.0, 0.0));
}

TEST_CASE("riskreg_loss is monotone: up in logit1, down in logit2") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-10.0, 10.0), step(0.0, 2.0);
  for (int i = 0; i < 5000; ++i) {
    const double a = u(rng), b = u(rng), d = step(rng);
    CHECK(riskreg_loss(a + d, b, 2.0).loss >= riskreg_loss(a, b, 2.0).loss);
    CHECK(riskreg_loss(a, b + d, 2.0).loss <= riskreg_loss(a, b, 2.0).loss);
  }
}

TEST_CASE("total_regularized_loss spot values") {
  gradnet::EncoderConfig c;
  c.input_dim = 2;
  c.hidden_dims = {2};
  gradnet::EncoderModel m = gradnet::init_kaiming(c);
  for (auto& l : m.layers) std::fill(l.weights.begin(), l.weights.end(), 0.0);
  const std::vector<double> x{1.0, 2.0};
  const auto t = gradnet::forward(m, x);  // logit 0
  RegConfig rc;
  rc.kind = Kind::RiskReg;
  rc.gamma = 1.0;
  rc.riskreg_margin = 2.0;
  const riskform::PairLabels lab{0, 1, 1};
  const double v = total_regularized_loss(lab, t, t, rc).loss;
  CHECK(std::abs(v - 3.3862944) < 1e-6);
  CHECK(v == doctest::Approx(2.0 - 2.0 * std::log(0.5)).epsilon(1e-15));
  CHECK_THROWS(total_regularized_loss({0, std::nullopt, 1}, t, t, rc));
}

TEST_CASE("gamma = 0 reproduces the Baseline pair loss bit-exactly") {
  std::mt19937_64 rng(17);
  for (Kind k : {Kind::ConReg, Kind::RiskReg, Kind::Both}) {
    for (int i = 0; i < 50; ++i) {
      auto gc = testing::random_case(testing::LossKind::BaselineBCE, rng);
      const auto t1 = gradnet::forward(gc.f, gc.x1);
      const auto t2 = gradnet::forward(gc.f, gc.x2);
      RegConfig rc;
      rc.kind = k;
      rc.gamma = 0.0;
      const auto reg = total_regularized_loss(gc.labels, t1, t2, rc);
      const auto base =
          riskform::pair_loss(riskform::Formulation::Baseline, {t1.logit, t2.logit}, gc.labels);
      CHECK(reg.loss == base.loss);
      CHECK(reg.dlogit1 == base.dlogit1);
      CHECK(reg.dlogit2 == base.dlogit2);
    }
  }
}

TEST_CASE("regularized losses match finite differences through the network") {
  std::mt19937_64 rng(123);
  for (auto kind : {testing::LossKind::ConRegTotal, testing::LossKind::RiskRegTotal}) {
    int checked = 0;
    double worst = 0.0;
    while (checked < 100) {
      const auto gc = testing::random_case(kind, rng);
      if (testing::hinge_distance(gc) <= 1e-3) continue;
      worst = std::max(worst, testing::max_gradient_error(gc));
      ++checked;
    }
    INFO(testing::name(kind));
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("Both mode adds the two penalties with one gamma") {
  std::mt19937_64 rng(4);
  auto gc = testing::random_case(testing::LossKind::ConRegTotal, rng);
  const auto t1 = gradnet::forward(gc.f, gc.x1);
  const auto t2 = gradnet::forward(gc.f, gc.x2);
  RegConfig rc = gc.reg;
  rc.kind = Kind::Both;
  const double both = total_regularized_loss(gc.labels, t1, t2, rc).loss;
  rc.kind = Kind::ConReg;
  const double con = total_regularized_loss(gc.labels, t1, t2, rc).loss;
  rc.kind = Kind::RiskReg;
  const double risk = total_regularized_loss(gc.labels, t1, t2, rc).loss;
  const double base =
      riskform::pair_loss(riskform::Formulation::Baseline, {t1.logit, t2.logit}, gc.labels).loss;
  CHECK(both == doctest::Approx(con + risk - base).epsilon(1e-13));
}
