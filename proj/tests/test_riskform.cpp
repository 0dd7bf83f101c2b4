#include <doctest.h>

#include <cmath>
#include <random>

#include "progrisk/riskform.hpp"

using namespace progrisk::riskform;

namespace {

// Probability-space oracle in long double; fine for moderate logits.
long double sig(long double z) { return 1.0L / (1.0L + std::exp(-z)); }

long double naive_y2(Formulation f, long double a, long double b) {
  switch (f) {
    case Formulation::Baseline: return sig(b);
    case Formulation::RiskForm1: return 1.0L - (1.0L - sig(a)) * (1.0L - sig(b));
    case Formulation::RiskForm2: return 1.0L - (1.0L - sig(a)) * sig(b);
  }
  return NAN;
}

long double naive_bce(int y, long double p) { return y ? -std::log(p) : -std::log1p(-p); }

}  // namespace

TEST_CASE("predict_single") {
  CHECK(predict_single(0.0) == 0.5);
  CHECK(predict_single(1.0) == doctest::Approx(0.7310586).epsilon(1e-7));
  const double tiny = predict_single(-50.0);
  CHECK(tiny > 0.0);
  CHECK(tiny < 1e-20);
  CHECK_THROWS(predict_single(NAN));
  CHECK_THROWS(predict_single(INFINITY));
}

TEST_CASE("log-space helpers") {
  CHECK(log_sigmoid(0.0) == doctest::Approx(std::log(0.5)));
  CHECK(log_sigmoid(-800.0) == doctest::Approx(-800.0));
  CHECK(log_sigmoid(800.0) == 0.0);
  CHECK(std::isfinite(log_sigmoid(-1e300)));
  for (double a : {-1e-12, -1e-5, -0.3, -0.7, -5.0, -50.0})
    CHECK(log1mexp(a) == doctest::Approx(static_cast<double>(std::log(-std::expm1(static_cast<long double>(a))))).epsilon(1e-12));
}

TEST_CASE("Form1 spot values") {
  const auto p = predict_pair_form1(0.0, 0.0);
  CHECK(p.y1_hat() == 0.5);
  CHECK(*p.y2_hat() == doctest::Approx(0.75).epsilon(1e-15));
  const auto q = predict_pair_form1(1.0, -1.0);
  CHECK(std::abs(*q.y2_hat() - 0.8033882) < 1e-6);
  CHECK(std::abs(*q.y2_hat() - static_cast<double>(naive_y2(Formulation::RiskForm1, 1, -1))) < 1e-15);
}

TEST_CASE("Form2 spot values and limits") {
  const auto p = predict_pair_form2(0.0, 0.0);
  CHECK(p.y1_hat() == 0.5);
  CHECK(*p.y2_hat() == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(std::abs(*predict_pair_form2(0.0, 30.0).y2_hat() - 0.5) < 1e-9);
  CHECK(std::abs(*predict_pair_form2(0.0, -30.0).y2_hat() - 1.0) < 1e-9);
  // decreasing in g
  double prev = 2.0;
  for (double g = -10.0; g <= 10.0; g += 0.5) {
    const double y2 = *predict_pair_form2(0.3, g).y2_hat();
    CHECK(y2 < prev);
    prev = y2;
  }
}

TEST_CASE("Baseline pair spot values") {
  const auto p = predict_baseline_pair(0.0, 0.0);
  CHECK(p.y1_hat() == 0.5);
  CHECK(*p.y2_hat() == 0.5);
  const auto v = predict_baseline_pair(2.0, -2.0);
  CHECK(*v.y2_hat() < v.y1_hat());
  const auto w = predict_baseline_pair(-1.0, 1.0);
  CHECK(w.y1_hat() == doctest::Approx(0.2689414).epsilon(1e-7));
  CHECK(*w.y2_hat() == doctest::Approx(0.7310586).epsilon(1e-7));
}

TEST_CASE("composed heads never decrease risk; Form1 dominance and symmetry") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  int violations = 0;
  for (int i = 0; i < 100000; ++i) {
    const double a = u(rng), b = u(rng);
    const auto p1 = predict_pair_form1(a, b);
    const auto p2 = predict_pair_form2(a, b);
    const double floor1 = std::nextafter(p1.y1_hat(), -1.0);
    if (*p1.y2_hat() < floor1 || *p2.y2_hat() < floor1) ++violations;
    const double mx = std::max(predict_single(a), predict_single(b));
    if (*p1.y2_hat() < std::nextafter(mx, -1.0)) ++violations;
    if (*p1.y2_hat() != *predict_pair_form1(b, a).y2_hat()) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("log companions agree with the probabilities") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-8.0, 8.0);
  for (int i = 0; i < 2000; ++i) {
    const double a = u(rng), b = u(rng);
    for (Formulation f : {Formulation::Baseline, Formulation::RiskForm1, Formulation::RiskForm2}) {
      const auto p = predict(f, {a, b});
      const long double y2 = naive_y2(f, a, b);
      CHECK(p.y2->p == doctest::Approx(static_cast<double>(y2)).epsilon(1e-13));
      CHECK(p.y2->log_p == doctest::Approx(static_cast<double>(std::log(y2))).epsilon(1e-12));
      CHECK(p.y2->log_1mp ==
            doctest::Approx(static_cast<double>(std::log1p(-y2))).epsilon(1e-10));
    }
  }
}

TEST_CASE("pair_loss spot values") {
  const PairLabels single{1, std::nullopt, 1};
  CHECK(pair_loss(Formulation::Baseline, {0.0, std::nullopt}, single).loss ==
        doctest::Approx(0.6931472).epsilon(1e-7));
  const PairLabels pair{0, 1, 1};
  const double l = pair_loss(Formulation::RiskForm1, {0.0, 0.0}, pair).loss;
  CHECK(std::abs(l - 0.9808293) < 1e-7);
  CHECK(l == doctest::Approx(-std::log(0.5) - std::log(0.75)).epsilon(1e-15));
  CHECK_THROWS(pair_loss(Formulation::RiskForm1, {0.0, std::nullopt}, pair));
  CHECK_THROWS(pair_loss(Formulation::RiskForm1, {0.0, 1.0}, single));
}

TEST_CASE("pair_loss values and logit gradients against oracles") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  std::uniform_int_distribution<int> bit(0, 1), form(0, 2);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Formulation f = static_cast<Formulation>(form(rng));
    const double a = u(rng), b = u(rng);
    const PairLabels lab{bit(rng), bit(rng), 1};
    const auto r = pair_loss(f, {a, b}, lab);
    const long double oracle = naive_bce(lab.y1, sig(a)) + naive_bce(*lab.y2, naive_y2(f, a, b));
    CHECK(r.loss == doctest::Approx(static_cast<double>(oracle)).epsilon(1e-11));
    auto L = [&](double x, double y) { return pair_loss(f, {x, y}, lab).loss; };
    const double h = 1e-5;
    const double na = (L(a + h, b) - L(a - h, b)) / (2 * h);
    const double nb = (L(a, b + h) - L(a, b - h)) / (2 * h);
    worst = std::max(worst, std::abs(r.dlogit1 - na) / std::max({std::abs(na), std::abs(r.dlogit1), 1e-6}));
    worst = std::max(worst, std::abs(r.dlogit2 - nb) / std::max({std::abs(nb), std::abs(r.dlogit2), 1e-6}));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("losses and gradients stay finite at extreme logits") {
  for (Formulation f : {Formulation::Baseline, Formulation::RiskForm1, Formulation::RiskForm2})
    for (double a : {-500.0, -40.0, 0.0, 40.0, 500.0})
      for (double b : {-500.0, -40.0, 0.0, 40.0, 500.0})
        for (int y1 : {0, 1})
          for (int y2 : {0, 1}) {
            const auto r = pair_loss(f, {a, b}, {y1, y2, 1});
            CHECK(std::isfinite(r.loss));
            CHECK(r.loss >= 0.0);
            CHECK(std::isfinite(r.dlogit1));
            CHECK(std::isfinite(r.dlogit2));
          }
}

TEST_CASE("a confidently wrong composed prediction costs its log-odds") {
  // y2 = 0 but both logits at +500: loss ~ 1000 rather than an overflow.
  const auto r = pair_loss(Formulation::RiskForm1, {500.0, 500.0}, {1, 0, 1});
  CHECK(r.loss == doctest::Approx(1000.0).epsilon(1e-12));
}

TEST_CASE("clamp_for_export") {
  CHECK(clamp_for_export(0.0) == 1e-12);
  CHECK(clamp_for_export(1.0) == 1.0 - 1e-12);
  CHECK(clamp_for_export(0.3) == 0.3);
}
