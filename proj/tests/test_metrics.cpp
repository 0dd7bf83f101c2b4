#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "progrisk/errors.hpp"
#include "progrisk/metrics.hpp"
#include "support/metric_oracles.hpp"

using namespace progrisk;
using namespace progrisk::metrics;

namespace {

struct Data {
  std::vector<double> s;
  std::vector<int> y;
};

// Binormal scores: negatives N(0,1), positives N(shift,1).
Data binormal(std::mt19937_64& rng, int n_pos, int n_neg, double shift) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Data d;
  for (int i = 0; i < n_pos; ++i) {
    d.s.push_back(shift + nd(rng));
    d.y.push_back(1);
  }
  for (int i = 0; i < n_neg; ++i) {
    d.s.push_back(nd(rng));
    d.y.push_back(0);
  }
  return d;
}

}  // namespace

TEST_CASE("midranks average tied positions") {
  const std::vector<double> v{3.0, 1.0, 3.0, 2.0, 3.0};
  CHECK(midranks(v) == std::vector<double>{4.0, 1.0, 4.0, 2.0, 4.0});
}

TEST_CASE("auroc spot values") {
  const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
  const std::vector<int> y{0, 0, 1, 1};
  CHECK(auroc(s, y) == 0.75);
  CHECK(auroc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, y) == 1.0);
  CHECK(auroc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, y) == 0.5);
  CHECK_THROWS_AS(auroc(s, std::vector<int>{1, 1, 1, 1}), DataError);
  CHECK_THROWS_AS(auroc(s, std::vector<int>{0, 0, 0, 0}), DataError);
  CHECK_THROWS(auroc(s, std::vector<int>{0, 1}));
}

TEST_CASE("auprc spot values") {
  CHECK(auprc(std::vector<double>{0.9, 0.1}, std::vector<int>{1, 0}) == 1.0);
  CHECK(auprc(std::vector<double>{0.9, 0.1}, std::vector<int>{0, 1}) == 0.5);
  CHECK(auprc(std::vector<double>{0.3, 0.1, 0.7}, std::vector<int>{1, 1, 1}) == 1.0);
  // a tied block of one positive and one negative enters at precision 1/2
  CHECK(auprc(std::vector<double>{0.5, 0.5}, std::vector<int>{1, 0}) == 0.5);
  CHECK_THROWS_AS(auprc(std::vector<double>{0.9, 0.1}, std::vector<int>{0, 0}), DataError);
}

TEST_CASE("metrics match definition-level oracles on small datasets") {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> len(2, 8), bit(0, 1), grid(0, 4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int tested = 0;
  while (tested < 1000) {
    const int n = len(rng);
    std::vector<double> s(static_cast<std::size_t>(n));
    std::vector<int> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      s[static_cast<std::size_t>(i)] = u(rng);
      y[static_cast<std::size_t>(i)] = bit(rng);
    }
    const int pos = std::accumulate(y.begin(), y.end(), 0);
    if (pos == 0 || pos == n) continue;
    CHECK(std::abs(auroc(s, y) - testing::pairwise_auroc(s, y)) <= 1e-12);
    CHECK(std::abs(auprc(s, y) - testing::enumerated_ap(s, y)) <= 1e-12);
    // tied scores on a coarse grid
    for (auto& v : s) v = grid(rng) / 4.0;
    CHECK(std::abs(auroc(s, y) - testing::pairwise_auroc(s, y)) <= 1e-12);
    CHECK(std::abs(auprc(s, y) - testing::enumerated_ap(s, y)) <= 1e-12);
    ++tested;
  }
}

TEST_CASE("auroc invariances") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 50; ++t) {
    Data d = binormal(rng, 20, 30, 0.7);
    const double a = auroc(d.s, d.y);
    std::vector<double> mono, neg;
    std::vector<int> flipped;
    for (double v : d.s) {
      mono.push_back(std::exp(2.0 * v) + 3.0);
      neg.push_back(-v);
    }
    for (int v : d.y) flipped.push_back(1 - v);
    CHECK(auroc(mono, d.y) == a);
    CHECK(auroc(neg, flipped) == a);
    CHECK(auroc(neg, d.y) == doctest::Approx(1.0 - a).epsilon(1e-14));
  }
}

TEST_CASE("bootstrap: degenerate, deterministic, thread independent") {
  std::vector<double> s;
  std::vector<int> y;
  for (int i = 0; i < 200; ++i) {
    s.push_back(i < 100 ? 0.1 + i * 1e-3 : 0.9 + i * 1e-3);
    y.push_back(i < 100 ? 0 : 1);
  }
  BootstrapConfig c;
  c.n_resamples = 500;
  c.seed = 4;
  const Interval ci = bootstrap_ci(s, y, Metric::auroc, c);
  CHECK(ci.lo == 1.0);
  CHECK(ci.hi == 1.0);

  std::mt19937_64 rng(3);
  const Data d = binormal(rng, 40, 60, 1.0);
  for (Metric m : {Metric::auroc, Metric::auprc}) {
    const Interval a = bootstrap_ci(d.s, d.y, m, c);
    const Interval b = bootstrap_ci(d.s, d.y, m, c);
    CHECK(a.lo == b.lo);
    CHECK(a.hi == b.hi);
    CHECK(a.lo < a.hi);
    const Interval serial = reference::bootstrap_ci(d.s, d.y, m, c);
    CHECK(serial.lo == a.lo);
    CHECK(serial.hi == a.hi);
    for (int threads : {1, 2, 5}) {
      BootstrapConfig ct = c;
      ct.threads = threads;
      const Interval t = bootstrap_ci(d.s, d.y, m, ct);
      CHECK(t.lo == a.lo);
      CHECK(t.hi == a.hi);
    }
  }
  c.seed = 5;
  CHECK(bootstrap_ci(d.s, d.y, Metric::auroc, c).lo != reference::bootstrap_ci(d.s, d.y, Metric::auroc, BootstrapConfig{500, 0.95, 4, 0}).lo);
}

TEST_CASE("bootstrap rejects bad configs and pathological inputs") {
  const std::vector<double> s{0.1, 0.2, 0.3};
  const std::vector<int> y{0, 1, 0};
  BootstrapConfig c;
  c.n_resamples = 99;
  CHECK_THROWS(bootstrap_ci(s, y, Metric::auroc, c));
  c.n_resamples = 100;
  c.level = 1.0;
  CHECK_THROWS(bootstrap_ci(s, y, Metric::auroc, c));
  c.level = 0.95;
  CHECK_THROWS_AS(bootstrap_ci(s, std::vector<int>{0, 0, 0}, Metric::auroc, c), DataError);
}

TEST_CASE("bootstrap percentile interval covers the true AUROC about 95% of the time") {
  // Binormal with unit variances: true AUROC = Phi(shift / sqrt 2).
  const double shift = 1.0;
  const double truth = 0.5 * std::erfc(-shift / 2.0);
  std::mt19937_64 rng(2026);
  BootstrapConfig c;
  c.n_resamples = 1000;
  int covered = 0;
  const int sims = 200;
  for (int i = 0; i < sims; ++i) {
    const Data d = binormal(rng, 100, 100, shift);
    c.seed = static_cast<std::uint64_t>(i);
    const Interval ci = bootstrap_ci(d.s, d.y, Metric::auroc, c);
    covered += ci.lo <= truth && truth <= ci.hi;
  }
  const double rate = static_cast<double>(covered) / sims;
  INFO("coverage " << rate);
  CHECK(rate >= 0.92);
  CHECK(rate <= 0.98);
}

TEST_CASE("make_report intervals contain their point estimates") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 20; ++t) {
    const Data d = binormal(rng, 8, 25, 0.5);
    BootstrapConfig c;
    c.n_resamples = 200;
    c.seed = static_cast<std::uint64_t>(t);
    const MetricReport r = make_report(d.s, d.y, c);
    CHECK(r.auroc_ci.lo <= r.auroc);
    CHECK(r.auroc <= r.auroc_ci.hi);
    CHECK(r.auprc_ci.lo <= r.auprc);
    CHECK(r.auprc <= r.auprc_ci.hi);
    CHECK(r.n_pos == 8);
    CHECK(r.n_neg == 25);
    CHECK(r.auroc_ci.lo >= 0.0);
    CHECK(r.auprc_ci.hi <= 1.0);
  }
}

TEST_CASE("DeLong: identical inputs, symmetry, consistency with auroc") {
  std::mt19937_64 rng(9);
  const Data d = binormal(rng, 15, 15, 1.0);
  const DeLongResult same = delong_test(d.s, d.s, d.y);
  CHECK(same.p_value == 1.0);
  CHECK(same.auroc_a == same.auroc_b);

  std::normal_distribution<double> nd(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    const Data a = binormal(rng, 14, 16, 0.8);
    std::vector<double> b = a.s;
    for (auto& v : b) v = 0.6 * v + nd(rng);
    const DeLongResult ab = delong_test(a.s, b, a.y);
    const DeLongResult ba = delong_test(b, a.s, a.y);
    CHECK(ab.p_value == ba.p_value);
    CHECK(ab.auroc_a == auroc(a.s, a.y));
    CHECK(ab.auroc_b == auroc(b, a.y));
    CHECK(ab.p_value > 0.0);
    CHECK(ab.p_value <= 1.0);
  }
  CHECK_THROWS(delong_test(d.s, std::vector<double>(3, 0.0), d.y));
  CHECK_THROWS_AS(delong_test(d.s, d.s, std::vector<int>(d.s.size(), 1)), DataError);
}

TEST_CASE("DeLong matches the pairwise structural-component oracle") {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_int_distribution<int> grid(0, 6);
  for (int t = 0; t < 50; ++t) {
    Data a = binormal(rng, 12, 18, 0.9);
    std::vector<double> b = a.s;
    for (auto& v : b) v = 0.5 * v + nd(rng);
    if (t % 2) {  // ties
      for (auto& v : a.s) v = std::round(v * 2.0);
      for (auto& v : b) v = grid(rng);
    }
    const DeLongResult fast = delong_test(a.s, b, a.y);
    const auto slow = testing::slow_delong(a.s, b, a.y);
    CHECK(fast.auroc_a == doctest::Approx(slow.auc_a).epsilon(1e-12));
    CHECK(fast.auroc_b == doctest::Approx(slow.auc_b).epsilon(1e-12));
    CHECK(fast.variance == doctest::Approx(slow.variance).epsilon(1e-9));
    CHECK(fast.p_value == doctest::Approx(slow.p).epsilon(1e-9));
  }
}
