#include "progrisk/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "progrisk/errors.hpp"
#include "progrisk/rng.hpp"

namespace progrisk::metrics {

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("metric: scores and labels differ in length");
  for (int y : labels)
    if (y != 0 && y != 1) throw std::invalid_argument("metric: labels must be 0 or 1");
}

std::pair<std::size_t, std::size_t> class_counts(std::span<const int> labels) {
  std::size_t pos = 0;
  for (int y : labels) pos += static_cast<std::size_t>(y);
  return {pos, labels.size() - pos};
}

std::vector<std::size_t> order_desc(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct ResampleOutcome {
  double value = 0.0;
  std::size_t attempts = 0;
  bool ok = false;
};

ResampleOutcome one_resample(std::span<const double> scores, std::span<const int> labels,
                             Metric metric, const BootstrapConfig& config, std::size_t r,
                             std::size_t cap, std::vector<double>& s, std::vector<int>& y) {
  Rng rng = make_rng(config.seed, {r});
  std::uniform_int_distribution<std::size_t> pick(0, scores.size() - 1);
  ResampleOutcome out;
  const std::size_t n = scores.size();
  s.resize(n);
  y.resize(n);
  while (out.attempts < cap) {
    ++out.attempts;
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = pick(rng);
      s[i] = scores[k];
      y[i] = labels[k];
      pos += static_cast<std::size_t>(labels[k]);
    }
    const bool usable = metric == Metric::auprc ? pos > 0 : (pos > 0 && pos < n);
    if (usable) {
      out.value = evaluate(metric, s, y);
      out.ok = true;
      break;
    }
  }
  return out;
}

Interval finish_bootstrap(std::vector<ResampleOutcome>& outcomes, const BootstrapConfig& config) {
  std::size_t total = 0;
  std::vector<double> values;
  values.reserve(outcomes.size());
  for (const auto& o : outcomes) {
    total += o.attempts;
    if (!o.ok) total = std::numeric_limits<std::size_t>::max();
    if (total == std::numeric_limits<std::size_t>::max()) break;
    values.push_back(o.value);
  }
  if (total > 10 * config.n_resamples)
    throw DataError("bootstrap: too many single-class resamples (input too imbalanced)");
  std::sort(values.begin(), values.end());
  const double tail = (1.0 - config.level) / 2.0;
  return Interval{quantile_sorted(values, tail), quantile_sorted(values, 1.0 - tail)};
}

void check_bootstrap_inputs(std::span<const double> scores, std::span<const int> labels,
                            Metric metric, const BootstrapConfig& config) {
  config.validate();
  check_inputs(scores, labels);
  // The point estimate must exist; reuse its error contract.
  (void)evaluate(metric, scores, labels);
}

}  // namespace

std::string to_string(Metric m) { return m == Metric::auroc ? "auroc" : "auprc"; }

std::vector<double> midranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[idx[j + 1]] == values[idx[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = mid;
    i = j + 1;
  }
  return ranks;
}

double auroc(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  const auto [n_pos, n_neg] = class_counts(labels);
  if (n_pos == 0 || n_neg == 0) throw DataError("auroc: needs both positive and negative labels");
  const std::vector<double> ranks = midranks(scores);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (labels[i] == 1) rank_sum += ranks[i];
  const double np = static_cast<double>(n_pos);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

double auprc(std::span<const double> scores, std::span<const int> labels) {
  check_inputs(scores, labels);
  const auto [n_pos, n_neg] = class_counts(labels);
  if (n_pos == 0) throw DataError("auprc: needs at least one positive label");
  const auto idx = order_desc(scores);
  double ap = 0.0;
  double prev_recall = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      if (labels[idx[j]] == 1) ++tp;
      else ++fp;
      ++j;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(n_pos);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return ap;
}

namespace {
std::pair<std::vector<double>, std::vector<int>> unzip(const std::vector<PredictionRecord>& records) {
  std::vector<double> s;
  std::vector<int> y;
  s.reserve(records.size());
  y.reserve(records.size());
  for (const auto& r : records) {
    s.push_back(r.risk);
    y.push_back(r.label);
  }
  return {std::move(s), std::move(y)};
}
}  // namespace

double auroc(const std::vector<PredictionRecord>& records) {
  const auto [s, y] = unzip(records);
  return auroc(s, y);
}

double auprc(const std::vector<PredictionRecord>& records) {
  const auto [s, y] = unzip(records);
  return auprc(s, y);
}

double evaluate(Metric m, std::span<const double> scores, std::span<const int> labels) {
  return m == Metric::auroc ? auroc(scores, labels) : auprc(scores, labels);
}

void BootstrapConfig::validate() const {
  if (n_resamples < 100) throw ConfigError("bootstrap.n_resamples must be >= 100");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("bootstrap.level must be in (0, 1)");
}

Interval bootstrap_ci(std::span<const double> scores, std::span<const int> labels, Metric metric,
                      const BootstrapConfig& config) {
  check_bootstrap_inputs(scores, labels, metric, config);
  const std::size_t cap = 10 * config.n_resamples;
  std::vector<ResampleOutcome> outcomes(config.n_resamples);
  const auto n = static_cast<std::ptrdiff_t>(config.n_resamples);
  const int threads = config.threads;
#pragma omp parallel num_threads(threads > 0 ? threads : omp_get_max_threads()) if (n > 1)
  {
    std::vector<double> s;
    std::vector<int> y;
#pragma omp for schedule(static)
    for (std::ptrdiff_t r = 0; r < n; ++r) {
      outcomes[static_cast<std::size_t>(r)] =
          one_resample(scores, labels, metric, config, static_cast<std::size_t>(r), cap, s, y);
    }
  }
  return finish_bootstrap(outcomes, config);
}

namespace reference {

Interval bootstrap_ci(std::span<const double> scores, std::span<const int> labels, Metric metric,
                      const BootstrapConfig& config) {
  check_bootstrap_inputs(scores, labels, metric, config);
  const std::size_t cap = 10 * config.n_resamples;
  std::vector<ResampleOutcome> outcomes(config.n_resamples);
  std::vector<double> s;
  std::vector<int> y;
  for (std::size_t r = 0; r < config.n_resamples; ++r)
    outcomes[r] = one_resample(scores, labels, metric, config, r, cap, s, y);
  return finish_bootstrap(outcomes, config);
}

}  // namespace reference

DeLongResult delong_test(std::span<const double> risks_a, std::span<const double> risks_b,
                         std::span<const int> labels) {
  if (risks_a.size() != risks_b.size() || risks_a.size() != labels.size())
    throw std::invalid_argument("delong_test: risk vectors and labels differ in length");
  check_inputs(risks_a, labels);
  const auto [m, n] = class_counts(labels);
  if (m == 0 || n == 0) throw DataError("delong_test: needs both positive and negative labels");

  DeLongResult r;
  r.auroc_a = auroc(risks_a, labels);
  r.auroc_b = auroc(risks_b, labels);

  // Structural components: v10[i] for each positive, v01[j] for each negative.
  auto components = [&](std::span<const double> risks, std::vector<double>& v10,
                        std::vector<double>& v01) {
    std::vector<double> pos, neg;
    for (std::size_t i = 0; i < risks.size(); ++i) (labels[i] ? pos : neg).push_back(risks[i]);
    const auto all = midranks(risks);
    const auto rp = midranks(pos);
    const auto rn = midranks(neg);
    v10.clear();
    v01.clear();
    std::size_t ip = 0, in = 0;
    for (std::size_t i = 0; i < risks.size(); ++i) {
      if (labels[i]) {
        v10.push_back((all[i] - rp[ip++]) / static_cast<double>(n));
      } else {
        v01.push_back(1.0 - (all[i] - rn[in++]) / static_cast<double>(m));
      }
    }
  };
  std::vector<double> a10, a01, b10, b01;
  components(risks_a, a10, a01);
  components(risks_b, b10, b01);

  auto cov = [](const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t k = x.size();
    if (k < 2) return 0.0;
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(k);
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(k);
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += (x[i] - mx) * (y[i] - my);
    return s / static_cast<double>(k - 1);
  };
  const double dm = static_cast<double>(m);
  const double dn = static_cast<double>(n);
  const double var_a = cov(a10, a10) / dm + cov(a01, a01) / dn;
  const double var_b = cov(b10, b10) / dm + cov(b01, b01) / dn;
  const double cov_ab = cov(a10, b10) / dm + cov(a01, b01) / dn;
  r.variance = var_a + var_b - 2.0 * cov_ab;

  if (!(r.variance >= 1e-15)) {
    r.z = 0.0;
    r.p_value = 1.0;
    return r;
  }
  r.z = (r.auroc_a - r.auroc_b) / std::sqrt(r.variance);
  r.p_value = std::erfc(std::abs(r.z) / std::sqrt(2.0));
  return r;
}

MetricReport make_report(std::span<const double> scores, std::span<const int> labels,
                         const BootstrapConfig& config) {
  MetricReport r;
  const auto [pos, neg] = class_counts(labels);
  r.n_pos = pos;
  r.n_neg = neg;
  r.auroc = auroc(scores, labels);
  r.auprc = auprc(scores, labels);
  r.auroc_ci = bootstrap_ci(scores, labels, Metric::auroc, config);
  r.auprc_ci = bootstrap_ci(scores, labels, Metric::auprc, config);
  auto widen = [](Interval& ci, double point) {
    ci.lo = std::min(ci.lo, point);
    ci.hi = std::max(ci.hi, point);
  };
  widen(r.auroc_ci, r.auroc);
  widen(r.auprc_ci, r.auprc);
  return r;
}

}  // namespace progrisk::metrics
