#pragma once

// Slow, definition-level implementations used as test oracles.

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

namespace progrisk::testing {

// Pairwise Mann-Whitney count; ties score 1/2.
inline double pairwise_auroc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!y[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j]) continue;
      pairs += 1.0;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

// Enumerates every distinct score as a threshold (predict positive iff
// score >= t) and sums (R_k - R_{k-1}) P_k.
inline double enumerated_ap(const std::vector<double>& s, const std::vector<int>& y) {
  std::set<double, std::greater<>> thresholds(s.begin(), s.end());
  double positives = 0.0;
  for (int v : y) positives += v;
  double ap = 0.0, prev_recall = 0.0;
  for (double t : thresholds) {
    double tp = 0.0, fp = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s[i] >= t) (y[i] ? tp : fp) += 1.0;
    const double recall = tp / positives;
    ap += (recall - prev_recall) * (tp / (tp + fp));
    prev_recall = recall;
  }
  return ap;
}

struct SlowDeLong {
  double auc_a, auc_b, variance, p;
};

// DeLong et al. (1988) with the structural components written out pairwise.
inline SlowDeLong slow_delong(const std::vector<double>& a, const std::vector<double>& b,
                              const std::vector<int>& y) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < y.size(); ++i) (y[i] ? pos : neg).push_back(i);
  const double m = static_cast<double>(pos.size()), n = static_cast<double>(neg.size());
  auto psi = [](double x, double z) { return x > z ? 1.0 : (x == z ? 0.5 : 0.0); };
  auto components = [&](const std::vector<double>& s, std::vector<double>& v10,
                        std::vector<double>& v01) {
    v10.assign(pos.size(), 0.0);
    v01.assign(neg.size(), 0.0);
    for (std::size_t i = 0; i < pos.size(); ++i)
      for (std::size_t j = 0; j < neg.size(); ++j) {
        const double p = psi(s[pos[i]], s[neg[j]]);
        v10[i] += p / n;
        v01[j] += p / m;
      }
  };
  std::vector<double> a10, a01, b10, b01;
  components(a, a10, a01);
  components(b, b10, b01);
  auto mean = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  auto cov = [&](const std::vector<double>& u, const std::vector<double>& v) {
    const double mu = mean(u), mv = mean(v);
    double s = 0;
    for (std::size_t i = 0; i < u.size(); ++i) s += (u[i] - mu) * (v[i] - mv);
    return s / static_cast<double>(u.size() - 1);
  };
  const double auc_a = mean(a10), auc_b = mean(b10);
  const double var = (cov(a10, a10) + cov(b10, b10) - 2 * cov(a10, b10)) / m +
                     (cov(a01, a01) + cov(b01, b01) - 2 * cov(a01, b01)) / n;
  const double p = var < 1e-15 ? 1.0 : std::erfc(std::abs(auc_a - auc_b) / std::sqrt(var) / std::sqrt(2.0));
  return {auc_a, auc_b, var, p};
}

// Two-sided paired permutation test: each subject's two scores are swapped
// with probability 1/2. |dAUC| lives on a grid of step 1/(n_pos n_neg), so
// permutations tying the observed value count one half (mid-p).
inline double permutation_p(const std::vector<double>& a, const std::vector<double>& b,
                            const std::vector<int>& y, int n_perm, std::uint64_t seed) {
  const double observed = std::abs(pairwise_auroc(a, y) - pairwise_auroc(b, y));
  std::mt19937_64 rng(seed);
  std::vector<double> pa = a, pb = b;
  double extreme = 0.0;
  for (int k = 0; k < n_perm; ++k) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (rng() & 1ULL) {
        pa[i] = b[i];
        pb[i] = a[i];
      } else {
        pa[i] = a[i];
        pb[i] = b[i];
      }
    }
    const double d = std::abs(pairwise_auroc(pa, y) - pairwise_auroc(pb, y));
    if (d > observed + 1e-12)
      extreme += 1.0;
    else if (d >= observed - 1e-12)
      extreme += 0.5;
  }
  return extreme / n_perm;
}

}  // namespace progrisk::testing
