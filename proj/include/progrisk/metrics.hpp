#pragma once

// Scan-level discrimination metrics.
//
// auroc   Mann-Whitney statistic with midranks (ties count 1/2).
// auprc   average precision, sum_k (R_k - R_{k-1}) P_k over descending
//         unique thresholds; tied scores enter as one block, no interpolation.
// CIs     percentile bootstrap over scans.
// DeLong  paired comparison of two AUROCs computed on the same labels.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "progrisk/cohort.hpp"

namespace progrisk::metrics {

struct PredictionRecord {
  std::uint32_t subject_id = 0;
  std::uint32_t knee_id = 0;
  int scan_index = 1;
  double risk = 0.0;
  int label = 0;
  int klg = 0;
  cohort::Group group = cohort::Group::NotApplicable;
  int horizon = 1;
  int outer_fold = -1;  // fold whose members produced the risk; -1 for external scope
};

enum class Metric { auroc, auprc };
std::string to_string(Metric m);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Average ranks (1-based) with ties sharing the mean of their positions.
std::vector<double> midranks(std::span<const double> values);

double auroc(std::span<const double> scores, std::span<const int> labels);
double auprc(std::span<const double> scores, std::span<const int> labels);
double auroc(const std::vector<PredictionRecord>& records);
double auprc(const std::vector<PredictionRecord>& records);
double evaluate(Metric m, std::span<const double> scores, std::span<const int> labels);

struct BootstrapConfig {
  std::size_t n_resamples = 2000;
  double level = 0.95;
  std::uint64_t seed = 0;
  int threads = 0;  // 0: OpenMP default

  void validate() const;
};

// Resample r draws from its own stream derived from (seed, r); single-class
// resamples are redrawn from that stream. More than 10 * n_resamples total
// draws raises DataError. Results do not depend on the thread count.
Interval bootstrap_ci(std::span<const double> scores, std::span<const int> labels, Metric metric,
                      const BootstrapConfig& config);

struct DeLongResult {
  double auroc_a = 0.0;
  double auroc_b = 0.0;
  double variance = 0.0;  // of auroc_a - auroc_b
  double z = 0.0;
  double p_value = 1.0;   // two-sided; 1.0 when variance < 1e-15
};

DeLongResult delong_test(std::span<const double> risks_a, std::span<const double> risks_b,
                         std::span<const int> labels);

struct MetricReport {
  double auroc = 0.0;
  Interval auroc_ci;
  double auprc = 0.0;
  Interval auprc_ci;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::optional<double> delong_p_vs_reference;
};

// Point estimates plus bootstrap CIs. The percentile interval is widened to
// contain its point estimate when resampling skews it past the point.
MetricReport make_report(std::span<const double> scores, std::span<const int> labels,
                         const BootstrapConfig& config);

namespace reference {

// Single-threaded bootstrap; same streams, same result as bootstrap_ci.
Interval bootstrap_ci(std::span<const double> scores, std::span<const int> labels, Metric metric,
                      const BootstrapConfig& config);

}  // namespace reference

}  // namespace progrisk::metrics
