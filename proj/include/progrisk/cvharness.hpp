#pragma once

// Nested cross-validation engine.
//
// Subjects are dealt into K stratified outer folds (default 7). For outer
// fold k, each of the remaining K-1 folds serves once as validation while the
// other K-2 train, giving K(K-1) member models per (approach, horizon).
// Internal predictions for a subject come only from the K-1 members whose
// outer fold held that subject out; external predictions average all members.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "progrisk/cohort.hpp"
#include "progrisk/gradnet.hpp"
#include "progrisk/metrics.hpp"
#include "progrisk/regularizers.hpp"
#include "progrisk/riskform.hpp"

namespace progrisk::cv {

enum class Approach { Baseline, RiskReg, ConReg, ConRegPlusRiskReg, RiskFORM1, RiskFORM2 };

inline constexpr std::array<Approach, 6> kAllApproaches{
    Approach::Baseline,  Approach::RiskReg,   Approach::ConReg,
    Approach::ConRegPlusRiskReg, Approach::RiskFORM1, Approach::RiskFORM2};

std::string to_string(Approach a);
Approach approach_from_string(const std::string& s);

// Prediction head used at train-time validation and at inference. The
// regularized approaches score scans with independent sigmoids.
riskform::Formulation head_of(Approach a);
std::optional<regularizers::Kind> regularizer_of(Approach a);
bool uses_second_model(Approach a);

struct SplitPlan {
  int n_outer = 7;
  std::vector<std::vector<std::uint32_t>> outer_folds;  // sorted subject ids
  std::map<std::uint32_t, int> fold_of;

  int n_inner() const { return n_outer - 1; }
  int validation_fold(int outer, int inner) const;
  std::vector<std::uint32_t> train_subjects(int outer, int inner) const;
  std::vector<std::uint32_t> validation_subjects(int outer, int inner) const;
  const std::vector<std::uint32_t>& test_subjects(int outer) const;
};

// Stratified on case/control. Needs >= 2 * n_outer subjects and both classes.
SplitPlan build_split_plan(const std::vector<cohort::KneeRecord>& knees, std::uint64_t seed,
                           int n_outer = 7);

struct TrainConfig {
  gradnet::EncoderConfig encoder;  // input_dim is taken from the data
  gradnet::AdamConfig adam;
  regularizers::RegConfig reg;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  int threads = 0;  // fold-level parallelism; 0: OpenMP default

  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  std::optional<double> val_auroc;
};

struct FoldModel {
  int outer = -1;
  int inner = -1;
  gradnet::EncoderModel f;
  std::optional<gradnet::EncoderModel> g;  // RiskFORM2 only
  std::vector<EpochLog> log;
  int best_epoch = 0;           // 0: initialization was never beaten
  bool selected_by_loss = false;  // validation set had a single class
};

using KneeRefs = std::vector<const cohort::KneeRecord*>;

FoldModel train_fold(const KneeRefs& train, const KneeRefs& validation, Approach approach,
                     int horizon, const TrainConfig& config, std::uint64_t seed);

struct ScanRisks {
  double scan1 = 0.0;
  std::optional<double> scan2;
};

// One member's risks for one knee, through the approach's head.
ScanRisks member_risks(const FoldModel& member, Approach approach, const cohort::KneeRecord& knee);

struct TrainedBundle {
  Approach approach = Approach::Baseline;
  int horizon = 1;
  std::uint64_t seed = 0;
  TrainConfig config;
  SplitPlan plan;
  std::vector<FoldModel> members;  // ordered by (outer, inner)

  std::size_t expected_members() const {
    return static_cast<std::size_t>(plan.n_outer) * static_cast<std::size_t>(plan.n_inner());
  }
};

std::uint64_t member_seed(std::uint64_t master, int outer, int inner);
std::uint64_t split_seed(std::uint64_t master);

// Trains every (outer, inner) member; fold trainings run on OpenMP threads and
// the result is identical for every thread count.
TrainedBundle train_bundle(const std::vector<cohort::KneeRecord>& knees, Approach approach,
                           int horizon, const TrainConfig& config, std::uint64_t seed,
                           int n_outer = 7);

enum class Scope { internal, external };
std::string to_string(Scope s);
Scope scope_from_string(const std::string& s);

// One record per scan, ordered as the input knees. Ensemble risk is the mean
// of member probabilities.
std::vector<metrics::PredictionRecord> ensemble_predict(const TrainedBundle& bundle,
                                                        const std::vector<cohort::KneeRecord>& knees,
                                                        Scope scope);

// Every internal record was produced only by members that never saw its subject.
bool leakage_free(const TrainedBundle& bundle, const std::vector<metrics::PredictionRecord>& records);

enum class AnalyticalCohort { Cohort1, Cohort2, Cohort3, Cohort4 };
inline constexpr std::array<AnalyticalCohort, 4> kAllCohorts{
    AnalyticalCohort::Cohort1, AnalyticalCohort::Cohort2, AnalyticalCohort::Cohort3,
    AnalyticalCohort::Cohort4};
std::string to_string(AnalyticalCohort c);
bool in_cohort(AnalyticalCohort c, cohort::Group g);

struct MetricValue {
  std::optional<double> value;
  std::string reason;  // set when value is absent: "empty", "single_class"
};

struct SubgroupMetrics {
  AnalyticalCohort cohort = AnalyticalCohort::Cohort1;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  MetricValue auroc;
  MetricValue auprc;
};

std::vector<SubgroupMetrics> subgroup_report(
    const std::vector<metrics::PredictionRecord>& records,
    const std::vector<AnalyticalCohort>& cohorts = {kAllCohorts.begin(), kAllCohorts.end()});

struct KlgMetrics {
  int grade = 0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  MetricValue auroc;
};

std::array<KlgMetrics, 5> klg_report(const std::vector<metrics::PredictionRecord>& records);

namespace reference {

TrainedBundle train_bundle(const std::vector<cohort::KneeRecord>& knees, Approach approach,
                           int horizon, const TrainConfig& config, std::uint64_t seed,
                           int n_outer = 7);

std::vector<metrics::PredictionRecord> ensemble_predict(const TrainedBundle& bundle,
                                                        const std::vector<cohort::KneeRecord>& knees,
                                                        Scope scope);

}  // namespace reference

}  // namespace progrisk::cv
