#pragma once

// Synthetic longitudinal case-control cohort.
//
// Each subject has one knee whose latent severity rises monotonically from a
// random baseline. Surgery (TKR) happens at the first follow-up visit where
// severity plus per-visit threshold noise crosses a threshold. Scan features
// are a fixed random linear projection of (severity, age, sex, bmi) plus
// Gaussian noise. Cases and controls are matched on demographics, then two
// scans per knee are picked with the same rules a longitudinal study would use.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace progrisk::cohort {

enum class Sex { M, F };
enum class Role { Case, Control };
enum class Group { Set1, Set2, Set3, NotApplicable };

std::string to_string(Sex s);
std::string to_string(Role r);
std::string to_string(Group g);

inline constexpr std::array<int, 3> kHorizons{1, 2, 4};
int horizon_index(int horizon_years);  // throws for anything but 1, 2, 4

struct SimConfig {
  std::size_t n_subjects = 1000;
  std::size_t feature_dim = 16;
  double feature_noise = 1.5;  // per-feature noise sd; signal rows have unit norm
  double visit_interval_months = 12.0;
  double max_visit_months = 108.0;
  int n_ethnicities = 3;
  // Probability that a subject's follow-up ends early (at a visit in [48, max)).
  double early_dropout_prob = 0.15;
  // Severity model
  double baseline_severity_max = 0.6;
  double rate_log_mean = -6.35;  // log of monthly progression rate
  double rate_log_sd = 0.6;
  double monthly_jitter_sd = 0.003;
  double tkr_threshold = 0.85;
  double threshold_noise_sd = 0.15;
  // The feature projection is shared by every cohort generated with the same
  // projection seed, so an external cohort lives in the same feature space.
  std::uint64_t projection_seed = 20240601;

  void validate() const;
};

struct SubjectRecord {
  std::uint32_t subject_id = 0;
  int age = 0;
  Sex sex = Sex::F;
  int ethnicity = 0;
  double bmi = 0.0;
  Role role = Role::Control;
};

struct KneeTrajectory {
  std::uint32_t knee_id = 0;
  std::uint32_t subject_id = 0;
  std::vector<double> severity_monthly;  // index = month, non-decreasing, in [0, 1]
  std::optional<double> tkr_time_months;
  double followup_end_months = 0.0;

  // Linear interpolation on the monthly grid, constant past the end.
  double severity_at(double t_months) const;
};

// Row-normalized projection of the standardized (severity, age, sex, bmi) vector.
struct FeatureProjection {
  std::size_t dim = 0;
  std::vector<std::array<double, 4>> rows;

  static FeatureProjection make(std::size_t dim, std::uint64_t seed);
  std::vector<double> signal(double severity, const SubjectRecord& s) const;
};

struct Population {
  SimConfig config;
  std::uint64_t seed = 0;
  FeatureProjection projection;
  std::vector<SubjectRecord> subjects;
  std::vector<KneeTrajectory> knees;  // knees[i] belongs to subjects[i]
};

Population simulate_cohort(const SimConfig& config, std::uint64_t seed);

struct ScanTimes {
  double scan1 = 0.0;
  std::optional<double> scan2;
};

// Annual visit grid capped by follow-up end. Cases: scan 2 is the latest visit
// in [tkr - 48, tkr - 12]. Controls: the latest visit that still has 48 months
// of follow-up after it. Scan 2 must be later than the baseline scan.
ScanTimes select_scans(const KneeTrajectory& knee, Role role, double visit_interval_months = 12.0);

struct MatchResult {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;  // (case id, control id)
  std::vector<std::uint32_t> excluded;
};

bool demographics_match(const SubjectRecord& case_subject, const SubjectRecord& control_subject);

// Greedy one-to-one matching in input order: exact age, sex and ethnicity,
// control BMI within 10% of the case BMI.
MatchResult match_case_control(const std::vector<SubjectRecord>& subjects);

int assign_klg(double severity);

// label = 1 iff tkr in (scan_time, scan_time + 12 * horizon].
int event_label(std::optional<double> tkr_time_months, double scan_time_months, int horizon_years);

struct ScanSample {
  std::uint32_t knee_id = 0;
  int scan_index = 1;
  double scan_time_months = 0.0;
  std::vector<double> features;
  int klg = 0;
  std::array<int, 3> labels{0, 0, 0};  // 1, 2, 4 years

  int label(int horizon_years) const { return labels[horizon_index(horizon_years)]; }
};

struct KneeRecord {
  SubjectRecord subject;
  std::uint32_t knee_id = 0;
  ScanSample scan1;
  std::optional<ScanSample> scan2;
  std::array<Group, 3> groups{Group::NotApplicable, Group::NotApplicable, Group::NotApplicable};

  Group group(int horizon_years) const { return groups[horizon_index(horizon_years)]; }
  bool paired() const { return scan2.has_value(); }
  std::size_t scan_count() const { return scan2 ? 2 : 1; }
};

Group assign_group(const KneeRecord& knee, int horizon_years);

// Recomputes groups from labels; used after building or parsing a knee.
void refresh_groups(KneeRecord& knee);

struct Cohort {
  std::vector<KneeRecord> knees;  // ordered by subject id
  MatchResult matching;
};

// Matching, scan selection and feature synthesis over a simulated population.
Cohort build_cohort(const Population& population);

struct CohortSummary {
  std::size_t subjects = 0;
  std::size_t cases = 0;
  std::size_t knees = 0;
  std::size_t paired_knees = 0;
  std::size_t scans = 0;
  std::size_t excluded = 0;
  // [horizon][Set1, Set2, Set3]
  std::array<std::array<std::size_t, 3>, 3> set_sizes{};
};

CohortSummary summarize(const Cohort& cohort);

}  // namespace progrisk::cohort
