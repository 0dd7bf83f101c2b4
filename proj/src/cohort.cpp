#include "progrisk/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "progrisk/errors.hpp"
#include "progrisk/rng.hpp"

namespace progrisk::cohort {

namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kTagSubject = 1;
constexpr std::uint64_t kTagFeatures = 2;
constexpr std::uint64_t kTagProjection = 3;

constexpr double kPreTkrMinMonths = 12.0;
constexpr double kPreTkrMaxMonths = 48.0;
constexpr double kControlResidualMonths = 48.0;

std::vector<double> visit_grid(double interval, double last) {
  std::vector<double> v;
  for (int k = 0;; ++k) {
    const double t = k * interval;
    if (t > last + 1e-9) break;
    v.push_back(t);
  }
  return v;
}

}  // namespace

std::string to_string(Sex s) { return s == Sex::M ? "M" : "F"; }
std::string to_string(Role r) { return r == Role::Case ? "case" : "control"; }
std::string to_string(Group g) {
  switch (g) {
    case Group::Set1: return "Set1";
    case Group::Set2: return "Set2";
    case Group::Set3: return "Set3";
    case Group::NotApplicable: return "NA";
  }
  return "?";
}

int horizon_index(int horizon_years) {
  switch (horizon_years) {
    case 1: return 0;
    case 2: return 1;
    case 4: return 2;
    default: throw std::invalid_argument("horizon must be 1, 2 or 4 years, got " +
                                         std::to_string(horizon_years));
  }
}

void SimConfig::validate() const {
  if (n_subjects < 4) throw ConfigError("cohort.n_subjects must be >= 4");
  if (feature_dim == 0) throw ConfigError("cohort.feature_dim must be >= 1");
  if (!(feature_noise >= 0.0)) throw ConfigError("cohort.feature_noise must be >= 0");
  if (!(visit_interval_months > 0.0)) throw ConfigError("cohort.visit_interval_months must be > 0");
  if (!(max_visit_months >= visit_interval_months))
    throw ConfigError("cohort.max_visit_months must be >= visit interval");
  if (n_ethnicities < 1) throw ConfigError("cohort.n_ethnicities must be >= 1");
  if (!(early_dropout_prob >= 0.0 && early_dropout_prob <= 1.0))
    throw ConfigError("cohort.early_dropout_prob must be in [0, 1]");
  if (!(baseline_severity_max >= 0.0 && baseline_severity_max <= 1.0))
    throw ConfigError("cohort.baseline_severity_max must be in [0, 1]");
  if (!(rate_log_sd >= 0.0) || !(monthly_jitter_sd >= 0.0) || !(threshold_noise_sd >= 0.0))
    throw ConfigError("cohort standard deviations must be >= 0");
}

double KneeTrajectory::severity_at(double t) const {
  if (severity_monthly.empty()) return 0.0;
  if (t <= 0.0) return severity_monthly.front();
  const double last = static_cast<double>(severity_monthly.size() - 1);
  if (t >= last) return severity_monthly.back();
  const auto lo = static_cast<std::size_t>(std::floor(t));
  const double frac = t - static_cast<double>(lo);
  return severity_monthly[lo] + frac * (severity_monthly[lo + 1] - severity_monthly[lo]);
}

FeatureProjection FeatureProjection::make(std::size_t dim, std::uint64_t seed) {
  FeatureProjection p;
  p.dim = dim;
  Rng rng = make_rng(seed, {kTagProjection});
  std::normal_distribution<double> normal(0.0, 1.0);
  p.rows.resize(dim);
  for (auto& row : p.rows) {
    double norm = 0.0;
    for (double& w : row) {
      w = normal(rng);
      norm += w * w;
    }
    norm = std::sqrt(norm);
    for (double& w : row) w /= norm;
  }
  return p;
}

std::vector<double> FeatureProjection::signal(double severity, const SubjectRecord& s) const {
  const std::array<double, 4> u{(severity - 0.5) / 0.25, (s.age - 63.6) / 8.2,
                                s.sex == Sex::F ? 1.0 : -1.0, (s.bmi - 29.8) / 4.6};
  std::vector<double> out(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < 4; ++k) acc += rows[i][k] * u[k];
    out[i] = acc;
  }
  return out;
}

Population simulate_cohort(const SimConfig& config, std::uint64_t seed) {
  config.validate();
  Population pop;
  pop.config = config;
  pop.seed = seed;
  pop.projection = FeatureProjection::make(config.feature_dim, config.projection_seed);

  const int months = static_cast<int>(std::ceil(config.max_visit_months));
  const std::vector<double> visits = visit_grid(config.visit_interval_months, config.max_visit_months);
  std::vector<double> dropout_ends;
  for (double v : visits)
    if (v >= kControlResidualMonths && v < config.max_visit_months) dropout_ends.push_back(v);

  std::vector<double> eth_weights;
  for (int e = 0; e < config.n_ethnicities; ++e) eth_weights.push_back(std::pow(0.3, e));

  for (std::size_t i = 0; i < config.n_subjects; ++i) {
    Rng rng = make_rng(seed, {kTagSubject, i});
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::discrete_distribution<int> eth(eth_weights.begin(), eth_weights.end());

    SubjectRecord s;
    s.subject_id = static_cast<std::uint32_t>(i + 1);
    s.age = static_cast<int>(std::clamp(std::lround(63.6 + 8.2 * normal(rng)), 45L, 79L));
    s.sex = unif(rng) < 0.6 ? Sex::F : Sex::M;
    s.ethnicity = eth(rng);
    s.bmi = std::round(std::max(16.0, 29.8 + 4.6 * normal(rng)) * 10.0) / 10.0;

    KneeTrajectory k;
    k.subject_id = s.subject_id;
    k.knee_id = s.subject_id * 2 + (unif(rng) < 0.5 ? 0 : 1);
    const double rate = std::exp(config.rate_log_mean + config.rate_log_sd * normal(rng));
    k.severity_monthly.resize(static_cast<std::size_t>(months) + 1);
    double sev = config.baseline_severity_max * unif(rng);
    k.severity_monthly[0] = sev;
    for (int m = 1; m <= months; ++m) {
      sev = std::min(1.0, sev + rate + std::abs(config.monthly_jitter_sd * normal(rng)));
      k.severity_monthly[static_cast<std::size_t>(m)] = sev;
    }

    k.followup_end_months = config.max_visit_months;
    if (!dropout_ends.empty() && unif(rng) < config.early_dropout_prob) {
      std::uniform_int_distribution<std::size_t> pick(0, dropout_ends.size() - 1);
      k.followup_end_months = dropout_ends[pick(rng)];
    }

    // TKR at baseline is an exclusion, so only follow-up visits can trigger it.
    for (double v : visits) {
      if (v <= 0.0 || v > k.followup_end_months) continue;
      if (k.severity_at(v) + config.threshold_noise_sd * normal(rng) > config.tkr_threshold) {
        k.tkr_time_months = v;
        break;
      }
    }
    s.role = k.tkr_time_months ? Role::Case : Role::Control;

    pop.subjects.push_back(s);
    pop.knees.push_back(std::move(k));
  }
  return pop;
}

ScanTimes select_scans(const KneeTrajectory& knee, Role role, double visit_interval_months) {
  ScanTimes out;
  const double last =
      role == Role::Case && knee.tkr_time_months ? *knee.tkr_time_months : knee.followup_end_months;
  const std::vector<double> visits = visit_grid(visit_interval_months, last);
  for (double v : visits) {
    if (v <= out.scan1) continue;
    bool ok = false;
    if (role == Role::Case) {
      if (!knee.tkr_time_months) continue;
      const double tkr = *knee.tkr_time_months;
      ok = v >= tkr - kPreTkrMaxMonths && v <= tkr - kPreTkrMinMonths;
    } else {
      ok = knee.followup_end_months - v >= kControlResidualMonths;
    }
    if (ok) out.scan2 = v;  // visits ascend, keep the latest
  }
  return out;
}

bool demographics_match(const SubjectRecord& c, const SubjectRecord& k) {
  return c.age == k.age && c.sex == k.sex && c.ethnicity == k.ethnicity &&
         std::abs(c.bmi - k.bmi) <= 0.10 * c.bmi;
}

MatchResult match_case_control(const std::vector<SubjectRecord>& subjects) {
  MatchResult r;
  std::vector<bool> used(subjects.size(), false);
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    if (subjects[i].role != Role::Case) continue;
    for (std::size_t j = 0; j < subjects.size(); ++j) {
      if (used[j] || subjects[j].role != Role::Control) continue;
      if (demographics_match(subjects[i], subjects[j])) {
        used[i] = used[j] = true;
        r.pairs.emplace_back(subjects[i].subject_id, subjects[j].subject_id);
        break;
      }
    }
  }
  for (std::size_t i = 0; i < subjects.size(); ++i)
    if (!used[i]) r.excluded.push_back(subjects[i].subject_id);
  return r;
}

int assign_klg(double severity) {
  if (!(severity >= 0.0 && severity <= 1.0))
    throw std::invalid_argument("assign_klg: severity must be in [0, 1]");
  int grade = 0;
  for (double cut : {0.2, 0.4, 0.6, 0.8})
    if (severity > cut) ++grade;
  return grade;
}

int event_label(std::optional<double> tkr, double scan_time, int horizon_years) {
  if (!tkr) return 0;
  return (*tkr > scan_time && *tkr <= scan_time + 12.0 * horizon_years) ? 1 : 0;
}

Group assign_group(const KneeRecord& knee, int horizon_years) {
  if (!knee.scan2) return Group::NotApplicable;
  const int a = knee.scan1.label(horizon_years);
  const int b = knee.scan2->label(horizon_years);
  if (a == 0 && b == 1) return Group::Set1;
  if (a == 0 && b == 0) return Group::Set2;
  if (a == 1 && b == 1) return Group::Set3;
  return Group::NotApplicable;  // risk regression (1 -> 0) belongs to no set
}

void refresh_groups(KneeRecord& knee) {
  for (int h : kHorizons) knee.groups[horizon_index(h)] = assign_group(knee, h);
}

Cohort build_cohort(const Population& pop) {
  Cohort cohort;
  cohort.matching = match_case_control(pop.subjects);

  std::vector<bool> keep(pop.subjects.size() + 1, false);
  for (const auto& [a, b] : cohort.matching.pairs) keep[a] = keep[b] = true;

  const double noise = pop.config.feature_noise;
  for (std::size_t i = 0; i < pop.subjects.size(); ++i) {
    const SubjectRecord& s = pop.subjects[i];
    if (!keep[s.subject_id]) continue;
    const KneeTrajectory& traj = pop.knees[i];
    const ScanTimes times = select_scans(traj, s.role, pop.config.visit_interval_months);

    auto make_scan = [&](int index, double t) {
      ScanSample scan;
      scan.knee_id = traj.knee_id;
      scan.scan_index = index;
      scan.scan_time_months = t;
      const double sev = traj.severity_at(t);
      scan.klg = assign_klg(sev);
      scan.features = pop.projection.signal(sev, s);
      if (noise > 0.0) {
        Rng rng = make_rng(pop.seed, {kTagFeatures, traj.knee_id, static_cast<std::uint64_t>(index)});
        std::normal_distribution<double> normal(0.0, noise);
        for (double& f : scan.features) f += normal(rng);
      }
      for (int h : kHorizons) scan.labels[horizon_index(h)] = event_label(traj.tkr_time_months, t, h);
      return scan;
    };

    KneeRecord knee;
    knee.subject = s;
    knee.knee_id = traj.knee_id;
    knee.scan1 = make_scan(1, times.scan1);
    if (times.scan2) knee.scan2 = make_scan(2, *times.scan2);
    refresh_groups(knee);
    cohort.knees.push_back(std::move(knee));
  }
  return cohort;
}

CohortSummary summarize(const Cohort& cohort) {
  CohortSummary s;
  s.knees = cohort.knees.size();
  s.subjects = cohort.knees.size();
  s.excluded = cohort.matching.excluded.size();
  for (const auto& k : cohort.knees) {
    if (k.subject.role == Role::Case) ++s.cases;
    if (k.paired()) ++s.paired_knees;
    s.scans += k.scan_count();
    for (int h : kHorizons) {
      const Group g = k.group(h);
      if (g != Group::NotApplicable) ++s.set_sizes[horizon_index(h)][static_cast<int>(g)];
    }
  }
  return s;
}

}  // namespace progrisk::cohort
