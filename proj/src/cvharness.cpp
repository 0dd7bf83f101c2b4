#include "progrisk/cvharness.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <omp.h>

#include "progrisk/errors.hpp"
#include "progrisk/rng.hpp"

namespace progrisk::cv {

using cohort::KneeRecord;
using gradnet::EncoderModel;
using gradnet::Gradients;

std::string to_string(Approach a) {
  switch (a) {
    case Approach::Baseline: return "Baseline";
    case Approach::RiskReg: return "RiskReg";
    case Approach::ConReg: return "ConReg";
    case Approach::ConRegPlusRiskReg: return "ConReg+RiskReg";
    case Approach::RiskFORM1: return "RiskFORM1";
    case Approach::RiskFORM2: return "RiskFORM2";
  }
  return "?";
}

Approach approach_from_string(const std::string& s) {
  for (Approach a : kAllApproaches)
    if (to_string(a) == s) return a;
  if (s == "ConRegPlusRiskReg") return Approach::ConRegPlusRiskReg;
  throw ConfigError("unknown approach '" + s +
                    "' (expected Baseline, RiskReg, ConReg, ConReg+RiskReg, RiskFORM1, RiskFORM2)");
}

riskform::Formulation head_of(Approach a) {
  switch (a) {
    case Approach::RiskFORM1: return riskform::Formulation::RiskForm1;
    case Approach::RiskFORM2: return riskform::Formulation::RiskForm2;
    default: return riskform::Formulation::Baseline;
  }
}

std::optional<regularizers::Kind> regularizer_of(Approach a) {
  switch (a) {
    case Approach::RiskReg: return regularizers::Kind::RiskReg;
    case Approach::ConReg: return regularizers::Kind::ConReg;
    case Approach::ConRegPlusRiskReg: return regularizers::Kind::Both;
    default: return std::nullopt;
  }
}

bool uses_second_model(Approach a) { return a == Approach::RiskFORM2; }

std::string to_string(Scope s) { return s == Scope::internal ? "internal" : "external"; }

Scope scope_from_string(const std::string& s) {
  if (s == "internal") return Scope::internal;
  if (s == "external") return Scope::external;
  throw ConfigError("unknown scope '" + s + "' (expected internal or external)");
}

// ---------------------------------------------------------------------------
// Split plan

int SplitPlan::validation_fold(int outer, int inner) const {
  if (outer < 0 || outer >= n_outer || inner < 0 || inner >= n_inner())
    throw std::out_of_range("split plan coordinates out of range");
  // inner-th fold other than the outer one, counting upward from outer + 1
  return (outer + 1 + inner) % n_outer;
}

std::vector<std::uint32_t> SplitPlan::train_subjects(int outer, int inner) const {
  const int val = validation_fold(outer, inner);
  std::vector<std::uint32_t> out;
  for (int k = 0; k < n_outer; ++k) {
    if (k == outer || k == val) continue;
    out.insert(out.end(), outer_folds[static_cast<std::size_t>(k)].begin(),
               outer_folds[static_cast<std::size_t>(k)].end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::uint32_t> SplitPlan::validation_subjects(int outer, int inner) const {
  return outer_folds[static_cast<std::size_t>(validation_fold(outer, inner))];
}

const std::vector<std::uint32_t>& SplitPlan::test_subjects(int outer) const {
  return outer_folds.at(static_cast<std::size_t>(outer));
}

std::uint64_t split_seed(std::uint64_t master) { return derive_seed(master, {0x73706c6974ULL}); }

std::uint64_t member_seed(std::uint64_t master, int outer, int inner) {
  return derive_seed(master, {0x6d656d626572ULL, static_cast<std::uint64_t>(outer),
                              static_cast<std::uint64_t>(inner)});
}

SplitPlan build_split_plan(const std::vector<KneeRecord>& knees, std::uint64_t seed, int n_outer) {
  if (n_outer < 3) throw ConfigError("cv.outer must be >= 3");
  std::vector<std::uint32_t> cases, controls;
  for (const auto& k : knees)
    (k.subject.role == cohort::Role::Case ? cases : controls).push_back(k.subject.subject_id);
  std::sort(cases.begin(), cases.end());
  std::sort(controls.begin(), controls.end());
  if (std::adjacent_find(cases.begin(), cases.end()) != cases.end() ||
      std::adjacent_find(controls.begin(), controls.end()) != controls.end())
    throw DataError("split plan: duplicate subject id");
  const std::size_t n = cases.size() + controls.size();
  if (n < static_cast<std::size_t>(2 * n_outer))
    throw DataError("split plan: need at least " + std::to_string(2 * n_outer) + " subjects, have " +
                    std::to_string(n));
  if (cases.empty() || controls.empty()) throw DataError("split plan: need both cases and controls");

  Rng rng = make_rng(seed);
  std::shuffle(cases.begin(), cases.end(), rng);
  std::shuffle(controls.begin(), controls.end(), rng);

  SplitPlan plan;
  plan.n_outer = n_outer;
  plan.outer_folds.resize(static_cast<std::size_t>(n_outer));
  std::size_t slot = 0;
  for (auto* group : {&cases, &controls}) {
    for (std::uint32_t id : *group) {
      const int fold = static_cast<int>(slot % static_cast<std::size_t>(n_outer));
      plan.outer_folds[static_cast<std::size_t>(fold)].push_back(id);
      plan.fold_of[id] = fold;
      ++slot;
    }
  }
  for (auto& f : plan.outer_folds) std::sort(f.begin(), f.end());
  return plan;
}

// ---------------------------------------------------------------------------
// Training

void TrainConfig::validate() const {
  if (encoder.hidden_dims.empty()) throw ConfigError("model.hidden_dims must be non-empty");
  for (std::size_t h : encoder.hidden_dims)
    if (h == 0) throw ConfigError("model.hidden_dims entries must be >= 1");
  if (batch_size == 0) throw ConfigError("train.batch_size must be >= 1");
  if (!(adam.lr >= 0.0) || !(adam.weight_decay >= 0.0)) throw ConfigError("optimizer lr and weight_decay must be >= 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0))
    throw ConfigError("optimizer betas must be in [0, 1)");
  if (!(adam.eps > 0.0)) throw ConfigError("optimizer eps must be > 0");
  reg.validate();
}

namespace {

riskform::PairLabels labels_of(const KneeRecord& k, int horizon) {
  riskform::PairLabels l;
  l.horizon_years = horizon;
  l.y1 = k.scan1.label(horizon);
  if (k.scan2) l.y2 = k.scan2->label(horizon);
  return l;
}

double accumulate_knee(const KneeRecord& k, Approach approach, int horizon,
                       const regularizers::RegConfig& reg, const EncoderModel& f,
                       const EncoderModel* g, Gradients& gf, Gradients* gg) {
  const auto labels = labels_of(k, horizon);
  const auto t1 = gradnet::forward(f, k.scan1.features);
  if (!k.scan2) {
    const auto r = riskform::pair_loss(riskform::Formulation::Baseline, {t1.logit, std::nullopt}, labels);
    gradnet::backward_into(f, t1, r.dlogit1, {}, gf);
    return r.loss;
  }
  if (const auto kind = regularizer_of(approach)) {
    const auto t2 = gradnet::forward(f, k.scan2->features);
    regularizers::RegConfig rc = reg;
    rc.kind = *kind;
    const auto r = regularizers::total_regularized_loss(labels, t1, t2, rc);
    gradnet::backward_into(f, t1, r.dlogit1, r.dh1, gf);
    gradnet::backward_into(f, t2, r.dlogit2, r.dh2, gf);
    return r.loss;
  }
  if (approach == Approach::RiskFORM2) {
    const auto t2 = gradnet::forward(*g, k.scan2->features);
    const auto r = riskform::pair_loss(riskform::Formulation::RiskForm2, {t1.logit, t2.logit}, labels);
    gradnet::backward_into(f, t1, r.dlogit1, {}, gf);
    gradnet::backward_into(*g, t2, r.dlogit2, {}, *gg);
    return r.loss;
  }
  const auto t2 = gradnet::forward(f, k.scan2->features);
  const auto r = riskform::pair_loss(head_of(approach), {t1.logit, t2.logit}, labels);
  gradnet::backward_into(f, t1, r.dlogit1, {}, gf);
  gradnet::backward_into(f, t2, r.dlogit2, {}, gf);
  return r.loss;
}

riskform::PairLogits logits_for(const EncoderModel& f, const EncoderModel* g, const KneeRecord& k) {
  riskform::PairLogits l;
  l.logit1 = gradnet::forward(f, k.scan1.features).logit;
  if (k.scan2) l.logit2 = gradnet::forward(g ? *g : f, k.scan2->features).logit;
  return l;
}

struct ValidationScore {
  double loss = 0.0;
  std::optional<double> auroc;
};

ValidationScore score_validation(const KneeRefs& val, Approach approach, int horizon,
                                 const EncoderModel& f, const EncoderModel* g) {
  ValidationScore s;
  std::vector<double> risks;
  std::vector<int> labels;
  for (const KneeRecord* k : val) {
    const auto pred = riskform::predict(head_of(approach), logits_for(f, g, *k));
    const auto l = labels_of(*k, horizon);
    s.loss += riskform::pair_loss_value(pred, l);
    risks.push_back(pred.y1.p);
    labels.push_back(l.y1);
    if (pred.y2) {
      risks.push_back(pred.y2->p);
      labels.push_back(*l.y2);
    }
  }
  if (!val.empty()) s.loss /= static_cast<double>(val.size());
  const auto pos = std::count(labels.begin(), labels.end(), 1);
  if (pos > 0 && static_cast<std::size_t>(pos) < labels.size()) s.auroc = metrics::auroc(risks, labels);
  return s;
}

}  // namespace

FoldModel train_fold(const KneeRefs& train, const KneeRefs& validation, Approach approach,
                     int horizon, const TrainConfig& config, std::uint64_t seed) {
  config.validate();
  cohort::horizon_index(horizon);
  if (train.empty()) throw DataError("train_fold: empty training set");

  gradnet::EncoderConfig enc = config.encoder;
  enc.input_dim = train.front()->scan1.features.size();
  enc.seed = derive_seed(seed, {1});
  FoldModel out;
  out.f = gradnet::init_kaiming(enc);
  if (uses_second_model(approach)) {
    enc.seed = derive_seed(seed, {2});
    out.g = gradnet::init_kaiming(enc);
  }
  EncoderModel& f = out.f;
  EncoderModel* g = out.g ? &*out.g : nullptr;

  auto adam_f = gradnet::AdamState::for_model(f, config.adam);
  std::optional<gradnet::AdamState> adam_g;
  if (g) adam_g = gradnet::AdamState::for_model(*g, config.adam);

  // Validation without both classes falls back to loss-based selection.
  // An empty validation set selects on training loss instead.
  bool by_loss = true;
  if (!validation.empty()) {
    const auto probe = score_validation(validation, approach, horizon, f, g);
    by_loss = !probe.auroc.has_value();
  }
  out.selected_by_loss = by_loss;

  EncoderModel best_f = f;
  std::optional<EncoderModel> best_g = out.g;
  double best = by_loss ? std::numeric_limits<double>::infinity()
                        : -std::numeric_limits<double>::infinity();

  Rng rng = make_rng(seed, {3});
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  Gradients gf = Gradients::zeros_like(f);
  Gradients gg = g ? Gradients::zeros_like(*g) : Gradients{};

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      gf.scale(0.0);
      if (g) gg.scale(0.0);
      bool any_pair = false;
      for (std::size_t i = start; i < end; ++i) {
        const KneeRecord& k = *train[order[i]];
        any_pair = any_pair || k.paired();
        epoch_loss += accumulate_knee(k, approach, horizon, config.reg, f, g, gf, g ? &gg : nullptr);
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      gf.scale(inv);
      gradnet::adam_step(adam_f, f, gf);
      if (g && any_pair) {
        gg.scale(inv);
        gradnet::adam_step(*adam_g, *g, gg);
      }
    }

    EpochLog log;
    log.epoch = static_cast<int>(epoch);
    log.train_loss = epoch_loss / static_cast<double>(train.size());
    if (!validation.empty()) {
      const auto v = score_validation(validation, approach, horizon, f, g);
      log.val_loss = v.loss;
      log.val_auroc = v.auroc;
    } else {
      log.val_loss = log.train_loss;
    }
    const bool better = by_loss ? log.val_loss < best : (log.val_auroc && *log.val_auroc > best);
    if (better) {
      best = by_loss ? log.val_loss : *log.val_auroc;
      best_f = f;
      best_g = out.g;
      out.best_epoch = log.epoch;
    }
    out.log.push_back(log);
  }
  out.f = std::move(best_f);
  out.g = std::move(best_g);
  return out;
}

ScanRisks member_risks(const FoldModel& member, Approach approach, const KneeRecord& knee) {
  const EncoderModel* g = member.g ? &*member.g : nullptr;
  if (uses_second_model(approach) && !g) throw InvariantError("RiskFORM2 member is missing model g");
  const auto pred = riskform::predict(head_of(approach), logits_for(member.f, g, knee));
  return ScanRisks{pred.y1.p, pred.y2_hat()};
}

// ---------------------------------------------------------------------------
// Bundles

namespace {

struct BundleJob {
  int outer;
  int inner;
  KneeRefs train;
  KneeRefs validation;
};

std::vector<BundleJob> bundle_jobs(const std::vector<KneeRecord>& knees, const SplitPlan& plan) {
  std::map<std::uint32_t, const KneeRecord*> by_subject;
  for (const auto& k : knees) by_subject[k.subject.subject_id] = &k;
  auto refs = [&](const std::vector<std::uint32_t>& ids) {
    KneeRefs out;
    for (std::uint32_t id : ids) out.push_back(by_subject.at(id));
    return out;
  };
  std::vector<BundleJob> jobs;
  for (int o = 0; o < plan.n_outer; ++o)
    for (int i = 0; i < plan.n_inner(); ++i)
      jobs.push_back({o, i, refs(plan.train_subjects(o, i)), refs(plan.validation_subjects(o, i))});
  return jobs;
}

TrainedBundle bundle_shell(const std::vector<KneeRecord>& knees, Approach approach, int horizon,
                           const TrainConfig& config, std::uint64_t seed, int n_outer) {
  config.validate();
  cohort::horizon_index(horizon);
  TrainedBundle b;
  b.approach = approach;
  b.horizon = horizon;
  b.seed = seed;
  b.config = config;
  b.plan = build_split_plan(knees, split_seed(seed), n_outer);
  b.members.resize(b.expected_members());
  return b;
}

FoldModel run_job(const BundleJob& job, Approach approach, int horizon, const TrainConfig& config,
                  std::uint64_t seed) {
  FoldModel m = train_fold(job.train, job.validation, approach, horizon, config,
                           member_seed(seed, job.outer, job.inner));
  m.outer = job.outer;
  m.inner = job.inner;
  return m;
}

int resolve_threads(int requested) { return requested > 0 ? requested : omp_get_max_threads(); }

}  // namespace

TrainedBundle train_bundle(const std::vector<KneeRecord>& knees, Approach approach, int horizon,
                           const TrainConfig& config, std::uint64_t seed, int n_outer) {
  TrainedBundle b = bundle_shell(knees, approach, horizon, config, seed, n_outer);
  const auto jobs = bundle_jobs(knees, b.plan);
  std::vector<std::exception_ptr> errors(jobs.size());
  const auto n = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(resolve_threads(config.threads))
  for (std::ptrdiff_t j = 0; j < n; ++j) {
    const auto idx = static_cast<std::size_t>(j);
    try {
      b.members[idx] = run_job(jobs[idx], approach, horizon, config, seed);
    } catch (...) {
      errors[idx] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return b;
}

namespace {

std::vector<std::vector<std::size_t>> members_by_outer(const TrainedBundle& bundle) {
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(bundle.plan.n_outer));
  for (std::size_t m = 0; m < bundle.members.size(); ++m)
    out.at(static_cast<std::size_t>(bundle.members[m].outer)).push_back(m);
  return out;
}

struct PredictJob {
  const KneeRecord* knee;
  std::size_t slot;
  int outer;
};

std::vector<PredictJob> predict_jobs(const TrainedBundle& bundle, const std::vector<KneeRecord>& knees,
                                     Scope scope) {
  if (bundle.members.size() != bundle.expected_members())
    throw InvariantError("bundle has " + std::to_string(bundle.members.size()) + " members, expected " +
                         std::to_string(bundle.expected_members()));
  std::vector<PredictJob> jobs;
  std::size_t slot = 0;
  for (const auto& k : knees) {
    int outer = -1;
    if (scope == Scope::internal) {
      auto it = bundle.plan.fold_of.find(k.subject.subject_id);
      if (it == bundle.plan.fold_of.end())
        throw DataError("internal scope: subject " + std::to_string(k.subject.subject_id) +
                        " is not in the split plan");
      outer = it->second;
    }
    jobs.push_back({&k, slot, outer});
    slot += k.scan_count();
  }
  return jobs;
}

void predict_one(const TrainedBundle& bundle, const std::vector<std::vector<std::size_t>>& by_outer,
                 const PredictJob& job, std::vector<metrics::PredictionRecord>& out) {
  const KneeRecord& k = *job.knee;
  double sum1 = 0.0, sum2 = 0.0;
  std::size_t count = 0;
  auto visit = [&](const FoldModel& m) {
    const ScanRisks r = member_risks(m, bundle.approach, k);
    sum1 += r.scan1;
    if (r.scan2) sum2 += *r.scan2;
    ++count;
  };
  if (job.outer >= 0) {
    for (std::size_t m : by_outer[static_cast<std::size_t>(job.outer)]) visit(bundle.members[m]);
  } else {
    for (const auto& m : bundle.members) visit(m);
  }

  auto record = [&](const cohort::ScanSample& s, double risk) {
    metrics::PredictionRecord r;
    r.subject_id = k.subject.subject_id;
    r.knee_id = k.knee_id;
    r.scan_index = s.scan_index;
    r.risk = risk;
    r.label = s.label(bundle.horizon);
    r.klg = s.klg;
    r.group = k.group(bundle.horizon);
    r.horizon = bundle.horizon;
    r.outer_fold = job.outer;
    return r;
  };
  const double n = static_cast<double>(count);
  out[job.slot] = record(k.scan1, sum1 / n);
  if (k.scan2) out[job.slot + 1] = record(*k.scan2, sum2 / n);
}

std::size_t scan_total(const std::vector<KneeRecord>& knees) {
  std::size_t n = 0;
  for (const auto& k : knees) n += k.scan_count();
  return n;
}

}  // namespace

std::vector<metrics::PredictionRecord> ensemble_predict(const TrainedBundle& bundle,
                                                        const std::vector<KneeRecord>& knees,
                                                        Scope scope) {
  const auto jobs = predict_jobs(bundle, knees, scope);
  const auto by_outer = members_by_outer(bundle);
  std::vector<metrics::PredictionRecord> out(scan_total(knees));
  const auto n = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(static) num_threads(resolve_threads(bundle.config.threads))
  for (std::ptrdiff_t j = 0; j < n; ++j) predict_one(bundle, by_outer, jobs[static_cast<std::size_t>(j)], out);
  return out;
}

bool leakage_free(const TrainedBundle& bundle, const std::vector<metrics::PredictionRecord>& records) {
  for (const auto& r : records) {
    if (r.outer_fold < 0) continue;
    auto it = bundle.plan.fold_of.find(r.subject_id);
    if (it == bundle.plan.fold_of.end() || it->second != r.outer_fold) return false;
    for (const auto& m : bundle.members) {
      if (m.outer != r.outer_fold) continue;
      const auto train = bundle.plan.train_subjects(m.outer, m.inner);
      const auto val = bundle.plan.validation_subjects(m.outer, m.inner);
      if (std::binary_search(train.begin(), train.end(), r.subject_id) ||
          std::binary_search(val.begin(), val.end(), r.subject_id))
        return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Reports

std::string to_string(AnalyticalCohort c) {
  switch (c) {
    case AnalyticalCohort::Cohort1: return "Cohort1";
    case AnalyticalCohort::Cohort2: return "Cohort2";
    case AnalyticalCohort::Cohort3: return "Cohort3";
    case AnalyticalCohort::Cohort4: return "Cohort4";
  }
  return "?";
}

bool in_cohort(AnalyticalCohort c, cohort::Group g) {
  using cohort::Group;
  switch (c) {
    case AnalyticalCohort::Cohort1: return g == Group::Set1;
    case AnalyticalCohort::Cohort2: return g == Group::Set1 || g == Group::Set2;
    case AnalyticalCohort::Cohort3: return g == Group::Set1 || g == Group::Set3;
    case AnalyticalCohort::Cohort4: return g == Group::Set2 || g == Group::Set3;
  }
  return false;
}

namespace {

struct Slice {
  std::vector<double> risks;
  std::vector<int> labels;
  std::size_t n_pos = 0;

  void add(const metrics::PredictionRecord& r) {
    risks.push_back(r.risk);
    labels.push_back(r.label);
    n_pos += static_cast<std::size_t>(r.label);
  }
  std::size_t n_neg() const { return labels.size() - n_pos; }
  std::string absent_reason() const {
    if (labels.empty()) return "empty";
    if (n_pos == 0 || n_pos == labels.size()) return "single_class";
    return {};
  }
};

}  // namespace

std::vector<SubgroupMetrics> subgroup_report(const std::vector<metrics::PredictionRecord>& records,
                                             const std::vector<AnalyticalCohort>& cohorts) {
  std::vector<SubgroupMetrics> out;
  for (AnalyticalCohort c : cohorts) {
    Slice slice;
    for (const auto& r : records)
      if (in_cohort(c, r.group)) slice.add(r);
    SubgroupMetrics m;
    m.cohort = c;
    m.n_pos = slice.n_pos;
    m.n_neg = slice.n_neg();
    const std::string reason = slice.absent_reason();
    if (reason.empty()) {
      m.auroc.value = metrics::auroc(slice.risks, slice.labels);
      m.auprc.value = metrics::auprc(slice.risks, slice.labels);
    } else {
      m.auroc.reason = m.auprc.reason = reason;
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::array<KlgMetrics, 5> klg_report(const std::vector<metrics::PredictionRecord>& records) {
  std::array<KlgMetrics, 5> out;
  for (int grade = 0; grade < 5; ++grade) {
    Slice slice;
    for (const auto& r : records)
      if (r.klg == grade) slice.add(r);
    KlgMetrics& m = out[static_cast<std::size_t>(grade)];
    m.grade = grade;
    m.n_pos = slice.n_pos;
    m.n_neg = slice.n_neg();
    const std::string reason = slice.absent_reason();
    if (reason.empty()) m.auroc.value = metrics::auroc(slice.risks, slice.labels);
    else m.auroc.reason = reason;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serial references

namespace reference {

TrainedBundle train_bundle(const std::vector<KneeRecord>& knees, Approach approach, int horizon,
                           const TrainConfig& config, std::uint64_t seed, int n_outer) {
  TrainedBundle b = bundle_shell(knees, approach, horizon, config, seed, n_outer);
  const auto jobs = bundle_jobs(knees, b.plan);
  for (std::size_t j = 0; j < jobs.size(); ++j) b.members[j] = run_job(jobs[j], approach, horizon, config, seed);
  return b;
}

std::vector<metrics::PredictionRecord> ensemble_predict(const TrainedBundle& bundle,
                                                        const std::vector<KneeRecord>& knees,
                                                        Scope scope) {
  const auto jobs = predict_jobs(bundle, knees, scope);
  const auto by_outer = members_by_outer(bundle);
  std::vector<metrics::PredictionRecord> out(scan_total(knees));
  for (const auto& job : jobs) predict_one(bundle, by_outer, job, out);
  return out;
}

}  // namespace reference

}  // namespace progrisk::cv
