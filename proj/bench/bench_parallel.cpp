// Serial reference kernels against their OpenMP versions.

#include <benchmark/benchmark.h>

#include <omp.h>

#include <random>

#include "progrisk/cohort.hpp"
#include "progrisk/cvharness.hpp"
#include "progrisk/metrics.hpp"

using namespace progrisk;

namespace {

const std::vector<cohort::KneeRecord>& knees() {
  static const auto k = [] {
    cohort::SimConfig sc;
    sc.n_subjects = 400;
    return cohort::build_cohort(cohort::simulate_cohort(sc, 3)).knees;
  }();
  return k;
}

cv::TrainConfig train_config(int threads) {
  cv::TrainConfig c;
  c.encoder.hidden_dims = {32, 16};
  c.epochs = 5;
  c.threads = threads;
  return c;
}

void BM_train_bundle_serial(benchmark::State& state) {
  knees();
  for (auto _ : state)
    benchmark::DoNotOptimize(
        cv::reference::train_bundle(knees(), cv::Approach::RiskFORM2, 1, train_config(1), 1));
}

void BM_train_bundle_omp(benchmark::State& state) {
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(
        cv::train_bundle(knees(), cv::Approach::RiskFORM2, 1, train_config(threads), 1));
}

const cv::TrainedBundle& bundle() {
  static const auto b = cv::train_bundle(knees(), cv::Approach::RiskFORM2, 1, train_config(0), 1);
  return b;
}

void BM_ensemble_predict_serial(benchmark::State& state) {
  bundle();
  for (auto _ : state)
    benchmark::DoNotOptimize(cv::reference::ensemble_predict(bundle(), knees(), cv::Scope::external));
}

void BM_ensemble_predict_omp(benchmark::State& state) {
  cv::TrainedBundle b = bundle();
  b.config.threads = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(cv::ensemble_predict(b, knees(), cv::Scope::external));
}

struct Scores {
  std::vector<double> s;
  std::vector<int> y;
};

const Scores& scores() {
  static const Scores d = [] {
    Scores out;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
      const int label = i % 4 == 0;
      out.y.push_back(label);
      out.s.push_back(label + nd(rng));
    }
    return out;
  }();
  return d;
}

void BM_bootstrap_serial(benchmark::State& state) {
  metrics::BootstrapConfig c;
  c.seed = 1;
  scores();
  for (auto _ : state)
    benchmark::DoNotOptimize(
        metrics::reference::bootstrap_ci(scores().s, scores().y, metrics::Metric::auroc, c));
}

void BM_bootstrap_omp(benchmark::State& state) {
  metrics::BootstrapConfig c;
  c.seed = 1;
  c.threads = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(metrics::bootstrap_ci(scores().s, scores().y, metrics::Metric::auroc, c));
}

void thread_counts(benchmark::internal::Benchmark* b) {
  for (int t = 1; t <= omp_get_max_threads(); t *= 2) b->Arg(t);
  if ((omp_get_max_threads() & (omp_get_max_threads() - 1)) != 0) b->Arg(omp_get_max_threads());
}

}  // namespace

BENCHMARK(BM_train_bundle_serial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_train_bundle_omp)->Apply(thread_counts)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ensemble_predict_serial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ensemble_predict_omp)->Apply(thread_counts)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_bootstrap_serial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_bootstrap_omp)->Apply(thread_counts)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
