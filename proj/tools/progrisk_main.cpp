#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "progrisk/commands.hpp"
#include "progrisk/errors.hpp"
#include "progrisk/run_config.hpp"

namespace fs = std::filesystem;
using namespace progrisk;

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> approach;
  std::optional<int> horizon;
  std::optional<std::string> scope;
  std::optional<std::string> reference;
  std::optional<std::string> cohort;
  std::optional<std::string> bundle_dir;
  std::optional<std::string> output;
  std::optional<int> threads;
  std::vector<std::string> set;
  std::vector<std::string> manifests;
  std::vector<std::string> reports;
  std::optional<std::string> csv_dir;
  bool print_config = false;
};

RunConfig resolve(const Flags& f, const std::string& output_key) {
  RunConfig c = f.config.empty() ? RunConfig{} : load_run_config(f.config);
  for (const auto& kv : f.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    c.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (f.seed) c.seed = *f.seed;
  if (f.approach) c.set("train.approach", *f.approach);
  if (f.horizon) c.set("train.horizon", std::to_string(*f.horizon));
  if (f.scope) c.set("eval.scope", *f.scope);
  if (f.reference) {
    if (!fs::exists(*f.reference)) throw ConfigError("--reference: no such file " + *f.reference);
    c.reference_manifest = *f.reference;
  }
  if (f.cohort) c.cohort_csv = *f.cohort;
  if (f.bundle_dir) c.bundle_dir = *f.bundle_dir;
  if (f.threads) c.train.threads = *f.threads;
  if (f.output && !output_key.empty()) c.set(output_key, *f.output);
  c.validate();
  return c;
}

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "Config file (key = value lines, or a JSON artifact)");
  cmd->add_option("--seed", f.seed, "Master seed (overrides the config)");
  cmd->add_option("--set", f.set, "Override any config key: --set key=value");
  cmd->add_option("--threads", f.threads, "Worker threads; 0 uses every core");
  cmd->add_flag("--print-config", f.print_config, "Print the effective config and exit");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monotone TKR risk models: simulate, train, evaluate, report"};
  app.require_subcommand(1);
  Flags f;

  auto* sim = app.add_subcommand("simulate", "Simulate a matched cohort and write its CSV");
  add_common(sim, f);
  sim->add_option("-o,--output", f.output, "Cohort CSV path (paths.cohort_csv)");

  auto* train = app.add_subcommand("train", "Train the nested-CV bundle for one approach and horizon");
  add_common(train, f);
  train->add_option("--approach", f.approach, "Baseline, RiskReg, ConReg, ConReg+RiskReg, RiskFORM1, RiskFORM2");
  train->add_option("--horizon", f.horizon, "1, 2 or 4 (years)");
  train->add_option("--cohort", f.cohort, "Cohort CSV (paths.cohort_csv)");
  train->add_option("--bundle-dir", f.bundle_dir, "Output directory (paths.bundle_dir)");

  auto* eval = app.add_subcommand("evaluate", "Score bundles on a cohort and write a report JSON");
  add_common(eval, f);
  eval->add_option("--manifest", f.manifests, "Bundle manifest(s); default: the configured bundle");
  eval->add_option("--approach", f.approach, "Approach of the default bundle");
  eval->add_option("--horizon", f.horizon, "Horizon of the default bundle");
  eval->add_option("--scope", f.scope, "internal or external");
  eval->add_option("--reference", f.reference, "Manifest of the DeLong reference bundle");
  eval->add_option("--cohort", f.cohort, "Cohort CSV (paths.cohort_csv)");
  eval->add_option("--bundle-dir", f.bundle_dir, "Bundle directory pattern (paths.bundle_dir)");
  eval->add_option("-o,--output", f.output, "Report JSON path (paths.report)");

  auto* report = app.add_subcommand("report", "Render report JSON files as tables");
  report->add_option("reports", f.reports, "Report JSON files")->required();
  report->add_option("--horizon", f.horizon, "Horizon for subgroup and KLG tables (default 4)");
  report->add_option("--csv-dir", f.csv_dir, "Directory for CSV exports");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (report->parsed()) {
      cli::ReportOptions opt;
      if (f.horizon) opt.subgroup_horizon = *f.horizon;
      if (f.csv_dir) opt.csv_dir = fs::path(*f.csv_dir);
      std::vector<fs::path> paths(f.reports.begin(), f.reports.end());
      cli::cmd_report(paths, opt, std::cout);
      return 0;
    }
    const std::string output_key = sim->parsed() ? "paths.cohort_csv"
                                   : eval->parsed() ? "paths.report"
                                                    : "";
    const RunConfig config = resolve(f, output_key);
    if (f.print_config) {
      std::cout << to_text(config);
      return 0;
    }
    if (sim->parsed()) {
      cli::cmd_simulate(config, std::cout);
    } else if (train->parsed()) {
      cli::cmd_train(config, std::cout);
    } else if (eval->parsed()) {
      std::vector<fs::path> manifests(f.manifests.begin(), f.manifests.end());
      cli::cmd_evaluate(config, manifests, std::cout);
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const InvariantError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
