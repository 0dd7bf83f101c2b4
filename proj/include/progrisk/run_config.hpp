#pragma once

// Run configuration: a flat, typed `key = value` text format with dotted keys.
// Blank lines and lines starting with '#' are ignored; unknown keys, repeated
// keys and malformed values raise ConfigError naming the key and line.
// The full key list with defaults is in docs/file_formats.md.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "progrisk/cohort.hpp"
#include "progrisk/cvharness.hpp"
#include "progrisk/metrics.hpp"

namespace progrisk {

struct RunConfig {
  std::uint64_t seed = 1;
  cohort::SimConfig cohort;
  cv::TrainConfig train;
  cv::Approach approach = cv::Approach::Baseline;
  int horizon = 1;
  int cv_outer = 7;
  int cv_inner = 6;
  std::size_t bootstrap_resamples = 2000;
  double bootstrap_level = 0.95;
  cv::Scope scope = cv::Scope::internal;
  std::string cohort_csv = "cohort.csv";
  // Paths may use {approach} and {horizon}. A reference manifest that does not
  // exist is skipped with a note; an empty one disables the comparison.
  std::string bundle_dir = "bundles/{approach}_h{horizon}";
  std::string report = "report.json";
  std::string reference_manifest = "bundles/Baseline_h{horizon}/manifest.json";
  std::string predictions_csv;     // empty: not written

  // Cross-field checks; throws ConfigError.
  void validate() const;

  // Keys in canonical order.
  static const std::vector<std::string>& keys();
  std::string get(const std::string& key) const;
  // Throws ConfigError for unknown keys or values that fail to parse.
  void set(const std::string& key, const std::string& value);
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

// exec.* keys (thread counts) never change results and are left out of the
// config embedded in artifacts.
bool is_execution_key(const std::string& key);

// Every key with its effective value, one `key = value` line each.
std::string to_text(const RunConfig& config, bool include_execution = true);

// Non-execution keys as a JSON object of key -> string value.
nlohmann::json to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j);

}  // namespace progrisk
