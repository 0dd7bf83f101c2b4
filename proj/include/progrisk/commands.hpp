#pragma once

// The four CLI commands as library calls. Each writes its artifacts to the
// paths in the run config and prints progress and summaries to `log`.
// Errors surface as ConfigError, DataError or InvariantError.

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "progrisk/cohort.hpp"
#include "progrisk/run_config.hpp"

namespace progrisk::cli {

inline constexpr int kReportSchemaVersion = 1;

// `{approach}` and `{horizon}` in a path are replaced by their values.
std::string expand_path(const std::string& pattern, cv::Approach approach, int horizon);

cohort::CohortSummary cmd_simulate(const RunConfig& config, std::ostream& log);

// Returns the manifest path.
std::filesystem::path cmd_train(const RunConfig& config, std::ostream& log);

// Evaluates each manifest on the cohort at config.cohort_csv; with no
// manifests, the bundle at config.bundle_dir for (approach, horizon).
// Writes and returns the report JSON.
nlohmann::json cmd_evaluate(const RunConfig& config,
                            const std::vector<std::filesystem::path>& manifests,
                            std::ostream& log);

struct ReportOptions {
  int subgroup_horizon = 4;  // horizon for the subgroup and KLG tables
  std::optional<std::filesystem::path> csv_dir;
};

// Renders tables from one or more report files to `out`; CSV exports go to
// csv_dir when set.
void cmd_report(const std::vector<std::filesystem::path>& reports, const ReportOptions& options,
                std::ostream& out);

}  // namespace progrisk::cli
