#pragma once

// Cohort CSV: one row per scan, rows ordered by (subject_id, scan_index).
//
//   subject_id,knee_id,role,age,sex,ethnicity,bmi,scan_index,scan_time_months,
//   klg,y_1yr,y_2yr,y_4yr,f0,...,f{d-1}
//
// Lines starting with '#' before the header carry the effective run config
// and are skipped by the reader. Reals use the shortest round-trip form.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "progrisk/cohort.hpp"

namespace progrisk::cohort {

std::string format_double(double v);

void write_cohort_csv(std::ostream& out, const std::vector<KneeRecord>& knees,
                      const std::vector<std::string>& comment_lines = {});
void write_cohort_csv(const std::filesystem::path& path, const std::vector<KneeRecord>& knees,
                      const std::vector<std::string>& comment_lines = {});

// Throws DataError naming the line and column of the first violation.
std::vector<KneeRecord> read_cohort_csv(std::istream& in);
std::vector<KneeRecord> read_cohort_csv(const std::filesystem::path& path);

}  // namespace progrisk::cohort
