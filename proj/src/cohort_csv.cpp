#include "progrisk/cohort_csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "progrisk/errors.hpp"

namespace progrisk::cohort {

namespace {

const std::vector<std::string> kFixedColumns{
    "subject_id", "knee_id", "role",      "age",  "sex",  "ethnicity", "bmi",
    "scan_index", "scan_time_months", "klg", "y_1yr", "y_2yr", "y_4yr"};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

struct RowParser {
  std::size_t line_no;
  const std::vector<std::string>& header;
  const std::vector<std::string>& cells;

  [[noreturn]] void fail(std::size_t col, const std::string& why) const {
    throw DataError("cohort CSV line " + std::to_string(line_no) + ", column '" + header[col] +
                    "': " + why + " (value '" + cells[col] + "')");
  }

  template <typename T>
  T number(std::size_t col) const {
    const std::string& s = cells[col];
    T v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) fail(col, "not a number");
    if constexpr (std::is_floating_point_v<T>) {
      if (!std::isfinite(v)) fail(col, "not finite");
    }
    return v;
  }

  int binary(std::size_t col) const {
    const int v = number<int>(col);
    if (v != 0 && v != 1) fail(col, "expected 0 or 1");
    return v;
  }
};

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_cohort_csv(std::ostream& out, const std::vector<KneeRecord>& knees,
                      const std::vector<std::string>& comment_lines) {
  for (const auto& c : comment_lines) out << "# " << c << '\n';
  const std::size_t dim = knees.empty() ? 0 : knees.front().scan1.features.size();
  for (std::size_t i = 0; i < kFixedColumns.size(); ++i) out << (i ? "," : "") << kFixedColumns[i];
  for (std::size_t i = 0; i < dim; ++i) out << ",f" << i;
  out << '\n';

  std::vector<const KneeRecord*> order;
  for (const auto& k : knees) order.push_back(&k);
  std::stable_sort(order.begin(), order.end(), [](const KneeRecord* a, const KneeRecord* b) {
    return a->subject.subject_id < b->subject.subject_id;
  });

  auto row = [&](const KneeRecord& k, const ScanSample& s) {
    if (s.features.size() != dim) throw InvariantError("cohort rows have differing feature counts");
    out << k.subject.subject_id << ',' << k.knee_id << ',' << to_string(k.subject.role) << ','
        << k.subject.age << ',' << to_string(k.subject.sex) << ',' << k.subject.ethnicity << ','
        << format_double(k.subject.bmi) << ',' << s.scan_index << ','
        << format_double(s.scan_time_months) << ',' << s.klg << ',' << s.labels[0] << ','
        << s.labels[1] << ',' << s.labels[2];
    for (double f : s.features) out << ',' << format_double(f);
    out << '\n';
  };
  for (const KneeRecord* k : order) {
    row(*k, k->scan1);
    if (k->scan2) row(*k, *k->scan2);
  }
}

void write_cohort_csv(const std::filesystem::path& path, const std::vector<KneeRecord>& knees,
                      const std::vector<std::string>& comment_lines) {
  const auto parent = path.parent_path();
  if (!parent.empty() && !std::filesystem::is_directory(parent))
    throw DataError("output directory does not exist: " + parent.string());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write cohort CSV " + path.string());
  write_cohort_csv(out, knees, comment_lines);
  if (!out) throw DataError("write failed for " + path.string());
}

std::vector<KneeRecord> read_cohort_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    header = split(line);
    break;
  }
  if (header.empty()) throw DataError("cohort CSV has no header row");
  for (std::size_t i = 0; i < kFixedColumns.size(); ++i) {
    if (i >= header.size() || header[i] != kFixedColumns[i])
      throw DataError("cohort CSV header: expected column '" + kFixedColumns[i] + "' at position " +
                      std::to_string(i + 1));
  }
  const std::size_t dim = header.size() - kFixedColumns.size();
  for (std::size_t i = 0; i < dim; ++i) {
    if (header[kFixedColumns.size() + i] != "f" + std::to_string(i))
      throw DataError("cohort CSV header: expected column 'f" + std::to_string(i) + "'");
  }
  if (dim == 0) throw DataError("cohort CSV has no feature columns");

  std::vector<KneeRecord> knees;
  std::map<std::uint32_t, std::size_t> by_subject;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      throw DataError("cohort CSV line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " columns, found " +
                      std::to_string(cells.size()));
    RowParser p{line_no, header, cells};

    SubjectRecord subj;
    subj.subject_id = p.number<std::uint32_t>(0);
    const auto knee_id = p.number<std::uint32_t>(1);
    if (cells[2] == "case") subj.role = Role::Case;
    else if (cells[2] == "control") subj.role = Role::Control;
    else p.fail(2, "expected 'case' or 'control'");
    subj.age = p.number<int>(3);
    if (cells[4] == "M") subj.sex = Sex::M;
    else if (cells[4] == "F") subj.sex = Sex::F;
    else p.fail(4, "expected 'M' or 'F'");
    subj.ethnicity = p.number<int>(5);
    subj.bmi = p.number<double>(6);
    if (!(subj.bmi > 0.0)) p.fail(6, "bmi must be positive");

    ScanSample scan;
    scan.knee_id = knee_id;
    scan.scan_index = p.number<int>(7);
    if (scan.scan_index != 1 && scan.scan_index != 2) p.fail(7, "expected 1 or 2");
    scan.scan_time_months = p.number<double>(8);
    scan.klg = p.number<int>(9);
    if (scan.klg < 0 || scan.klg > 4) p.fail(9, "expected 0..4");
    for (int h = 0; h < 3; ++h) scan.labels[static_cast<std::size_t>(h)] = p.binary(10 + static_cast<std::size_t>(h));
    scan.features.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) scan.features[i] = p.number<double>(kFixedColumns.size() + i);

    auto it = by_subject.find(subj.subject_id);
    if (scan.scan_index == 1) {
      if (it != by_subject.end()) p.fail(7, "duplicate scan 1 for subject");
      KneeRecord k;
      k.subject = subj;
      k.knee_id = knee_id;
      k.scan1 = std::move(scan);
      by_subject.emplace(subj.subject_id, knees.size());
      knees.push_back(std::move(k));
    } else {
      if (it == by_subject.end()) p.fail(7, "scan 2 appears before scan 1");
      KneeRecord& k = knees[it->second];
      if (k.scan2) p.fail(7, "duplicate scan 2 for subject");
      if (k.knee_id != knee_id) p.fail(1, "knee_id differs from scan 1");
      if (!(scan.scan_time_months > k.scan1.scan_time_months)) p.fail(8, "scan 2 must be later than scan 1");
      k.scan2 = std::move(scan);
    }
  }
  for (auto& k : knees) refresh_groups(k);
  return knees;
}

std::vector<KneeRecord> read_cohort_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read cohort CSV " + path.string());
  return read_cohort_csv(in);
}

}  // namespace progrisk::cohort
