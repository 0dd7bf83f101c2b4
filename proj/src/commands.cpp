#include "progrisk/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "progrisk/bundle_io.hpp"
#include "progrisk/cohort_csv.hpp"
#include "progrisk/errors.hpp"
#include "progrisk/rng.hpp"

namespace progrisk::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string expand_path(const std::string& pattern, cv::Approach approach, int horizon) {
  std::string out = pattern;
  auto replace = [&out](const std::string& key, const std::string& value) {
    for (auto pos = out.find(key); pos != std::string::npos; pos = out.find(key, pos + value.size()))
      out.replace(pos, key.size(), value);
  };
  replace("{approach}", cv::to_string(approach));
  replace("{horizon}", std::to_string(horizon));
  return out;
}

namespace {

std::vector<std::string> config_comment_lines(const RunConfig& config) {
  std::vector<std::string> lines{"progrisk cohort; effective config:"};
  std::istringstream in(to_text(config, false));
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  const fs::path parent = path.parent_path();
  if (!parent.empty() && !fs::is_directory(parent))
    throw DataError("output directory does not exist: " + parent.string());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

std::string fixed(double v, int digits = 3) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

cohort::CohortSummary cmd_simulate(const RunConfig& config, std::ostream& log) {
  config.validate();
  const cohort::Population pop = cohort::simulate_cohort(config.cohort, config.seed);
  const cohort::Cohort c = cohort::build_cohort(pop);
  cohort::write_cohort_csv(fs::path(config.cohort_csv), c.knees, config_comment_lines(config));
  const cohort::CohortSummary s = cohort::summarize(c);
  log << "wrote " << config.cohort_csv << "\n"
      << "subjects " << s.subjects << " (cases " << s.cases << ", unmatched " << s.excluded << ")\n"
      << "knees " << s.knees << ", paired knees " << s.paired_knees << ", scans " << s.scans << "\n";
  for (int h : cohort::kHorizons) {
    const auto& sets = s.set_sizes[cohort::horizon_index(h)];
    log << "horizon " << h << "y: Set1 " << sets[0] << ", Set2 " << sets[1] << ", Set3 " << sets[2]
        << "\n";
  }
  return s;
}

fs::path cmd_train(const RunConfig& config, std::ostream& log) {
  config.validate();
  const auto knees = cohort::read_cohort_csv(fs::path(config.cohort_csv));
  if (knees.empty()) throw DataError(config.cohort_csv + ": no knees");
  cv::TrainConfig tc = config.train;
  tc.encoder.input_dim = knees.front().scan1.features.size();
  const fs::path dir = expand_path(config.bundle_dir, config.approach, config.horizon);
  log << "training " << cv::to_string(config.approach) << " for the " << config.horizon
      << "-year horizon on " << knees.size() << " knees\n";
  const cv::TrainedBundle bundle =
      cv::train_bundle(knees, config.approach, config.horizon, tc, config.seed, config.cv_outer);
  std::size_t by_loss = 0;
  for (const auto& m : bundle.members) {
    if (m.selected_by_loss) {
      ++by_loss;
      log << "note: member (" << m.outer << ", " << m.inner
          << ") had a single-class validation fold; selected by validation loss\n";
    }
  }
  const fs::path manifest = cv::save_bundle(bundle, dir, to_json(config));
  const json j = json::parse(read_file(manifest));
  log << "wrote " << manifest.string() << " (" << bundle.members.size() << " members, "
      << by_loss << " selected by loss, manifest hash " << j.at("manifest_hash").get<std::string>()
      << ")\n";
  return manifest;
}

namespace {

struct Evaluated {
  cv::LoadedBundle loaded;
  std::vector<metrics::PredictionRecord> records;
};

Evaluated evaluate_bundle(const fs::path& manifest, const std::vector<cohort::KneeRecord>& knees,
                          cv::Scope scope) {
  Evaluated e{cv::load_bundle(manifest), {}};
  const auto dim = e.loaded.bundle.members.front().f.config.input_dim;
  if (!knees.empty() && knees.front().scan1.features.size() != dim)
    throw DataError("cohort feature dimension does not match bundle " + manifest.string());
  e.records = cv::ensemble_predict(e.loaded.bundle, knees, scope);
  if (scope == cv::Scope::internal && !cv::leakage_free(e.loaded.bundle, e.records))
    throw InvariantError("internal prediction used a member that trained on the subject");
  return e;
}

json metric_value_json(const cv::MetricValue& v) {
  return v.value ? json(*v.value) : json(nullptr);
}

json interval_json(const metrics::Interval& i) { return json::array({i.lo, i.hi}); }

void append_predictions(std::string& csv, const Evaluated& e, cv::Scope scope) {
  const auto& b = e.loaded.bundle;
  for (const auto& r : e.records) {
    csv += cv::to_string(b.approach) + "," + std::to_string(b.horizon) + "," + cv::to_string(scope) +
           "," + std::to_string(r.subject_id) + "," + std::to_string(r.knee_id) + "," +
           std::to_string(r.scan_index) + "," + std::to_string(r.outer_fold) + "," +
           std::to_string(r.label) + "," + std::to_string(r.klg) + "," +
           cohort::to_string(r.group) + "," +
           cohort::format_double(riskform::clamp_for_export(r.risk)) + "\n";
  }
}

}  // namespace

json cmd_evaluate(const RunConfig& config, const std::vector<fs::path>& manifests_in,
                  std::ostream& log) {
  config.validate();
  const fs::path cohort_path(config.cohort_csv);
  const std::string cohort_text = read_file(cohort_path);
  std::istringstream cohort_stream(cohort_text);
  const auto knees = cohort::read_cohort_csv(cohort_stream);

  std::vector<fs::path> manifests = manifests_in;
  if (manifests.empty())
    manifests.push_back(fs::path(expand_path(config.bundle_dir, config.approach, config.horizon)) /
                        "manifest.json");

  json entries = json::array();
  std::string predictions =
      "approach,horizon,scope,subject_id,knee_id,scan_index,outer_fold,label,klg,group,risk\n";
  std::map<std::string, Evaluated> reference_cache;

  for (const auto& manifest : manifests) {
    const Evaluated e = evaluate_bundle(manifest, knees, config.scope);
    const auto& b = e.loaded.bundle;
    std::vector<double> risks;
    std::vector<int> labels;
    for (const auto& r : e.records) {
      risks.push_back(r.risk);
      labels.push_back(r.label);
    }

    metrics::BootstrapConfig bc;
    bc.n_resamples = config.bootstrap_resamples;
    bc.level = config.bootstrap_level;
    bc.threads = config.train.threads;
    bc.seed = derive_seed(config.seed, {0x626f6f74, static_cast<std::uint64_t>(b.approach),
                                        static_cast<std::uint64_t>(b.horizon),
                                        static_cast<std::uint64_t>(config.scope)});
    const metrics::MetricReport mr = metrics::make_report(risks, labels, bc);

    json entry{{"approach", cv::to_string(b.approach)},
               {"horizon", b.horizon},
               {"scope", cv::to_string(config.scope)},
               {"manifest_hash", e.loaded.manifest.at("manifest_hash")},
               {"n_scans", e.records.size()},
               {"leakage_check", config.scope == cv::Scope::internal ? "passed" : "not_applicable"}};
    json m{{"auroc", mr.auroc},
           {"auroc_ci", interval_json(mr.auroc_ci)},
           {"auprc", mr.auprc},
           {"auprc_ci", interval_json(mr.auprc_ci)},
           {"n_pos", mr.n_pos},
           {"n_neg", mr.n_neg},
           {"ci_level", config.bootstrap_level},
           {"delong_p_vs_reference", nullptr},
           {"reference", nullptr}};

    if (!config.reference_manifest.empty()) {
      const fs::path ref_path = expand_path(config.reference_manifest, b.approach, b.horizon);
      if (!fs::exists(ref_path)) {
        log << "note: reference " << ref_path.string() << " not found; no DeLong comparison\n";
      } else {
        const std::string key = fs::weakly_canonical(ref_path).string();
        auto it = reference_cache.find(key);
        if (it == reference_cache.end())
          it = reference_cache.emplace(key, evaluate_bundle(ref_path, knees, config.scope)).first;
        const Evaluated& ref = it->second;
        if (ref.loaded.bundle.horizon != b.horizon)
          throw DataError("reference bundle " + ref_path.string() + " is for the " +
                          std::to_string(ref.loaded.bundle.horizon) + "-year horizon, not " +
                          std::to_string(b.horizon));
        std::vector<double> ref_risks;
        for (std::size_t i = 0; i < ref.records.size(); ++i) {
          if (ref.records[i].knee_id != e.records[i].knee_id ||
              ref.records[i].scan_index != e.records[i].scan_index)
            throw InvariantError("reference predictions are not aligned with the evaluated bundle");
          ref_risks.push_back(ref.records[i].risk);
        }
        const auto d = metrics::delong_test(risks, ref_risks, labels);
        m["delong_p_vs_reference"] = d.p_value;
        m["reference"] = {{"approach", cv::to_string(ref.loaded.bundle.approach)},
                          {"manifest_hash", ref.loaded.manifest.at("manifest_hash")},
                          {"auroc", d.auroc_b},
                          {"z", d.z}};
      }
    }
    entry["metrics"] = m;

    json subgroups = json::array();
    for (const auto& s : cv::subgroup_report(e.records)) {
      subgroups.push_back({{"cohort", cv::to_string(s.cohort)},
                           {"n_pos", s.n_pos},
                           {"n_neg", s.n_neg},
                           {"auroc", metric_value_json(s.auroc)},
                           {"auroc_reason", s.auroc.reason},
                           {"auprc", metric_value_json(s.auprc)},
                           {"auprc_reason", s.auprc.reason}});
    }
    entry["subgroups"] = subgroups;
    json klg = json::array();
    for (const auto& k : cv::klg_report(e.records)) {
      klg.push_back({{"grade", k.grade},
                     {"n_pos", k.n_pos},
                     {"n_neg", k.n_neg},
                     {"auroc", metric_value_json(k.auroc)},
                     {"auroc_reason", k.auroc.reason}});
    }
    entry["klg"] = klg;
    entries.push_back(entry);
    append_predictions(predictions, e, config.scope);

    log << cv::to_string(b.approach) << " h" << b.horizon << " " << cv::to_string(config.scope)
        << ": AUROC " << fixed(mr.auroc) << " [" << fixed(mr.auroc_ci.lo) << ", "
        << fixed(mr.auroc_ci.hi) << "], AUPRC " << fixed(mr.auprc) << " [" << fixed(mr.auprc_ci.lo)
        << ", " << fixed(mr.auprc_ci.hi) << "]\n";
  }

  json report{{"kind", "progrisk-report"},
              {"schema_version", kReportSchemaVersion},
              {"run_config", to_json(config)},
              {"cohort_hash", cv::fnv1a_hex(cohort_text)},
              {"entries", entries}};
  write_text(config.report, report.dump(2) + "\n");
  log << "wrote " << config.report << "\n";
  if (!config.predictions_csv.empty()) {
    write_text(config.predictions_csv, predictions);
    log << "wrote " << config.predictions_csv << "\n";
  }
  return report;
}

// ---------------------------------------------------------------------------
// Table rendering

namespace {

using Row = std::vector<std::string>;

std::size_t display_width(const std::string& s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

void render(std::ostream& out, const std::string& title, const Row& header,
            const std::vector<Row>& rows) {
  std::vector<std::size_t> w(header.size(), 0);
  auto widen = [&w](const Row& r) {
    for (std::size_t i = 0; i < r.size(); ++i) w[i] = std::max(w[i], display_width(r[i]));
  };
  widen(header);
  for (const auto& r : rows) widen(r);
  auto line = [&](const Row& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      out << r[i];
      if (i + 1 < r.size()) out << std::string(w[i] - display_width(r[i]) + 2, ' ');
    }
    out << "\n";
  };
  out << title << "\n";
  line(header);
  std::size_t total = 0;
  for (auto x : w) total += x + 2;
  out << std::string(total - 2, '-') << "\n";
  for (const auto& r : rows) line(r);
  out << "\n";
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += (c == '"') ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

void write_csv(const fs::path& path, const Row& header, const std::vector<Row>& rows) {
  std::string text;
  auto add = [&text](const Row& r) {
    for (std::size_t i = 0; i < r.size(); ++i) text += (i ? "," : "") + csv_cell(r[i]);
    text += "\n";
  };
  add(header);
  for (const auto& r : rows) add(r);
  write_text(path, text);
}

std::string absent(const json& reason) {
  return "\xE2\x80\x94 (" + (reason.is_string() ? reason.get<std::string>() : std::string("?")) + ")";
}

std::string value_or_absent(const json& obj, const char* key) {
  const json& v = obj.at(key);
  if (v.is_null()) return absent(obj.value(std::string(key) + "_reason", json("?")));
  return fixed(v.get<double>());
}

std::string csv_value(const json& v) { return v.is_null() ? "" : cohort::format_double(v.get<double>()); }

std::string with_ci(const json& m, const char* key) {
  const json& ci = m.at(std::string(key) + "_ci");
  return fixed(m.at(key).get<double>()) + " [" + fixed(ci[0].get<double>()) + ", " +
         fixed(ci[1].get<double>()) + "]";
}

int approach_rank(const std::string& name) {
  try {
    return static_cast<int>(cv::approach_from_string(name));
  } catch (const std::exception&) {
    return 99;
  }
}

}  // namespace

void cmd_report(const std::vector<fs::path>& reports, const ReportOptions& options,
                std::ostream& out) {
  if (reports.empty()) throw ConfigError("report: no report files given");
  std::vector<json> entries;
  for (const auto& path : reports) {
    json r;
    try {
      r = json::parse(read_file(path));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ": " + e.what());
    }
    if (!r.contains("schema_version") || r.at("schema_version") != kReportSchemaVersion)
      throw DataError(path.string() + ": report schema_version " +
                      (r.contains("schema_version") ? r.at("schema_version").dump() : "missing") +
                      ", expected " + std::to_string(kReportSchemaVersion));
    for (const auto& e : r.at("entries")) entries.push_back(e);
  }
  try {
    std::stable_sort(entries.begin(), entries.end(), [](const json& a, const json& b) {
      auto key = [](const json& e) {
        return std::make_tuple(e.at("scope").get<std::string>(), e.at("horizon").get<int>(),
                               approach_rank(e.at("approach").get<std::string>()));
      };
      return key(a) < key(b);
    });

    const Row main_header{"approach", "horizon", "scope",       "n_pos",
                          "n_neg",    "AUROC [95% CI]", "AUPRC [95% CI]", "DeLong p vs ref"};
    const Row main_csv_header{"approach", "horizon",  "scope",    "n_pos",    "n_neg",
                              "auroc",    "auroc_lo", "auroc_hi", "auprc",    "auprc_lo",
                              "auprc_hi", "delong_p", "reference_approach"};
    std::vector<Row> main_rows, main_csv;
    for (const auto& e : entries) {
      const json& m = e.at("metrics");
      const json& p = m.at("delong_p_vs_reference");
      const std::string ref =
          m.at("reference").is_null() ? "" : m.at("reference").at("approach").get<std::string>();
      const std::string approach = e.at("approach").get<std::string>();
      const std::string h = std::to_string(e.at("horizon").get<int>());
      const std::string scope = e.at("scope").get<std::string>();
      main_rows.push_back({approach, h, scope, std::to_string(m.at("n_pos").get<int>()),
                           std::to_string(m.at("n_neg").get<int>()), with_ci(m, "auroc"),
                           with_ci(m, "auprc"),
                           p.is_null() ? absent("no_reference") : fixed(p.get<double>(), 4) + " (" + ref + ")"});
      main_csv.push_back({approach, h, scope, std::to_string(m.at("n_pos").get<int>()),
                          std::to_string(m.at("n_neg").get<int>()), csv_value(m.at("auroc")),
                          csv_value(m.at("auroc_ci")[0]), csv_value(m.at("auroc_ci")[1]),
                          csv_value(m.at("auprc")), csv_value(m.at("auprc_ci")[0]),
                          csv_value(m.at("auprc_ci")[1]), csv_value(p), ref});
    }
    render(out, "Scan-level discrimination by approach and horizon", main_header, main_rows);

    const int H = options.subgroup_horizon;
    const Row sub_header{"scope", "approach", "cohort", "n_pos", "n_neg", "AUROC", "AUPRC"};
    const Row sub_csv_header{"scope", "approach", "horizon", "cohort", "n_pos", "n_neg",
                             "auroc", "auroc_reason", "auprc", "auprc_reason"};
    std::vector<Row> sub_rows, sub_csv;
    std::vector<const json*> at_h;
    for (const auto& e : entries)
      if (e.at("horizon").get<int>() == H) at_h.push_back(&e);
    for (const json* e : at_h) {
      const std::string scope = e->at("scope").get<std::string>();
      const std::string approach = e->at("approach").get<std::string>();
      for (const auto& s : e->at("subgroups")) {
        sub_rows.push_back({scope, approach, s.at("cohort").get<std::string>(),
                            std::to_string(s.at("n_pos").get<int>()),
                            std::to_string(s.at("n_neg").get<int>()), value_or_absent(s, "auroc"),
                            value_or_absent(s, "auprc")});
        sub_csv.push_back({scope, approach, std::to_string(H), s.at("cohort").get<std::string>(),
                           std::to_string(s.at("n_pos").get<int>()),
                           std::to_string(s.at("n_neg").get<int>()), csv_value(s.at("auroc")),
                           s.at("auroc_reason").get<std::string>(), csv_value(s.at("auprc")),
                           s.at("auprc_reason").get<std::string>()});
      }
    }
    if (at_h.empty())
      out << "No entries for the " << H << "-year horizon; subgroup and KLG tables skipped.\n\n";
    else
      render(out, "Subgroup analysis, " + std::to_string(H) + "-year horizon", sub_header, sub_rows);

    // KLG: one table per scope, grades as rows and approaches as columns.
    std::vector<Row> klg_csv;
    const Row klg_csv_header{"scope", "approach", "horizon", "grade", "n_pos", "n_neg", "auroc",
                             "auroc_reason"};
    std::vector<std::string> scopes;
    for (const json* e : at_h) {
      const std::string s = e->at("scope").get<std::string>();
      if (std::find(scopes.begin(), scopes.end(), s) == scopes.end()) scopes.push_back(s);
    }
    for (const auto& scope : scopes) {
      Row header{"KLG"};
      std::vector<Row> rows(5);
      for (int g = 0; g < 5; ++g) rows[static_cast<std::size_t>(g)].push_back(std::to_string(g));
      for (const json* e : at_h) {
        if (e->at("scope").get<std::string>() != scope) continue;
        const std::string approach = e->at("approach").get<std::string>();
        header.push_back(approach);
        const json& klg = e->at("klg");
        for (int g = 0; g < 5; ++g) {
          const json& k = klg.at(static_cast<std::size_t>(g));
          const std::string n = " (" + std::to_string(k.at("n_pos").get<int>()) + "/" +
                                std::to_string(k.at("n_neg").get<int>()) + ")";
          rows[static_cast<std::size_t>(g)].push_back(
              k.at("auroc").is_null() ? value_or_absent(k, "auroc") : value_or_absent(k, "auroc") + n);
          klg_csv.push_back({scope, approach, std::to_string(H), std::to_string(g),
                             std::to_string(k.at("n_pos").get<int>()),
                             std::to_string(k.at("n_neg").get<int>()), csv_value(k.at("auroc")),
                             k.at("auroc_reason").get<std::string>()});
        }
      }
      render(out,
             "AUROC by baseline KLG, " + std::to_string(H) + "-year horizon, " + scope +
                 " scope (n_pos/n_neg)",
             header, rows);
    }

    if (options.csv_dir) {
      std::error_code ec;
      fs::create_directories(*options.csv_dir, ec);
      if (ec) throw DataError("cannot create " + options.csv_dir->string() + ": " + ec.message());
      write_csv(*options.csv_dir / "main.csv", main_csv_header, main_csv);
      write_csv(*options.csv_dir / "subgroups.csv", sub_csv_header, sub_csv);
      write_csv(*options.csv_dir / "klg.csv", klg_csv_header, klg_csv);
      out << "CSV tables written to " << options.csv_dir->string() << "\n";
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
}

}  // namespace progrisk::cli
