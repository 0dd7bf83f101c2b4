#include "progrisk/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "progrisk/cohort_csv.hpp"
#include "progrisk/errors.hpp"

namespace progrisk {

namespace {

using cohort::format_double;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const char* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || v.empty())
    throw ConfigError("key '" + key + "': cannot parse '" + v + "' as a number");
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  const double d = parse_number<double>(key, v);
  if (!std::isfinite(d)) throw ConfigError("key '" + key + "': value must be finite");
  return d;
}

std::vector<std::size_t> parse_dims(const std::string& key, const std::string& v) {
  std::vector<std::size_t> dims;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) dims.push_back(parse_number<std::size_t>(key, trim(item)));
  return dims;
}

std::string join_dims(const std::vector<std::size_t>& dims) {
  std::string out;
  for (std::size_t i = 0; i < dims.size(); ++i) out += (i ? "," : "") + std::to_string(dims[i]);
  return out;
}

struct Field {
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string& key, const std::string&)> set;
};

#define PR_REAL(expr)                                                                  \
  Field {                                                                              \
    [](const RunConfig& c) { return format_double(c.expr); },                          \
        [](RunConfig& c, const std::string& k, const std::string& v) { c.expr = parse_real(k, v); } \
  }
#define PR_INT(type, expr)                                                            \
  Field {                                                                             \
    [](const RunConfig& c) { return std::to_string(c.expr); },                        \
        [](RunConfig& c, const std::string& k, const std::string& v) {                \
          c.expr = parse_number<type>(k, v);                                          \
        }                                                                             \
  }
#define PR_STR(expr)                                                                   \
  Field {                                                                              \
    [](const RunConfig& c) { return c.expr; },                                         \
        [](RunConfig& c, const std::string&, const std::string& v) { c.expr = v; }     \
  }

const std::vector<std::pair<std::string, Field>>& table() {
  static const std::vector<std::pair<std::string, Field>> t = {
      {"seed", PR_INT(std::uint64_t, seed)},
      {"cohort.n_subjects", PR_INT(std::size_t, cohort.n_subjects)},
      {"cohort.feature_dim", PR_INT(std::size_t, cohort.feature_dim)},
      {"cohort.feature_noise", PR_REAL(cohort.feature_noise)},
      {"cohort.visit_interval_months", PR_REAL(cohort.visit_interval_months)},
      {"cohort.max_visit_months", PR_REAL(cohort.max_visit_months)},
      {"cohort.n_ethnicities", PR_INT(int, cohort.n_ethnicities)},
      {"cohort.early_dropout_prob", PR_REAL(cohort.early_dropout_prob)},
      {"cohort.baseline_severity_max", PR_REAL(cohort.baseline_severity_max)},
      {"cohort.rate_log_mean", PR_REAL(cohort.rate_log_mean)},
      {"cohort.rate_log_sd", PR_REAL(cohort.rate_log_sd)},
      {"cohort.monthly_jitter_sd", PR_REAL(cohort.monthly_jitter_sd)},
      {"cohort.tkr_threshold", PR_REAL(cohort.tkr_threshold)},
      {"cohort.threshold_noise_sd", PR_REAL(cohort.threshold_noise_sd)},
      {"cohort.projection_seed", PR_INT(std::uint64_t, cohort.projection_seed)},
      {"model.hidden_dims",
       Field{[](const RunConfig& c) { return join_dims(c.train.encoder.hidden_dims); },
             [](RunConfig& c, const std::string& k, const std::string& v) {
               c.train.encoder.hidden_dims = parse_dims(k, v);
             }}},
      {"model.activation",
       Field{[](const RunConfig& c) { return gradnet::to_string(c.train.encoder.activation); },
             [](RunConfig& c, const std::string& k, const std::string& v) {
               try {
                 c.train.encoder.activation = gradnet::activation_from_string(v);
               } catch (const std::exception&) {
                 throw ConfigError("key '" + k + "': unknown activation '" + v + "'");
               }
             }}},
      {"optim.lr", PR_REAL(train.adam.lr)},
      {"optim.beta1", PR_REAL(train.adam.beta1)},
      {"optim.beta2", PR_REAL(train.adam.beta2)},
      {"optim.eps", PR_REAL(train.adam.eps)},
      {"optim.weight_decay", PR_REAL(train.adam.weight_decay)},
      {"train.approach",
       Field{[](const RunConfig& c) { return cv::to_string(c.approach); },
             [](RunConfig& c, const std::string& k, const std::string& v) {
               try {
                 c.approach = cv::approach_from_string(v);
               } catch (const std::exception&) {
                 throw ConfigError("key '" + k + "': unknown approach '" + v + "'");
               }
             }}},
      {"train.horizon", PR_INT(int, horizon)},
      {"train.epochs", PR_INT(std::size_t, train.epochs)},
      {"train.batch_size", PR_INT(std::size_t, train.batch_size)},
            {"reg.margin", PR_REAL(train.reg.riskreg_margin)},
      {"reg.conreg_margin", PR_REAL(train.reg.conreg_margin)},
      {"reg.gamma", PR_REAL(train.reg.gamma)},
      {"cv.outer", PR_INT(int, cv_outer)},
      {"cv.inner", PR_INT(int, cv_inner)},
      {"bootstrap.n_resamples", PR_INT(std::size_t, bootstrap_resamples)},
      {"bootstrap.level", PR_REAL(bootstrap_level)},
      {"eval.scope",
       Field{[](const RunConfig& c) { return cv::to_string(c.scope); },
             [](RunConfig& c, const std::string& k, const std::string& v) {
               try {
                 c.scope = cv::scope_from_string(v);
               } catch (const std::exception&) {
                 throw ConfigError("key '" + k + "': scope must be internal or external");
               }
             }}},
      {"paths.cohort_csv", PR_STR(cohort_csv)},
      {"paths.bundle_dir", PR_STR(bundle_dir)},
      {"paths.report", PR_STR(report)},
      {"paths.reference_manifest", PR_STR(reference_manifest)},
      {"paths.predictions_csv", PR_STR(predictions_csv)},
      {"exec.threads", PR_INT(int, train.threads)},
  };
  return t;
}

#undef PR_REAL
#undef PR_INT
#undef PR_STR

const Field& field(const std::string& key) {
  static const std::map<std::string, const Field*> index = [] {
    std::map<std::string, const Field*> m;
    for (const auto& [k, f] : table()) m.emplace(k, &f);
    return m;
  }();
  const auto it = index.find(key);
  if (it == index.end()) throw ConfigError("unknown key '" + key + "'");
  return *it->second;
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const auto& entry : table()) out.push_back(entry.first);
    return out;
  }();
  return k;
}

std::string RunConfig::get(const std::string& key) const { return field(key).get(*this); }

void RunConfig::set(const std::string& key, const std::string& value) {
  field(key).set(*this, key, value);
}

void RunConfig::validate() const {
  auto wrap = [](const char* what, auto&& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(std::string(what) + ": " + e.what());
    }
  };
  wrap("cohort", [&] { cohort.validate(); });
  wrap("model/optim/train", [&] { train.validate(); });
  if (horizon != 1 && horizon != 2 && horizon != 4)
    throw ConfigError("key 'train.horizon': must be 1, 2 or 4");
  if (cv_outer < 3) throw ConfigError("key 'cv.outer': need at least 3 outer folds");
  if (cv_inner != cv_outer - 1)
    throw ConfigError("key 'cv.inner': must equal cv.outer - 1 (every remaining fold validates once)");
  wrap("bootstrap", [&] {
    metrics::BootstrapConfig b;
    b.n_resamples = bootstrap_resamples;
    b.level = bootstrap_level;
    b.validate();
  });
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig c;
  std::map<std::string, int> seen;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (auto [it, fresh] = seen.emplace(key, line_no); !fresh)
      throw ConfigError(where + "key '" + key + "' already set on line " + std::to_string(it->second));
    try {
      c.set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  // A JSON artifact (manifest or report) carries its effective config.
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config file " + path.string() + ": " + e.what());
    }
    return run_config_from_json(j.contains("run_config") ? j.at("run_config") : j);
  }
  try {
    return parse_run_config(text);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

bool is_execution_key(const std::string& key) { return key.rfind("exec.", 0) == 0; }

std::string to_text(const RunConfig& config, bool include_execution) {
  std::string out;
  for (const auto& [key, f] : table())
    if (include_execution || !is_execution_key(key)) out += key + " = " + f.get(config) + "\n";
  return out;
}

nlohmann::json to_json(const RunConfig& config) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, f] : table())
    if (!is_execution_key(key)) j[key] = f.get(config);
  return j;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("embedded config is not an object");
  RunConfig c;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_string()) throw ConfigError("embedded config key '" + key + "' is not a string");
    c.set(key, value.get<std::string>());
  }
  return c;
}

}  // namespace progrisk
