#include "progrisk/bundle_io.hpp"

#include <fstream>
#include <sstream>

#include "progrisk/errors.hpp"

namespace progrisk::cv {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

json to_json(const SplitPlan& plan) {
  return {{"n_outer", plan.n_outer}, {"outer_folds", plan.outer_folds}};
}

SplitPlan split_plan_from_json(const json& j) {
  SplitPlan p;
  p.n_outer = j.at("n_outer").get<int>();
  p.outer_folds = j.at("outer_folds").get<std::vector<std::vector<std::uint32_t>>>();
  if (static_cast<int>(p.outer_folds.size()) != p.n_outer)
    throw DataError("manifest split plan: fold count does not match n_outer");
  for (int k = 0; k < p.n_outer; ++k)
    for (std::uint32_t id : p.outer_folds[static_cast<std::size_t>(k)])
      if (!p.fold_of.emplace(id, k).second)
        throw DataError("manifest split plan: subject " + std::to_string(id) + " in two folds");
  return p;
}

json to_json(const TrainConfig& c) {
  return {{"hidden_dims", c.encoder.hidden_dims},
          {"activation", gradnet::to_string(c.encoder.activation)},
          {"lr", c.adam.lr},
          {"beta1", c.adam.beta1},
          {"beta2", c.adam.beta2},
          {"eps", c.adam.eps},
          {"weight_decay", c.adam.weight_decay},
          {"gamma", c.reg.gamma},
          {"riskreg_margin", c.reg.riskreg_margin},
          {"conreg_margin", c.reg.conreg_margin},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.encoder.hidden_dims = j.at("hidden_dims").get<std::vector<std::size_t>>();
  c.encoder.activation = gradnet::activation_from_string(j.at("activation").get<std::string>());
  c.adam.lr = j.at("lr").get<double>();
  c.adam.beta1 = j.at("beta1").get<double>();
  c.adam.beta2 = j.at("beta2").get<double>();
  c.adam.eps = j.at("eps").get<double>();
  c.adam.weight_decay = j.at("weight_decay").get<double>();
  c.reg.gamma = j.at("gamma").get<double>();
  c.reg.riskreg_margin = j.at("riskreg_margin").get<double>();
  c.reg.conreg_margin = j.at("conreg_margin").get<double>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  return c;
}

namespace {

std::string write_member_model(const gradnet::EncoderModel& model, const fs::path& dir,
                               const std::string& rel, json& entry, const char* key) {
  const std::string text = gradnet::to_json(model).dump() + "\n";
  std::ofstream out(dir / rel, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + (dir / rel).string());
  out << text;
  entry[key] = rel;
  entry[std::string(key) + "_hash"] = fnv1a_hex(text);
  return text;
}

gradnet::EncoderModel read_member_model(const fs::path& dir, const json& entry, const char* key) {
  const fs::path path = dir / entry.at(key).get<std::string>();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  if (fnv1a_hex(text.str()) != entry.at(std::string(key) + "_hash").get<std::string>())
    throw DataError("checkpoint " + path.string() + " does not match its manifest hash");
  return gradnet::load_checkpoint(path);
}

json epoch_log_json(const std::vector<EpochLog>& log) {
  json arr = json::array();
  for (const auto& e : log) {
    arr.push_back({{"epoch", e.epoch},
                   {"train_loss", e.train_loss},
                   {"val_loss", e.val_loss},
                   {"val_auroc", e.val_auroc ? json(*e.val_auroc) : json(nullptr)}});
  }
  return arr;
}

}  // namespace

fs::path save_bundle(const TrainedBundle& bundle, const fs::path& dir, const json& run_config) {
  if (bundle.members.size() != bundle.expected_members())
    throw InvariantError("refusing to save an incomplete bundle");
  std::error_code ec;
  fs::create_directories(dir / "members", ec);
  if (ec) throw DataError("cannot create bundle directory " + dir.string() + ": " + ec.message());

  json members = json::array();
  for (const auto& m : bundle.members) {
    json entry{{"outer", m.outer},
               {"inner", m.inner},
               {"best_epoch", m.best_epoch},
               {"selected_by_loss", m.selected_by_loss},
               {"log", epoch_log_json(m.log)}};
    const std::string stem = "members/o" + std::to_string(m.outer) + "_i" + std::to_string(m.inner);
    write_member_model(m.f, dir, stem + "_f.json", entry, "f");
    if (m.g) write_member_model(*m.g, dir, stem + "_g.json", entry, "g");
    members.push_back(std::move(entry));
  }

  json manifest{{"kind", "progrisk-bundle"},
                {"schema_version", kManifestSchemaVersion},
                {"approach", to_string(bundle.approach)},
                {"horizon", bundle.horizon},
                {"seed", bundle.seed},
                {"n_outer", bundle.plan.n_outer},
                {"n_inner", bundle.plan.n_inner()},
                {"member_count", bundle.members.size()},
                {"run_config", run_config},
                {"config_hash", fnv1a_hex(run_config.dump())},
                {"train_config", to_json(bundle.config)},
                {"split_plan", to_json(bundle.plan)},
                {"members", members}};
  manifest["manifest_hash"] = fnv1a_hex(manifest.dump());

  const fs::path path = dir / "manifest.json";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write manifest " + path.string());
  out << manifest.dump(2) << '\n';
  return path;
}

LoadedBundle load_bundle(const fs::path& manifest_path) {
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw DataError("cannot read bundle manifest " + manifest_path.string());
  LoadedBundle out;
  try {
    in >> out.manifest;
    const json& m = out.manifest;
    if (m.at("kind") != "progrisk-bundle") throw DataError("not a progrisk bundle manifest");
    if (m.at("schema_version") != kManifestSchemaVersion)
      throw DataError("unsupported manifest schema_version " + m.at("schema_version").dump());
    TrainedBundle& b = out.bundle;
    b.approach = approach_from_string(m.at("approach").get<std::string>());
    b.horizon = m.at("horizon").get<int>();
    b.seed = m.at("seed").get<std::uint64_t>();
    b.config = train_config_from_json(m.at("train_config"));
    b.plan = split_plan_from_json(m.at("split_plan"));
    const fs::path dir = manifest_path.parent_path();
    for (const auto& e : m.at("members")) {
      FoldModel fm;
      fm.outer = e.at("outer").get<int>();
      fm.inner = e.at("inner").get<int>();
      fm.best_epoch = e.at("best_epoch").get<int>();
      fm.selected_by_loss = e.at("selected_by_loss").get<bool>();
      fm.f = read_member_model(dir, e, "f");
      if (e.contains("g")) fm.g = read_member_model(dir, e, "g");
      for (const auto& l : e.at("log")) {
        EpochLog log;
        log.epoch = l.at("epoch").get<int>();
        log.train_loss = l.at("train_loss").get<double>();
        log.val_loss = l.at("val_loss").get<double>();
        if (!l.at("val_auroc").is_null()) log.val_auroc = l.at("val_auroc").get<double>();
        fm.log.push_back(log);
      }
      b.members.push_back(std::move(fm));
    }
    if (b.members.size() != b.expected_members())
      throw DataError("manifest lists " + std::to_string(b.members.size()) + " members, expected " +
                      std::to_string(b.expected_members()));
    if (uses_second_model(b.approach))
      for (const auto& fm : b.members)
        if (!fm.g) throw DataError("RiskFORM2 manifest member lacks model g");
  } catch (const json::exception& e) {
    throw DataError("malformed bundle manifest " + manifest_path.string() + ": " + e.what());
  }
  return out;
}

}  // namespace progrisk::cv
