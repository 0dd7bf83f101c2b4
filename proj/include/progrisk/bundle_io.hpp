#pragma once

// On-disk bundle: <dir>/manifest.json plus one checkpoint per member model
// under <dir>/members/. See docs/file_formats.md.

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "progrisk/cvharness.hpp"

namespace progrisk::cv {

inline constexpr int kManifestSchemaVersion = 1;

// 64-bit FNV-1a, hex encoded. Used for config, checkpoint and manifest hashes.
std::string fnv1a_hex(std::string_view bytes);

nlohmann::json to_json(const SplitPlan& plan);
SplitPlan split_plan_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

// Writes checkpoints and the manifest; returns the manifest path. The run
// config is embedded verbatim and hashed into config_hash.
std::filesystem::path save_bundle(const TrainedBundle& bundle, const std::filesystem::path& dir,
                                  const nlohmann::json& run_config);

struct LoadedBundle {
  TrainedBundle bundle;
  nlohmann::json manifest;
};

LoadedBundle load_bundle(const std::filesystem::path& manifest_path);

}  // namespace progrisk::cv
