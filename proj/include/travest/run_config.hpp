#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "travest/grid.hpp"
#include "travest/supervision.hpp"
#include "travest/synth_world.hpp"
#include "travest/trainer.hpp"

namespace travest {

struct RunPaths {
  std::string data_dir;
  std::string out_dir;
  std::string checkpoint;
  std::string cloud;
};

// Fully resolved run settings. Every field has a working default, so a
// config file (or the CLI) only needs to override what it cares about.
struct RunConfig {
  std::uint64_t seed = 0;
  GridConfig grid;
  ScoreParams score;
  TrainConfig train;
  WorldSpec world;
  RobotProfile profile;
  int n_scans = 40;
  int traj_samples = 100;
  RunPaths paths;
};

// Strict parsers: an unrecognized key anywhere raises ConfigError naming
// the offending key. Absent keys keep their defaults.
GridConfig grid_from_json(const nlohmann::json& j, const std::string& section);
ScoreParams score_from_json(const nlohmann::json& j, const std::string& section);
RobotProfile profile_from_json(const nlohmann::json& j, const std::string& section);
WorldSpec world_from_json(const nlohmann::json& j, const std::string& section);
AugmentPolicy augment_from_json(const nlohmann::json& j, const std::string& section);
TrainConfig train_from_json(const nlohmann::json& j, const std::string& section);
RunConfig run_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const GridConfig& grid);
nlohmann::json to_json(const ScoreParams& score);
nlohmann::json to_json(const RobotProfile& profile);
nlohmann::json to_json(const WorldSpec& world);
nlohmann::json to_json(const AugmentPolicy& policy);
nlohmann::json to_json(const TrainConfig& train);
nlohmann::json to_json(const RunConfig& cfg);

RunConfig load_run_config(const std::string& path);
// Writes the fully resolved config (pretty-printed) for reproducibility.
void save_run_config(const RunConfig& cfg, const std::string& path);

}  // namespace travest
