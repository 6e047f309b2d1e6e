#pragma once

#include <string>
#include <vector>

#include "travest/run_config.hpp"
#include "travest/synth_world.hpp"
#include "travest/trainer.hpp"

namespace travest {

// An on-disk dataset directory:
//   manifest.json            grid/score/profile metadata + scan listing
//   scans/scan_NNN.ply       labeled cloud, robot-centered
//   scans/scan_NNN_traj.csv  trajectory with velocities
struct Dataset {
  GridConfig grid;
  ScoreParams score;
  RobotProfile profile;
  std::vector<int> anomalous;  // class ids the profile cannot traverse
  std::vector<Sample> samples;
};

// Generates cfg.n_scans worlds (seeds derived from cfg.seed), walks a
// trajectory through each, and writes the directory layout above.
void write_dataset(const RunConfig& cfg, const std::string& out_dir);

Dataset load_dataset(const std::string& dir);

}  // namespace travest
