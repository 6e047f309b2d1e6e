#pragma once

#include <string>
#include <vector>

#include "travest/supervision.hpp"

namespace travest {

struct TrajectoryFile {
  std::vector<TrajectorySample> samples;
  bool has_velocity = true;  // false when the CSV carries only time,x,y
};

// CSV with header `time,x,y,vx,vy,vcx,vcy`; the four velocity columns may
// be absent as a group, which flags the trajectory for constant-score
// supervision. Times must be strictly increasing.
TrajectoryFile load_trajectory(const std::string& path);
void save_trajectory(const TrajectoryFile& traj, const std::string& path);

}  // namespace travest
