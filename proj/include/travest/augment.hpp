#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "travest/geometry.hpp"
#include "travest/ransac.hpp"
#include "travest/rng.hpp"

namespace travest {

struct AugmentPolicy {
  double flip_prob = 0.5;
  double yaw_min = -1.5707963267948966;  // radians
  double yaw_max = 1.5707963267948966;
  bool pitch_enabled = true;
  double pitch_slope_gate = 0.17453292519943295;  // 10 degrees
  RansacConfig ransac;
};

struct AugmentResult {
  PointCloud cloud;
  std::vector<std::array<double, 2>> traj_xy;
  bool flipped = false;
  double yaw = 0.0;
  double pitch = 0.0;  // 0 when skipped
};

// Applies flip (with probability flip_prob), then a uniform yaw, then —
// when the ground fit on the below-median-height subset is a single
// dominant plane (inlier fraction >= ransac.min_inlier_frac) with slope
// under pitch_slope_gate — a uniform pitch within +/- that slope gate's
// fitted value. The trajectory is carried through the same rigid
// transforms so traversed cells stay aligned with the points; the pitch
// step lifts each 2D position onto the fitted plane to rotate it.
AugmentResult augment(const PointCloud& cloud, const std::vector<std::array<double, 2>>& traj_xy,
                      const AugmentPolicy& policy, Rng& rng);

}  // namespace travest
