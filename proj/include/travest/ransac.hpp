#pragma once

#include <cstdint>
#include <utility>

#include "travest/geometry.hpp"

namespace travest {

struct RansacConfig {
  int iterations = 100;
  double inlier_dist = 0.05;   // meters
  double min_inlier_frac = 0.6;
  std::uint64_t seed = 0;
};

struct RansacResult {
  Plane plane;
  double inlier_frac = 0.0;
};

// Plane fit by random 3-point hypotheses followed by a least-squares refit
// on the winning inlier set. Deterministic for a fixed cfg.seed.
// Throws DegenerateCloud when fewer than 3 points are given or every
// sampled hypothesis is collinear.
RansacResult ransac_ground(const PointCloud& cloud, const RansacConfig& cfg);

}  // namespace travest
