#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "travest/geometry.hpp"
#include "travest/supervision.hpp"

namespace travest {

// Point class ids used by the generator and by label projection.
enum TerrainClass : int {
  kGround = 0,
  kRock = 1,
  kLowBush = 2,
  kHighBush = 3,
  kTree = 4,
};

// Seeded heightfield-plus-scatter terrain. The scan frame is robot
// centered: the base plane passes through the origin and the trajectory
// corridor runs along its gradient (uphill line), so obstacles and mounds
// are kept clear of a deterministic band around that line.
struct WorldSpec {
  double extent = 12.0;        // square side, meters
  double ground_noise = 0.02;  // z jitter sigma, meters
  double density = 130.0;      // ground points per square meter
  double base_slope_min_deg = 3.0;
  double base_slope_max_deg = 6.0;
  double slope_dir_deg = 0.0;  // uphill azimuth band center (dataset-wide bias)
  double slope_dir_spread_deg = 15.0;
  int mounds_min = 4;
  int mounds_max = 6;
  double mound_amp_min = 0.12;  // meters
  double mound_amp_max = 0.3;
  double mound_sigma_min = 1.0;  // meters
  double mound_sigma_max = 1.6;
  int rock_clusters = 5;
  int low_bushes = 12;
  int high_bushes = 8;
  int trees = 6;
  double obstacle_density = 260.0;  // points per square meter of footprint
  double corridor_half_width = 1.2;
  double corridor_half_length = 4.6;
  std::uint64_t seed = 0;

  void check() const;
};

struct RobotProfile {
  std::string name = "wheeled";
  std::vector<int> traversable_classes = {kGround};
  double nominal_speed = 0.8;  // m/s
  std::map<int, double> tracking_sigma = {{kGround, 0.05}};

  void check() const;
};

// Ground-only wheeled platform vs a legged one that also pushes through
// low bushes (with sloppier velocity tracking there).
RobotProfile wheeled_profile();
RobotProfile legged_profile();

// Classes the profile cannot traverse, i.e. the anomalous set for label
// projection.
std::vector<int> anomalous_classes(const RobotProfile& profile);

struct World {
  struct Mound {
    double cx = 0.0, cy = 0.0;
    double sigma_x = 1.0, sigma_y = 1.0;
    double rot = 0.0;
    double amp = 0.0;
  };

  WorldSpec spec;
  PointCloud cloud;  // labeled with TerrainClass ids
  Plane base;        // noiseless base plane
  double slope_dir = 0.0;  // uphill azimuth, radians
  std::vector<Mound> mounds;

  // Noiseless terrain height under (x, y): base plane plus mounds.
  double ground_height(double x, double y) const;
};

World generate_world(const WorldSpec& spec);

// Gradient-following walk through the origin at the profile's nominal
// speed; commanded velocity follows the heading, actual velocity adds the
// class tracking noise. Throws NoPathError if the walk leaves the extent.
std::vector<TrajectorySample> generate_trajectory(const World& world, const RobotProfile& profile,
                                                  int n_samples, std::uint64_t seed);

}  // namespace travest
