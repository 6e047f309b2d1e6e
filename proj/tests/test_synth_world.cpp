#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "helpers.hpp"
#include "travest/evaluator.hpp"
#include "travest/synth_world.hpp"

using namespace travest;

TEST_CASE("worlds are deterministic in the seed") {
  WorldSpec spec;
  spec.seed = 1501;
  const World a = generate_world(spec);
  const World b = generate_world(spec);
  REQUIRE(a.cloud.size() == b.cloud.size());
  CHECK(a.cloud.labels == b.cloud.labels);
  CHECK(a.slope_dir == b.slope_dir);
  for (std::size_t i = 0; i < a.cloud.size(); i += 997) {
    CHECK(a.cloud.points[i].x == b.cloud.points[i].x);
    CHECK(a.cloud.points[i].z == b.cloud.points[i].z);
  }

  spec.seed = 1502;
  const World c = generate_world(spec);
  CHECK(a.cloud.size() != c.cloud.size());  // point budget is seed-dependent
}

TEST_CASE("an obstacle-free spec produces a ground-only cloud") {
  WorldSpec spec;
  spec.seed = 1503;
  spec.rock_clusters = 0;
  spec.low_bushes = 0;
  spec.high_bushes = 0;
  spec.trees = 0;
  const World world = generate_world(spec);
  REQUIRE(world.cloud.has_labels());
  for (int label : world.cloud.labels) CHECK(label == kGround);

  // Every ground point hugs the analytic terrain height.
  for (std::size_t i = 0; i < world.cloud.size(); i += 131) {
    const auto& p = world.cloud.points[i];
    CHECK(std::abs(p.z - world.ground_height(p.x, p.y)) < 6.0 * spec.ground_noise);
  }
}

TEST_CASE("every terrain class appears with plausible heights") {
  WorldSpec spec;
  spec.seed = 1504;
  const World world = generate_world(spec);
  std::map<int, int> counts;
  for (int label : world.cloud.labels) ++counts[label];
  CHECK(counts[kGround] > 1000);
  CHECK(counts[kRock] > 50);
  CHECK(counts[kLowBush] > 50);
  CHECK(counts[kHighBush] > 50);
  CHECK(counts[kTree] > 50);

  double low_top = 0.0, high_top = 0.0, tree_top = 0.0;
  for (std::size_t i = 0; i < world.cloud.size(); ++i) {
    const auto& p = world.cloud.points[i];
    const double above = p.z - world.ground_height(p.x, p.y);
    switch (world.cloud.labels[i]) {
      case kLowBush: low_top = std::max(low_top, above); break;
      case kHighBush: high_top = std::max(high_top, above); break;
      case kTree: tree_top = std::max(tree_top, above); break;
      default: break;
    }
  }
  CHECK(low_top > 0.2);
  CHECK(low_top < 0.6);   // low vegetation stays under the high-bush band
  CHECK(high_top >= 0.7);
  CHECK(high_top < 1.5);
  CHECK(tree_top >= 2.0);

  // All points stay inside the square extent.
  for (const auto& p : world.cloud.points) {
    CHECK(std::abs(p.x) <= spec.extent / 2.0);
    CHECK(std::abs(p.y) <= spec.extent / 2.0);
  }
}

TEST_CASE("base slope and uphill direction stay inside the configured bands") {
  WorldSpec spec;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    spec.seed = 1510 + seed;
    const World world = generate_world(spec);
    const double slope_deg = slope_angle(world.base) * 180.0 / M_PI;
    CHECK(slope_deg >= spec.base_slope_min_deg - 1e-9);
    CHECK(slope_deg <= spec.base_slope_max_deg + 1e-9);
    // Uphill azimuth within the spread band around the bias direction.
    double dir_deg = world.slope_dir * 180.0 / M_PI;
    while (dir_deg > 180.0) dir_deg -= 360.0;
    CHECK(std::abs(dir_deg - spec.slope_dir_deg) <= spec.slope_dir_spread_deg + 1e-9);
  }
}

TEST_CASE("trajectories stay on obstacle-free cells of their own world") {
  WorldSpec spec;
  spec.seed = 1520;
  const World world = generate_world(spec);
  const RobotProfile profile = wheeled_profile();
  const auto traj = generate_trajectory(world, profile, 100, 1521);
  REQUIRE(traj.size() == 100);

  const GridConfig grid = GridConfig::centered(0.0, 0.0, spec.extent, 0.15, 32);
  const LabelGrid labels = project_labels(world.cloud, anomalous_classes(profile), grid);
  int visited = 0;
  for (const auto& s : traj) {
    const auto cell = cell_of(s.x, s.y, grid);
    REQUIRE(cell.has_value());
    CHECK(labels.at(cell->i, cell->j) != CellLabel::anomalous);
    visited += labels.at(cell->i, cell->j) == CellLabel::normal ? 1 : 0;
  }
  CHECK(visited > 50);  // the walk mostly crosses sampled ground

  // Timebase and kinematics.
  for (std::size_t i = 1; i < traj.size(); ++i) {
    CHECK(traj[i].time > traj[i - 1].time);
    CHECK(traj[i].time - traj[i - 1].time == doctest::Approx(0.1).epsilon(1e-9));
  }
  const double sigma = profile.tracking_sigma.at(kGround);
  for (const auto& s : traj) {
    CHECK(std::hypot(s.vcx, s.vcy) == doctest::Approx(profile.nominal_speed).epsilon(1e-9));
    CHECK(std::abs(s.vx - s.vcx) < 6.0 * sigma);
    CHECK(std::abs(s.vy - s.vcy) < 6.0 * sigma);
  }

  // The recentered midpoint pins the walk to the scan origin.
  const auto& mid = traj[traj.size() / 2];
  CHECK(std::hypot(mid.x, mid.y) < 0.5);

  const auto again = generate_trajectory(world, profile, 100, 1521);
  CHECK(again[7].x == traj[7].x);
  CHECK(again[7].vx == traj[7].vx);
  const auto other = generate_trajectory(world, profile, 100, 1522);
  CHECK(other[7].x != traj[7].x);
}

TEST_CASE("the trajectory follows the uphill gradient, spanning real height") {
  WorldSpec spec;
  spec.seed = 1530;
  const World world = generate_world(spec);
  const auto traj = generate_trajectory(world, wheeled_profile(), 100, 1531);
  double z_min = 1e9, z_max = -1e9;
  for (const auto& s : traj) {
    const double z = world.ground_height(s.x, s.y);
    z_min = std::min(z_min, z);
    z_max = std::max(z_max, z);
  }
  const double grade = std::tan(slope_angle(world.base));
  const double path_len = 0.8 * 0.1 * 99;
  // Walking the gradient accumulates most of the ideal height change.
  CHECK(z_max - z_min > 0.5 * grade * path_len);
}

TEST_CASE("overlong walks run out of corridor") {
  WorldSpec spec;
  spec.seed = 1540;
  const World world = generate_world(spec);
  CHECK_THROWS_AS(generate_trajectory(world, wheeled_profile(), 400, 1541), NoPathError);
}

TEST_CASE("profiles disagree only on which classes are anomalous") {
  const RobotProfile wheeled = wheeled_profile();
  const RobotProfile legged = legged_profile();
  const auto aw = anomalous_classes(wheeled);
  const auto al = anomalous_classes(legged);
  CHECK(std::find(aw.begin(), aw.end(), kLowBush) != aw.end());
  CHECK(std::find(al.begin(), al.end(), kLowBush) == al.end());
  for (int cls : {kRock, kHighBush, kTree}) {
    CHECK(std::find(aw.begin(), aw.end(), cls) != aw.end());
    CHECK(std::find(al.begin(), al.end(), cls) != al.end());
  }
  CHECK(std::find(aw.begin(), aw.end(), kGround) == aw.end());

  WorldSpec spec;
  spec.seed = 1550;
  const World world = generate_world(spec);  // geometry is profile-free
  const auto t1 = generate_trajectory(world, wheeled, 60, 1551);
  const auto t2 = generate_trajectory(world, legged, 60, 1551);
  for (std::size_t i = 0; i < t1.size(); i += 13) {
    CHECK(t1[i].x == t2[i].x);  // same seed, same ground, same walk
    CHECK(t1[i].y == t2[i].y);
  }
}

TEST_CASE("spec validation rejects impossible terrain") {
  WorldSpec spec;
  spec.mound_amp_max = 3.0;  // a 3 m bump over a 1 m sigma is a cliff
  CHECK_THROWS_AS(spec.check(), SpecError);

  spec = WorldSpec{};
  spec.corridor_half_width = 0.0;
  CHECK_THROWS_AS(spec.check(), SpecError);

  spec = WorldSpec{};
  spec.base_slope_max_deg = 2.0;  // below the minimum
  CHECK_THROWS_AS(spec.check(), SpecError);

  spec = WorldSpec{};
  spec.mounds_min = 5;
  spec.mounds_max = 3;
  CHECK_THROWS_AS(spec.check(), SpecError);

  RobotProfile profile;
  profile.traversable_classes.clear();
  CHECK_THROWS_AS(profile.check(), SpecError);
  profile = RobotProfile{};
  profile.tracking_sigma.erase(kGround);
  CHECK_THROWS_AS(profile.check(), SpecError);
}
