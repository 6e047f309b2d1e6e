#include "travest/synth_world.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "travest/errors.hpp"
#include "travest/rng.hpp"

namespace travest {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kMaxSlopeDeg = 25.0;

double deg2rad(double d) { return d * kPi / 180.0; }

// Distance from p to the segment of half-length `half_len` through the
// origin along `dir` (unit). The trajectory corridor is this band.
double corridor_distance(double px, double py, double dir_x, double dir_y, double half_len) {
  const double along = std::clamp(px * dir_x + py * dir_y, -half_len, half_len);
  const double dx = px - along * dir_x;
  const double dy = py - along * dir_y;
  return std::hypot(dx, dy);
}

struct CorridorGeom {
  double dir_x = 0.0, dir_y = 0.0;  // contour (travel) direction
  double half_width = 0.0;
  double half_len = 0.0;
};

CorridorGeom corridor_of(const WorldSpec& spec, double slope_dir) {
  CorridorGeom c;
  // Travel runs along the gradient (uphill through the origin), so the
  // visited cells sample the full height range of the local slope instead
  // of a single contour line.
  c.dir_x = std::cos(slope_dir);
  c.dir_y = std::sin(slope_dir);
  c.half_width = spec.corridor_half_width;
  c.half_len = spec.corridor_half_length;
  return c;
}

// Rejection-places a disk of radius `r` inside the extent, clear of the
// corridor. Returns false after `tries` failures.
bool place_disk(const WorldSpec& spec, const CorridorGeom& cor, double r, Rng& rng, double& out_x,
                double& out_y) {
  const double lim = spec.extent / 2.0 - r - 0.2;
  if (lim <= 0.0) return false;
  for (int t = 0; t < 200; ++t) {
    const double x = rng.uniform(-lim, lim);
    const double y = rng.uniform(-lim, lim);
    if (corridor_distance(x, y, cor.dir_x, cor.dir_y, cor.half_len) <
        cor.half_width + r + 0.4)
      continue;
    out_x = x;
    out_y = y;
    return true;
  }
  return false;
}

void append_point(World& world, double x, double y, double z, int label) {
  world.cloud.points.push_back({x, y, z});
  world.cloud.labels.push_back(label);
}

// Dome of height h over a disk of radius r: z falls off toward the rim.
void emit_rock(World& world, double cx, double cy, double r, double h, double density, Rng& rng) {
  const long n = std::max(12L, std::lround(density * kPi * r * r));
  for (long i = 0; i < n; ++i) {
    const double u = std::sqrt(rng.uniform()) * r;
    const double a = rng.uniform(0.0, 2.0 * kPi);
    const double x = cx + u * std::cos(a);
    const double y = cy + u * std::sin(a);
    const double frac = u / r;
    const double z_off = h * std::sqrt(std::max(0.0, 1.0 - frac * frac));
    append_point(world, x, y, world.ground_height(x, y) + z_off, kRock);
  }
}

// Volumetric fill between the ground and height h. When `reach_top` is
// set one point is pinned at h so tall vegetation provably crosses the
// low/high split.
void emit_bush(World& world, double cx, double cy, double r, double h, double z_lo, int label,
               bool reach_top, double density, Rng& rng) {
  const long n = std::max(16L, std::lround(density * kPi * r * r));
  for (long i = 0; i < n; ++i) {
    const double u = std::sqrt(rng.uniform()) * r;
    const double a = rng.uniform(0.0, 2.0 * kPi);
    const double x = cx + u * std::cos(a);
    const double y = cy + u * std::sin(a);
    const double z_off = (reach_top && i == 0) ? h : rng.uniform(z_lo, h);
    append_point(world, x, y, world.ground_height(x, y) + z_off, label);
  }
}

void emit_tree(World& world, double cx, double cy, double r, double h, double density, Rng& rng) {
  const long n = std::max(40L, std::lround(density * kPi * r * r * 6.0));
  for (long i = 0; i < n; ++i) {
    const double a = rng.uniform(0.0, 2.0 * kPi);
    const double x = cx + r * std::cos(a);
    const double y = cy + r * std::sin(a);
    const double z_off = (i == 0) ? h : rng.uniform(0.0, h);
    append_point(world, x, y, world.ground_height(x, y) + z_off, kTree);
  }
}

}  // namespace

void WorldSpec::check() const {
  if (extent <= 0.0) throw SpecError("world extent must be positive");
  if (ground_noise < 0.0) throw SpecError("ground_noise must be non-negative");
  if (density <= 0.0) throw SpecError("density must be positive");
  if (obstacle_density <= 0.0) throw SpecError("obstacle_density must be positive");
  if (base_slope_min_deg < 0.0 || base_slope_max_deg < base_slope_min_deg)
    throw SpecError("base slope range is invalid");
  if (slope_dir_spread_deg < 0.0) throw SpecError("slope_dir_spread_deg must be non-negative");
  if (mounds_min < 0 || mounds_max < mounds_min) throw SpecError("mound count range is invalid");
  if (mound_amp_min < 0.0 || mound_amp_max < mound_amp_min)
    throw SpecError("mound amplitude range is invalid");
  if (mound_sigma_min <= 0.0 || mound_sigma_max < mound_sigma_min)
    throw SpecError("mound sigma range is invalid");
  if (rock_clusters < 0 || low_bushes < 0 || high_bushes < 0 || trees < 0)
    throw SpecError("obstacle counts must be non-negative");
  if (corridor_half_width <= 0.0 || corridor_half_length <= 0.0)
    throw SpecError("corridor dimensions must be positive");
  // Steepest local grade: base slope plus the worst gaussian-bump slope
  // amp * exp(-1/2) / sigma. Keep every patch gentler than 25 degrees.
  const double worst =
      std::tan(deg2rad(base_slope_max_deg)) + mound_amp_max * std::exp(-0.5) / mound_sigma_min;
  if (worst > std::tan(deg2rad(kMaxSlopeDeg)))
    throw SpecError("terrain parameters allow slopes steeper than 25 degrees");
}

void RobotProfile::check() const {
  if (nominal_speed <= 0.0) throw SpecError("robot nominal_speed must be positive");
  if (traversable_classes.empty()) throw SpecError("robot must traverse at least one class");
  if (std::find(traversable_classes.begin(), traversable_classes.end(), kGround) ==
      traversable_classes.end())
    throw SpecError("robot profile must treat ground as traversable");
  const auto it = tracking_sigma.find(kGround);
  if (it == tracking_sigma.end()) throw SpecError("robot profile needs tracking sigma for ground");
  for (const auto& [cls, sigma] : tracking_sigma)
    if (sigma < 0.0) throw SpecError("tracking sigma must be non-negative");
}

RobotProfile wheeled_profile() { return RobotProfile{}; }

RobotProfile legged_profile() {
  RobotProfile p;
  p.name = "legged";
  p.traversable_classes = {kGround, kLowBush};
  p.tracking_sigma = {{kGround, 0.05}, {kLowBush, 0.18}};
  return p;
}

std::vector<int> anomalous_classes(const RobotProfile& profile) {
  std::vector<int> out;
  for (int cls : {kGround, kRock, kLowBush, kHighBush, kTree}) {
    if (std::find(profile.traversable_classes.begin(), profile.traversable_classes.end(), cls) ==
        profile.traversable_classes.end())
      out.push_back(cls);
  }
  return out;
}

double World::ground_height(double x, double y) const {
  double z = base.height_at(x, y);
  for (const Mound& m : mounds) {
    const double dx = x - m.cx;
    const double dy = y - m.cy;
    const double c = std::cos(m.rot);
    const double s = std::sin(m.rot);
    const double u = c * dx + s * dy;
    const double v = -s * dx + c * dy;
    z += m.amp * std::exp(-0.5 * (u * u / (m.sigma_x * m.sigma_x) +
                                  v * v / (m.sigma_y * m.sigma_y)));
  }
  return z;
}

World generate_world(const WorldSpec& spec) {
  spec.check();
  World world;
  world.spec = spec;

  Rng root(spec.seed);
  Rng base_rng = root.derive(1);
  Rng mound_rng = root.derive(2);
  Rng ground_rng = root.derive(3);
  Rng obstacle_rng = root.derive(4);

  // Base plane through the origin, tilted toward a dataset-wide azimuth
  // band so every scan shares a rough uphill direction.
  const double slope = deg2rad(base_rng.uniform(spec.base_slope_min_deg, spec.base_slope_max_deg));
  world.slope_dir = deg2rad(spec.slope_dir_deg) +
                    deg2rad(base_rng.uniform(-spec.slope_dir_spread_deg, spec.slope_dir_spread_deg));
  const double grade = std::tan(slope);
  Eigen::Vector3d n(-grade * std::cos(world.slope_dir), -grade * std::sin(world.slope_dir), 1.0);
  n.normalize();
  world.base.normal = n;
  world.base.offset = 0.0;

  const CorridorGeom cor = corridor_of(spec, world.slope_dir);

  // Mounds land anywhere, corridor included: they stay gentle enough to
  // drive over (see WorldSpec::check), so the visited band samples the
  // same bump relief the rest of the ground carries.
  const int n_mounds =
      spec.mounds_min + static_cast<int>(mound_rng.uniform_index(
                            static_cast<std::size_t>(spec.mounds_max - spec.mounds_min + 1)));
  const double mound_lim = spec.extent * 0.4;
  for (int k = 0; k < n_mounds; ++k) {
    World::Mound m;
    m.sigma_x = mound_rng.uniform(spec.mound_sigma_min, spec.mound_sigma_max);
    m.sigma_y = mound_rng.uniform(spec.mound_sigma_min, spec.mound_sigma_max);
    m.rot = mound_rng.uniform(0.0, kPi);
    m.amp = mound_rng.uniform(spec.mound_amp_min, spec.mound_amp_max);
    m.cx = mound_rng.uniform(-mound_lim, mound_lim);
    m.cy = mound_rng.uniform(-mound_lim, mound_lim);
    world.mounds.push_back(m);
  }

  // Ground scatter over the full extent.
  const double half = spec.extent / 2.0;
  const long n_ground = std::lround(spec.density * spec.extent * spec.extent);
  world.cloud.points.reserve(static_cast<std::size_t>(n_ground));
  world.cloud.labels.reserve(static_cast<std::size_t>(n_ground));
  for (long i = 0; i < n_ground; ++i) {
    const double x = ground_rng.uniform(-half, half);
    const double y = ground_rng.uniform(-half, half);
    const double z = world.ground_height(x, y) + ground_rng.normal(0.0, spec.ground_noise);
    append_point(world, x, y, z, kGround);
  }

  // Obstacles: rock clusters, bushes split at the 0.6 m height line, and
  // tree trunks. All footprints keep clear of the corridor.
  for (int k = 0; k < spec.rock_clusters; ++k) {
    const int boulders = 2 + static_cast<int>(obstacle_rng.uniform_index(3));
    double cx = 0.0, cy = 0.0;
    if (!place_disk(spec, cor, 1.0, obstacle_rng, cx, cy)) continue;
    for (int b = 0; b < boulders; ++b) {
      const double r = obstacle_rng.uniform(0.25, 0.5);
      const double h = obstacle_rng.uniform(0.3, 1.0);
      const double bx = cx + obstacle_rng.uniform(-0.5, 0.5);
      const double by = cy + obstacle_rng.uniform(-0.5, 0.5);
      emit_rock(world, bx, by, r, h, spec.obstacle_density, obstacle_rng);
    }
  }
  for (int k = 0; k < spec.low_bushes; ++k) {
    const double r = obstacle_rng.uniform(0.4, 0.8);
    const double h = obstacle_rng.uniform(0.25, 0.55);
    double cx = 0.0, cy = 0.0;
    if (!place_disk(spec, cor, r, obstacle_rng, cx, cy)) continue;
    emit_bush(world, cx, cy, r, h, 0.02, kLowBush, false, spec.obstacle_density, obstacle_rng);
  }
  for (int k = 0; k < spec.high_bushes; ++k) {
    const double r = obstacle_rng.uniform(0.5, 0.9);
    const double h = obstacle_rng.uniform(0.7, 1.4);
    double cx = 0.0, cy = 0.0;
    if (!place_disk(spec, cor, r, obstacle_rng, cx, cy)) continue;
    emit_bush(world, cx, cy, r, h, 0.05, kHighBush, true, spec.obstacle_density, obstacle_rng);
  }
  for (int k = 0; k < spec.trees; ++k) {
    const double r = obstacle_rng.uniform(0.12, 0.25);
    const double h = obstacle_rng.uniform(2.0, 3.5);
    double cx = 0.0, cy = 0.0;
    if (!place_disk(spec, cor, r + 0.3, obstacle_rng, cx, cy)) continue;
    emit_tree(world, cx, cy, r, h, spec.obstacle_density, obstacle_rng);
  }

  world.cloud.check();
  return world;
}

std::vector<TrajectorySample> generate_trajectory(const World& world, const RobotProfile& profile,
                                                  int n_samples, std::uint64_t seed) {
  profile.check();
  if (n_samples < 2) throw SpecError("trajectory needs at least two samples");

  const WorldSpec& spec = world.spec;
  const CorridorGeom cor = corridor_of(spec, world.slope_dir);
  const double heading0 = std::atan2(cor.dir_y, cor.dir_x);
  const double dt = 0.1;
  const double step = profile.nominal_speed * dt;

  Rng rng(mix_seed(seed, 0x7261));

  // Mean-reverting heading wander around the corridor direction, then the
  // walk is re-centered so its midpoint sits on the robot origin.
  std::vector<double> heading(static_cast<std::size_t>(n_samples));
  double psi = heading0;
  for (int t = 0; t < n_samples; ++t) {
    heading[static_cast<std::size_t>(t)] = psi;
    psi = heading0 + 0.7 * (psi - heading0) + rng.normal(0.0, deg2rad(2.0));
  }
  std::vector<double> xs(static_cast<std::size_t>(n_samples));
  std::vector<double> ys(static_cast<std::size_t>(n_samples));
  xs[0] = 0.0;
  ys[0] = 0.0;
  for (int t = 1; t < n_samples; ++t) {
    xs[static_cast<std::size_t>(t)] =
        xs[static_cast<std::size_t>(t - 1)] + step * std::cos(heading[static_cast<std::size_t>(t - 1)]);
    ys[static_cast<std::size_t>(t)] =
        ys[static_cast<std::size_t>(t - 1)] + step * std::sin(heading[static_cast<std::size_t>(t - 1)]);
  }
  const std::size_t mid = static_cast<std::size_t>(n_samples / 2);
  const double ox = xs[mid];
  const double oy = ys[mid];

  const double sigma = profile.tracking_sigma.at(kGround);
  const double lim = spec.extent / 2.0 - 0.5;
  std::vector<TrajectorySample> out;
  out.reserve(static_cast<std::size_t>(n_samples));
  for (int t = 0; t < n_samples; ++t) {
    const std::size_t i = static_cast<std::size_t>(t);
    TrajectorySample s;
    s.time = t * dt;
    s.x = xs[i] - ox;
    s.y = ys[i] - oy;
    if (std::abs(s.x) > lim || std::abs(s.y) > lim)
      throw NoPathError("trajectory left the scan extent");
    if (corridor_distance(s.x, s.y, cor.dir_x, cor.dir_y, cor.half_len) > cor.half_width)
      throw NoPathError("trajectory drifted out of the obstacle-free corridor");
    s.vcx = profile.nominal_speed * std::cos(heading[i]);
    s.vcy = profile.nominal_speed * std::sin(heading[i]);
    s.vx = s.vcx + rng.normal(0.0, sigma);
    s.vy = s.vcy + rng.normal(0.0, sigma);
    out.push_back(s);
  }
  return out;
}

}  // namespace travest
