#include "travest/augment.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "travest/errors.hpp"

namespace travest {

namespace {

// Dominant-ground proxy: fit against the below-median-height subset so
// canopy and tall obstacles do not drag the plane upward.
PointCloud below_median_z(const PointCloud& cloud) {
  PointCloud out;
  if (cloud.empty()) return out;
  std::vector<double> zs;
  zs.reserve(cloud.size());
  for (const auto& p : cloud.points) zs.push_back(p.z);
  const std::size_t mid = zs.size() / 2;
  std::nth_element(zs.begin(), zs.begin() + static_cast<std::ptrdiff_t>(mid), zs.end());
  const double median = zs[mid];
  out.points.reserve(cloud.size() / 2 + 1);
  for (const auto& p : cloud.points) {
    if (p.z <= median) out.points.push_back(p);
  }
  return out;
}

}  // namespace

AugmentResult augment(const PointCloud& cloud, const std::vector<std::array<double, 2>>& traj_xy,
                      const AugmentPolicy& policy, Rng& rng) {
  cloud.check();
  AugmentResult out;
  out.cloud = cloud;
  out.traj_xy = traj_xy;

  out.flipped = rng.bernoulli(policy.flip_prob);
  if (out.flipped) {
    out.cloud = flip_x(out.cloud);
    for (auto& q : out.traj_xy) q[0] = -q[0];
  }

  out.yaw = rng.uniform(policy.yaw_min, policy.yaw_max);
  out.cloud = rotate_yaw(out.cloud, out.yaw);
  {
    const double c = std::cos(out.yaw);
    const double s = std::sin(out.yaw);
    for (auto& q : out.traj_xy) {
      const double x = c * q[0] - s * q[1];
      const double y = s * q[0] + c * q[1];
      q[0] = x;
      q[1] = y;
    }
  }

  if (!policy.pitch_enabled) return out;

  RansacConfig cfg = policy.ransac;
  cfg.seed = rng.next();
  const RansacResult fit = ransac_ground(below_median_z(out.cloud), cfg);
  const double theta = slope_angle(fit.plane);
  if (fit.inlier_frac < cfg.min_inlier_frac || theta >= policy.pitch_slope_gate) return out;

  // A slope the robot already handled bounds the tilt that is safe to
  // simulate, so the draw range is the fitted slope itself.
  out.pitch = rng.uniform(-theta, theta);
  out.cloud = rotate_pitch(out.cloud, out.pitch);
  const double c = std::cos(out.pitch);
  const double s = std::sin(out.pitch);
  for (auto& q : out.traj_xy) {
    // Lift the planar position onto the fitted ground before rotating so
    // the trajectory follows the same rigid motion as nearby points.
    const double z = fit.plane.height_at(q[0], q[1]);
    q[0] = c * q[0] + s * z;
  }
  return out;
}

}  // namespace travest
