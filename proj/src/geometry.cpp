#include "travest/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace travest {

PointCloud flip_x(const PointCloud& cloud) {
  cloud.check();
  PointCloud out = cloud;
  for (auto& p : out.points) p.x = -p.x;
  return out;
}

PointCloud rotate_yaw(const PointCloud& cloud, double psi) {
  cloud.check();
  const double c = std::cos(psi);
  const double s = std::sin(psi);
  PointCloud out = cloud;
  for (auto& p : out.points) {
    const double x = c * p.x - s * p.y;
    const double y = s * p.x + c * p.y;
    p.x = x;
    p.y = y;
  }
  return out;
}

PointCloud rotate_pitch(const PointCloud& cloud, double theta_r) {
  cloud.check();
  const double c = std::cos(theta_r);
  const double s = std::sin(theta_r);
  PointCloud out = cloud;
  for (auto& p : out.points) {
    const double x = c * p.x + s * p.z;
    const double z = -s * p.x + c * p.z;
    p.x = x;
    p.z = z;
  }
  return out;
}

double slope_angle(const Plane& plane) {
  const double nz = std::clamp(plane.normal.z(), -1.0, 1.0);
  return std::acos(nz);
}

}  // namespace travest
