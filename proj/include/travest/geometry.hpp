#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "travest/errors.hpp"

namespace travest {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

// Ordered point set with optional per-point class ids. labels is either
// empty or aligned 1:1 with points.
struct PointCloud {
  std::vector<Point3> points;
  std::vector<int> labels;

  bool has_labels() const { return !labels.empty(); }
  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  void check() const {
    if (!labels.empty() && labels.size() != points.size())
      throw SizeMismatch("point cloud labels do not align with points");
  }
};

// n . p = offset, with the normal oriented so normal.z >= 0.
struct Plane {
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double offset = 0.0;

  double signed_distance(const Point3& p) const {
    return normal.x() * p.x + normal.y() * p.y + normal.z() * p.z - offset;
  }
  // ground height below (x, y); requires a non-horizontal-degenerate normal
  double height_at(double x, double y) const {
    return (offset - normal.x() * x - normal.y() * y) / normal.z();
  }
};

// Reflection across the yz-plane: (x, y, z) -> (-x, y, z).
PointCloud flip_x(const PointCloud& cloud);

// Rotation about z by psi (right-handed).
PointCloud rotate_yaw(const PointCloud& cloud, double psi);

// Rotation about y by theta_r, with
// R_y(t) = [[cos t, 0, sin t], [0, 1, 0], [-sin t, 0, cos t]].
PointCloud rotate_pitch(const PointCloud& cloud, double theta_r);

// Angle between the plane normal and +z, in [0, pi/2] for canonical planes.
double slope_angle(const Plane& plane);

}  // namespace travest
