#include "travest/ransac.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstddef>
#include <vector>

#include "travest/errors.hpp"
#include "travest/rng.hpp"

namespace travest {

namespace {

Eigen::Vector3d to_eigen(const Point3& p) { return {p.x, p.y, p.z}; }

// Canonical orientation: the normal points up (ties broken toward +z are
// irrelevant because a zero z-component plane is vertical and never wins
// the ground fit in practice; we still flip deterministically on < 0).
void canonicalize(Plane& plane) {
  if (plane.normal.z() < 0.0) {
    plane.normal = -plane.normal;
    plane.offset = -plane.offset;
  }
}

int count_inliers(const PointCloud& cloud, const Plane& plane, double tol) {
  int n = 0;
  for (const auto& p : cloud.points) {
    if (std::abs(plane.signed_distance(p)) <= tol) ++n;
  }
  return n;
}

// Least-squares plane through a point subset: centroid plus the covariance
// eigenvector with the smallest eigenvalue.
Plane fit_plane(const PointCloud& cloud, const std::vector<int>& idx) {
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (int i : idx) centroid += to_eigen(cloud.points[static_cast<std::size_t>(i)]);
  centroid /= static_cast<double>(idx.size());

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (int i : idx) {
    const Eigen::Vector3d d = to_eigen(cloud.points[static_cast<std::size_t>(i)]) - centroid;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  Plane plane;
  plane.normal = es.eigenvectors().col(0).normalized();
  plane.offset = -plane.normal.dot(centroid);
  canonicalize(plane);
  return plane;
}

}  // namespace

RansacResult ransac_ground(const PointCloud& cloud, const RansacConfig& cfg) {
  const std::size_t n = cloud.size();
  if (n < 3) throw DegenerateCloud("ransac_ground: need at least 3 points");

  Rng rng(cfg.seed);
  bool found = false;
  Plane best;
  int best_inliers = -1;

  for (int it = 0; it < cfg.iterations; ++it) {
    const std::size_t a = rng.uniform_index(n);
    const std::size_t b = rng.uniform_index(n);
    const std::size_t c = rng.uniform_index(n);
    if (a == b || a == c || b == c) continue;

    const Eigen::Vector3d pa = to_eigen(cloud.points[a]);
    const Eigen::Vector3d nrm =
        (to_eigen(cloud.points[b]) - pa).cross(to_eigen(cloud.points[c]) - pa);
    const double len = nrm.norm();
    if (len < 1e-12) continue;  // collinear sample

    Plane cand;
    cand.normal = nrm / len;
    cand.offset = -cand.normal.dot(pa);
    canonicalize(cand);

    const int inliers = count_inliers(cloud, cand, cfg.inlier_dist);
    if (inliers > best_inliers) {
      best_inliers = inliers;
      best = cand;
      found = true;
    }
  }
  if (!found) throw DegenerateCloud("ransac_ground: no valid plane hypothesis");

  // Refit on the consensus set, then recount so the reported fraction
  // reflects the refined plane rather than the sampled hypothesis.
  std::vector<int> consensus;
  consensus.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(best.signed_distance(cloud.points[i])) <= cfg.inlier_dist)
      consensus.push_back(static_cast<int>(i));
  }
  if (consensus.size() >= 3) best = fit_plane(cloud, consensus);

  RansacResult res;
  res.plane = best;
  res.inlier_frac =
      static_cast<double>(count_inliers(cloud, best, cfg.inlier_dist)) / static_cast<double>(n);
  return res;
}

}  // namespace travest
