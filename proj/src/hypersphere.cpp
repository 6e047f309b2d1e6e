#include "travest/hypersphere.hpp"

#include <cmath>

namespace travest {

std::vector<double> compute_center(const std::vector<double>& latents, int dim) {
  if (dim < 1 || latents.size() % static_cast<std::size_t>(dim) != 0)
    throw SizeMismatch("compute_center: latents not a multiple of dim");
  const std::size_t n = latents.size() / static_cast<std::size_t>(dim);
  if (n == 0) throw EmptyPositiveSet("compute_center: no positive latents");
  std::vector<double> center(static_cast<std::size_t>(dim), 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (int c = 0; c < dim; ++c)
      center[static_cast<std::size_t>(c)] += latents[r * static_cast<std::size_t>(dim) + c];
  for (auto& v : center) v /= static_cast<double>(n);
  return center;
}

double update_radius(double r_prev, const std::vector<double>& distances, double epsilon) {
  if (distances.empty()) throw EmptyDistanceSet("update_radius: no positive distances");
  if (epsilon < 0.0 || epsilon > 1.0) throw ConfigError("update_radius: epsilon outside [0,1]");
  double mean = 0.0;
  for (double d : distances) mean += d;
  mean /= static_cast<double>(distances.size());
  return epsilon * r_prev + (1.0 - epsilon) * mean;
}

double center_distance(const double* z, const Hypersphere& sphere) {
  double sq = 0.0;
  for (int c = 0; c < sphere.dim(); ++c) {
    const double d = z[c] - sphere.center[static_cast<std::size_t>(c)];
    sq += d * d;
  }
  return std::sqrt(sq);
}

LatentPartition classify(const std::vector<double>& latents, int dim, const Hypersphere& sphere) {
  if (dim != sphere.dim()) throw SizeMismatch("classify: latent dim does not match sphere");
  if (latents.size() % static_cast<std::size_t>(dim) != 0)
    throw SizeMismatch("classify: latents not a multiple of dim");
  const std::size_t n = latents.size() / static_cast<std::size_t>(dim);
  LatentPartition out;
  for (std::size_t r = 0; r < n; ++r) {
    const double d = center_distance(latents.data() + r * static_cast<std::size_t>(dim), sphere);
    if (d <= sphere.radius) {
      out.normal_rows.push_back(static_cast<int>(r));
    } else {
      out.anomalous_rows.push_back(static_cast<int>(r));
    }
  }
  return out;
}

}  // namespace travest
