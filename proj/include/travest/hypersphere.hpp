#pragma once

#include <vector>

#include "travest/errors.hpp"

namespace travest {

// Positive hypersphere in latent space: the decision boundary for the
// normal/anomalous split of unlabeled cells.
struct Hypersphere {
  std::vector<double> center;
  double radius = 0.0;
  double momentum = 0.5;  // EMA weight on the previous radius
  int update_period = 5;  // center recompute cadence, in epochs

  int dim() const { return static_cast<int>(center.size()); }
};

// Row indices of the unlabeled latents on each side of the boundary.
struct LatentPartition {
  std::vector<int> normal_rows;
  std::vector<int> anomalous_rows;
};

// Arithmetic mean of row-major [n, dim] latents.
std::vector<double> compute_center(const std::vector<double>& latents, int dim);

// EMA step: epsilon * r_prev + (1 - epsilon) * mean(distances).
double update_radius(double r_prev, const std::vector<double>& distances, double epsilon);

double center_distance(const double* z, const Hypersphere& sphere);

// Boundary-inclusive split: distance <= radius is normal.
LatentPartition classify(const std::vector<double>& latents, int dim, const Hypersphere& sphere);

}  // namespace travest
