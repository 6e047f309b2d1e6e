#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "travest/geometry.hpp"
#include "travest/grid.hpp"

namespace travest {

// Dense BEV pillar tensor: per cell up to max_points feature rows of
// [x_l, y_l, z, x_c, y_c, z_c, sigma_z], zero-padded past counts[i,j].
// (x_l, y_l) are offsets from the pillar's geometric center; (x_c, y_c,
// z_c) are offsets from the mean of every point assigned to the pillar
// (before any truncation); sigma_z is the population std of z over that
// same full assignment.
struct PillarTensor {
  GridConfig grid;
  std::vector<double> features;  // height * width * max_points * 7, row-major
  std::vector<int> counts;       // height * width

  static constexpr int kChannels = 7;

  std::size_t row_offset(int i, int j, int m) const {
    return (static_cast<std::size_t>(i * grid.width_cells + j) *
                static_cast<std::size_t>(grid.max_points) +
            static_cast<std::size_t>(m)) *
           kChannels;
  }
  int count_at(int i, int j) const {
    return counts[static_cast<std::size_t>(i * grid.width_cells + j)];
  }
};

// Deterministic for a fixed seed and invariant to input point order:
// per-cell assignments are put in a canonical order before the seeded
// uniform subsample that resolves cells holding more than max_points.
PillarTensor voxelize(const PointCloud& cloud, const GridConfig& grid, std::uint64_t seed);

// Little-endian binary cache format (magic "GSPT"); round-trips bit-exactly.
void save_pillars(const PillarTensor& tensor, const std::string& path);
PillarTensor load_pillars(const std::string& path);

}  // namespace travest
