#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "travest/trainer.hpp"

namespace travest {

// Per-cell regression scores with an unknown mask over empty cells.
struct TraversabilityMap {
  GridConfig grid;
  std::vector<double> scores;    // valid only where known
  std::vector<std::uint8_t> unknown;

  bool is_unknown(int i, int j) const {
    return unknown[static_cast<std::size_t>(i * grid.width_cells + j)] != 0;
  }
  double score_at(int i, int j) const {
    return scores[static_cast<std::size_t>(i * grid.width_cells + j)];
  }
};

enum class CostCell : std::uint8_t { free = 0, occupied = 1, unknown = 2 };

struct Costmap {
  GridConfig grid;
  std::vector<CostCell> cells;

  CostCell at(int i, int j) const {
    return cells[static_cast<std::size_t>(i * grid.width_cells + j)];
  }
};

// Regression score per occupied cell; empty cells unknown. With
// anomaly_override, cells outside the hypersphere are forced to score 0
// (off by default — the regression head already learns the pull to zero).
TraversabilityMap infer_map(TrainedModel& model, const PointCloud& cloud, const GridConfig& grid,
                            bool anomaly_override = false);

// score >= threshold -> free, score < threshold -> occupied; unknown kept.
Costmap to_costmap(const TraversabilityMap& map, double threshold);

// CSV float grid: 3 header lines (dims, resolution, origin), then rows of
// %.17g scores with -1 marking unknown cells. Round-trips losslessly.
void save_map_csv(const TraversabilityMap& map, const std::string& path);
TraversabilityMap load_map_csv(const std::string& path);

// Binary PGM (P5) + YAML sidecar in the usual occupancy-map convention:
// free=254, occupied=0, unknown=205; row 0 of the image is the top
// (highest y). The YAML records resolution, origin, and thresholds.
void save_costmap_pgm(const Costmap& map, const std::string& pgm_path,
                      const std::string& yaml_path, double threshold);
Costmap load_costmap_pgm(const std::string& pgm_path);

}  // namespace travest
