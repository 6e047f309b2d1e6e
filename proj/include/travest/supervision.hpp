#pragma once

#include <optional>
#include <vector>

#include "travest/errors.hpp"
#include "travest/grid.hpp"

namespace travest {

struct TrajectorySample {
  double time = 0.0;  // seconds, strictly increasing within a trajectory
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;  // actual velocity, m/s
  double vy = 0.0;
  double vcx = 0.0;  // commanded velocity, m/s
  double vcy = 0.0;
};

struct ScoreParams {
  double eta = 2.0;    // sigmoid sharpness
  double v_th = 0.25;  // (m/s)^2 midpoint: score is 0.5 at this tracking error
  std::optional<double> constant_tau;  // overrides velocity-based scoring

  void check() const {
    if (!(eta > 0.0)) throw ConfigError("score params: eta must be positive");
    if (!(v_th >= 0.0)) throw ConfigError("score params: v_th must be non-negative");
    if (constant_tau && (*constant_tau < 0.0 || *constant_tau > 1.0))
      throw ConfigError("score params: constant_tau must lie in [0,1]");
  }
};

struct SupervisionEntry {
  double x = 0.0;
  double y = 0.0;
  double tau = 0.0;  // in [0,1]
};

struct SupervisionWindow {
  std::vector<SupervisionEntry> entries;
  int window_size = 0;
};

// Per-cell scores; unvisited cells hold -1.
struct SupervisionGrid {
  GridConfig grid;
  std::vector<double> values;  // height_cells * width_cells, row-major

  double at(int i, int j) const { return values[static_cast<std::size_t>(i * grid.width_cells + j)]; }
  double& at(int i, int j) { return values[static_cast<std::size_t>(i * grid.width_cells + j)]; }
};

// Half the squared tracking error between actual and commanded velocity.
double velocity_error(double vx, double vy, double vcx, double vcy);

double score_from_error(double v_error, const ScoreParams& params);

double traversability_score(double vx, double vy, double vcx, double vcy,
                            const ScoreParams& params);

// Scores the inclusive sample range [t_index, t_index + n].
SupervisionWindow build_window(const std::vector<TrajectorySample>& trajectory, int t_index, int n,
                               const ScoreParams& params);

// Mean score per visited cell, -1 elsewhere; entries outside the grid
// extent are dropped.
SupervisionGrid rasterize(const SupervisionWindow& window, const GridConfig& grid);

}  // namespace travest
