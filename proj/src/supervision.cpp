#include "travest/supervision.hpp"

#include <cmath>
#include <cstddef>

namespace travest {

double velocity_error(double vx, double vy, double vcx, double vcy) {
  const double dx = vx - vcx;
  const double dy = vy - vcy;
  return 0.5 * (dx * dx + dy * dy);
}

double score_from_error(double v_error, const ScoreParams& params) {
  params.check();
  if (params.constant_tau) return *params.constant_tau;
  return 1.0 / (1.0 + std::exp(params.eta * (v_error - params.v_th)));
}

double traversability_score(double vx, double vy, double vcx, double vcy,
                            const ScoreParams& params) {
  return score_from_error(velocity_error(vx, vy, vcx, vcy), params);
}

SupervisionWindow build_window(const std::vector<TrajectorySample>& trajectory, int t_index, int n,
                               const ScoreParams& params) {
  params.check();
  if (t_index < 0 || n < 0 || t_index + n >= static_cast<int>(trajectory.size()))
    throw WindowOutOfRange("build_window: sample range exceeds trajectory");
  SupervisionWindow window;
  window.window_size = n;
  window.entries.reserve(static_cast<std::size_t>(n) + 1);
  for (int s = t_index; s <= t_index + n; ++s) {
    const auto& sample = trajectory[static_cast<std::size_t>(s)];
    window.entries.push_back(
        {sample.x, sample.y, traversability_score(sample.vx, sample.vy, sample.vcx, sample.vcy, params)});
  }
  return window;
}

SupervisionGrid rasterize(const SupervisionWindow& window, const GridConfig& grid) {
  SupervisionGrid out;
  out.grid = grid;
  out.values.assign(static_cast<std::size_t>(grid.cell_count()), -1.0);
  std::vector<double> sums(static_cast<std::size_t>(grid.cell_count()), 0.0);
  std::vector<int> hits(static_cast<std::size_t>(grid.cell_count()), 0);
  for (const auto& e : window.entries) {
    const auto cell = cell_of(e.x, e.y, grid);
    if (!cell) continue;
    const auto k = static_cast<std::size_t>(flat_index(*cell, grid));
    sums[k] += e.tau;
    ++hits[k];
  }
  for (std::size_t k = 0; k < sums.size(); ++k) {
    if (hits[k] > 0) out.values[k] = sums[k] / hits[k];
  }
  return out;
}

}  // namespace travest
