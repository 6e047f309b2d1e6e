#pragma once

#include <cmath>
#include <cstdint>
#include <optional>

namespace travest {

// Robot-centered BEV grid. Cell (0,0) has its lower corner at `origin`;
// rows index y, columns index x, both half-open: a point on the upper
// extent falls outside.
struct GridConfig {
  int height_cells = 80;
  int width_cells = 80;
  double resolution = 0.15;  // meters per cell
  double origin_x = -6.0;
  double origin_y = -6.0;
  int max_points = 32;  // per-pillar cap M
  // Optional z crop; points outside [z_min, z_max] are dropped before
  // voxelization. Disabled when z_min > z_max (the default).
  double z_min = 1.0;
  double z_max = 0.0;

  bool z_crop_enabled() const { return z_min <= z_max; }
  int cell_count() const { return height_cells * width_cells; }

  // Grid centered on (cx, cy) covering side_m x side_m meters.
  static GridConfig centered(double cx, double cy, double side_m, double resolution,
                             int max_points) {
    GridConfig g;
    g.resolution = resolution;
    g.height_cells = static_cast<int>(std::lround(side_m / resolution));
    g.width_cells = g.height_cells;
    g.origin_x = cx - side_m / 2.0;
    g.origin_y = cy - side_m / 2.0;
    g.max_points = max_points;
    return g;
  }
};

struct CellIndex {
  int i = 0;  // row, along y
  int j = 0;  // column, along x
};

inline std::optional<CellIndex> cell_of(double x, double y, const GridConfig& grid) {
  const int i = static_cast<int>(std::floor((y - grid.origin_y) / grid.resolution));
  const int j = static_cast<int>(std::floor((x - grid.origin_x) / grid.resolution));
  if (i < 0 || i >= grid.height_cells || j < 0 || j >= grid.width_cells) return std::nullopt;
  return CellIndex{i, j};
}

inline int flat_index(const CellIndex& c, const GridConfig& grid) {
  return c.i * grid.width_cells + c.j;
}

}  // namespace travest
