#pragma once

#include <cstdint>
#include <vector>

#include "travest/geometry.hpp"
#include "travest/grid.hpp"
#include "travest/trainer.hpp"

namespace travest {

enum class CellLabel : std::uint8_t { empty = 0, normal = 1, anomalous = 2 };

struct LabelGrid {
  GridConfig grid;
  std::vector<CellLabel> cells;

  CellLabel at(int i, int j) const {
    return cells[static_cast<std::size_t>(i * grid.width_cells + j)];
  }
  CellLabel& at(int i, int j) {
    return cells[static_cast<std::size_t>(i * grid.width_cells + j)];
  }
};

// Ground-truth projection: a cell holding at least one point of an
// anomalous class is anomalous, a cell holding only other points is
// normal, a pointless cell is empty.
LabelGrid project_labels(const PointCloud& cloud, const std::vector<int>& anomalous_classes,
                         const GridConfig& grid);

// Hypersphere classification of every occupied cell of a scan.
LabelGrid predict_grid(TrainedModel& model, const PointCloud& cloud, const GridConfig& grid);

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long tp = 0, fp = 0, fn = 0, tn = 0;
  long evaluated_cells = 0;
};

Metrics metrics_from_counts(long tp, long fp, long fn, long tn);

// Positive class is NORMAL (traversable). Cells empty in either grid are
// excluded from the confusion counts.
Metrics score(const LabelGrid& pred, const LabelGrid& truth);

// Micro aggregation: pool confusion counts across scans, then recompute.
Metrics micro_average(const std::vector<Metrics>& per_scan);
// Macro aggregation: unweighted mean of per-scan precision/recall/f1.
Metrics macro_average(const std::vector<Metrics>& per_scan);

}  // namespace travest
