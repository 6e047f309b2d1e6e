#include "travest/evaluator.hpp"

#include <algorithm>

#include "travest/errors.hpp"

namespace travest {

LabelGrid project_labels(const PointCloud& cloud, const std::vector<int>& anomalous_classes,
                         const GridConfig& grid) {
  cloud.check();
  if (!cloud.has_labels() && !cloud.empty())
    throw MissingLabels("project_labels: cloud carries no labels");
  LabelGrid out;
  out.grid = grid;
  out.cells.assign(static_cast<std::size_t>(grid.cell_count()), CellLabel::empty);
  for (std::size_t p = 0; p < cloud.size(); ++p) {
    const auto& pt = cloud.points[p];
    const auto cell = cell_of(pt.x, pt.y, grid);
    if (!cell) continue;
    auto& c = out.cells[static_cast<std::size_t>(flat_index(*cell, grid))];
    const bool anomalous = std::find(anomalous_classes.begin(), anomalous_classes.end(),
                                     cloud.labels[p]) != anomalous_classes.end();
    if (anomalous) {
      c = CellLabel::anomalous;
    } else if (c == CellLabel::empty) {
      c = CellLabel::normal;
    }
  }
  return out;
}

LabelGrid predict_grid(TrainedModel& model, const PointCloud& cloud, const GridConfig& grid) {
  LabelGrid out;
  out.grid = grid;
  out.cells.assign(static_cast<std::size_t>(grid.cell_count()), CellLabel::empty);
  const ScanInference inf = infer_scan(model, cloud, grid);
  const int dim = model.sphere.dim();
  for (std::size_t s = 0; s < inf.cell_flat.size(); ++s) {
    const double d =
        center_distance(inf.latents.data() + s * static_cast<std::size_t>(dim), model.sphere);
    out.cells[static_cast<std::size_t>(inf.cell_flat[s])] =
        d <= model.sphere.radius ? CellLabel::normal : CellLabel::anomalous;
  }
  return out;
}

Metrics metrics_from_counts(long tp, long fp, long fn, long tn) {
  Metrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.tn = tn;
  m.evaluated_cells = tp + fp + fn + tn;
  m.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                                        : 0.0;
  return m;
}

Metrics score(const LabelGrid& pred, const LabelGrid& truth) {
  if (pred.grid.height_cells != truth.grid.height_cells ||
      pred.grid.width_cells != truth.grid.width_cells)
    throw ShapeMismatch("score: grids disagree on dims");
  long tp = 0, fp = 0, fn = 0, tn = 0;
  for (std::size_t i = 0; i < pred.cells.size(); ++i) {
    const CellLabel p = pred.cells[i];
    const CellLabel t = truth.cells[i];
    if (p == CellLabel::empty || t == CellLabel::empty) continue;
    const bool pred_normal = (p == CellLabel::normal);
    const bool true_normal = (t == CellLabel::normal);
    if (pred_normal && true_normal) ++tp;
    else if (pred_normal && !true_normal) ++fp;
    else if (!pred_normal && true_normal) ++fn;
    else ++tn;
  }
  return metrics_from_counts(tp, fp, fn, tn);
}

Metrics micro_average(const std::vector<Metrics>& per_scan) {
  long tp = 0, fp = 0, fn = 0, tn = 0;
  for (const auto& m : per_scan) {
    tp += m.tp;
    fp += m.fp;
    fn += m.fn;
    tn += m.tn;
  }
  return metrics_from_counts(tp, fp, fn, tn);
}

Metrics macro_average(const std::vector<Metrics>& per_scan) {
  Metrics out;
  if (per_scan.empty()) return out;
  for (const auto& m : per_scan) {
    out.precision += m.precision;
    out.recall += m.recall;
    out.f1 += m.f1;
    out.tp += m.tp;
    out.fp += m.fp;
    out.fn += m.fn;
    out.tn += m.tn;
  }
  const double n = static_cast<double>(per_scan.size());
  out.precision /= n;
  out.recall /= n;
  out.f1 /= n;
  out.evaluated_cells = out.tp + out.fp + out.fn + out.tn;
  return out;
}

}  // namespace travest
