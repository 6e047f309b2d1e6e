#include "travest/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "travest/evaluator.hpp"
#include "travest/voxelize.hpp"

namespace travest {

namespace {

using nn::NodePtr;

constexpr std::uint64_t kSplitSalt = 0x5DA7;
constexpr std::uint64_t kInitVoxSalt = 0xC0DE0000;
constexpr std::uint64_t kValVoxSalt = 0xFA110000;
constexpr std::uint64_t kInferVoxSalt = 0x1AFE0000;

std::uint64_t epoch_scan_salt(std::uint64_t tag, int epoch, int scan) {
  return tag + static_cast<std::uint64_t>(epoch) * 100003ULL + static_cast<std::uint64_t>(scan);
}

// Learnable state captured for best-model selection.
struct ModelSnapshot {
  std::vector<std::vector<float>> params;
  std::vector<std::vector<float>> stats;
  Hypersphere sphere;
  int epoch = 0;
  double metric = -std::numeric_limits<double>::infinity();
};

ModelSnapshot take_snapshot(nn::TravNetwork<float>& net, const Hypersphere& sphere, int epoch,
                            double metric) {
  ModelSnapshot snap;
  for (auto& p : net.params()) snap.params.push_back(p.node->value);
  for (auto& s : net.stat_refs()) snap.stats.push_back(*s.second);
  snap.sphere = sphere;
  snap.epoch = epoch;
  snap.metric = metric;
  return snap;
}

void restore_snapshot(nn::TravNetwork<float>& net, Hypersphere& sphere,
                      const ModelSnapshot& snap) {
  auto params = net.params();
  auto stats = net.stat_refs();
  for (std::size_t i = 0; i < params.size(); ++i) params[i].node->value = snap.params[i];
  for (std::size_t i = 0; i < stats.size(); ++i) *stats[i].second = snap.stats[i];
  sphere = snap.sphere;
}

// Per-slot supervision derived from pack_pillars' slot order: slot s sits
// at cell_flat[s] = b*H*W + i*W + j of scan b.
struct BatchRows {
  std::vector<int> pos_rows;
  std::vector<float> pos_targets;
  std::vector<int> unl_rows;
};

BatchRows split_rows(const nn::PackedPillars<float>& packed,
                     const std::vector<const SupervisionGrid*>& sups) {
  BatchRows rows;
  const int plane = packed.height * packed.width;
  for (int s = 0; s < packed.n_cells; ++s) {
    const int flat = packed.cell_flat[static_cast<std::size_t>(s)];
    const int scan = flat / plane;
    const double v = sups[static_cast<std::size_t>(scan)]->values[static_cast<std::size_t>(flat % plane)];
    if (v >= 0.0) {
      rows.pos_rows.push_back(s);
      rows.pos_targets.push_back(static_cast<float>(v));
    } else {
      rows.unl_rows.push_back(s);
    }
  }
  return rows;
}

std::vector<double> to_double(const std::vector<float>& v) {
  return std::vector<double>(v.begin(), v.end());
}

// Unlabeled slots split by the frozen sphere according to the loss mode.
void partition_unlabeled(const std::vector<int>& unl_rows, const std::vector<double>& latents,
                         int dim, const Hypersphere& sphere, nn::LossMode mode,
                         std::vector<int>& normal_slots, std::vector<int>& anomalous_slots) {
  normal_slots.clear();
  anomalous_slots.clear();
  if (mode == nn::LossMode::none || unl_rows.empty()) return;
  if (mode == nn::LossMode::all_unlabeled) {
    anomalous_slots = unl_rows;
    return;
  }
  std::vector<double> unl_latents;
  unl_latents.reserve(unl_rows.size() * static_cast<std::size_t>(dim));
  for (int s : unl_rows)
    for (int c = 0; c < dim; ++c)
      unl_latents.push_back(latents[static_cast<std::size_t>(s) * dim + c]);
  const LatentPartition part = classify(unl_latents, dim, sphere);
  for (int r : part.anomalous_rows) anomalous_slots.push_back(unl_rows[static_cast<std::size_t>(r)]);
  if (mode == nn::LossMode::normal_anomalous) {
    for (int r : part.normal_rows) normal_slots.push_back(unl_rows[static_cast<std::size_t>(r)]);
  }
}

struct EvalForward {
  std::vector<double> latents;  // [n_cells, latent_dim]
  std::vector<double> scores;   // [n_cells]
};

EvalForward eval_forward(nn::TravNetwork<float>& net, const nn::PackedPillars<float>& packed) {
  EvalForward out;
  if (packed.n_cells == 0) return out;
  Rng dummy(0);
  auto map = net.encode_pillars(packed, false);
  auto q = net.gather_cells(map, packed.cell_flat);
  auto head = net.head(q, false, dummy);
  out.latents = to_double(head.z->value);
  out.scores = to_double(head.t->value);
  return out;
}

}  // namespace

std::pair<std::vector<int>, std::vector<int>> split_dataset(int n, double train_frac,
                                                            std::uint64_t seed) {
  if (n < 2) throw TooFewSamples("split_dataset: need at least 2 samples");
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(seed, kSplitSalt));
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    const std::size_t j = rng.uniform_index(i + 1);
    std::swap(order[i], order[j]);
  }
  int n_train = static_cast<int>(std::lround(train_frac * n));
  n_train = std::clamp(n_train, 1, n - 1);
  return {std::vector<int>(order.begin(), order.begin() + n_train),
          std::vector<int>(order.begin() + n_train, order.end())};
}

TrainResult fit(const std::vector<Sample>& samples, const GridConfig& grid,
                const std::vector<int>& anomalous_classes, const TrainConfig& cfg,
                std::ostream* progress) {
  cfg.check();
  const auto [train_idx, val_idx] = split_dataset(static_cast<int>(samples.size()),
                                                  cfg.train_frac, cfg.seed);

  TrainResult result;
  result.model.train_cfg = cfg;
  result.model.grid = grid;
  result.model.net = nn::TravNetwork<float>::init(cfg.net, cfg.seed);
  auto& net = result.model.net;
  auto params = net.params();
  result.adam.lr = static_cast<float>(cfg.lr);

  Hypersphere sphere;
  sphere.momentum = cfg.epsilon;
  sphere.update_period = cfg.k;
  const int dim = cfg.net.latent_dim;

  // Validation inputs are fixed across epochs: voxelize once, and project
  // truth labels when the clouds carry them.
  std::vector<PillarTensor> val_pillars;
  std::vector<LabelGrid> val_truth;
  bool val_labeled = !val_idx.empty();
  for (int vi : val_idx) {
    const Sample& s = samples[static_cast<std::size_t>(vi)];
    val_pillars.push_back(voxelize(s.cloud, grid, mix_seed(cfg.seed, kValVoxSalt + static_cast<std::uint64_t>(vi))));
    if (s.cloud.has_labels()) {
      val_truth.push_back(project_labels(s.cloud, anomalous_classes, grid));
    } else {
      val_labeled = false;
    }
  }

  // Epoch 0: forward-only pass over the unaugmented training set to seed
  // the sphere (center = mean positive latent, radius = EMA with zero
  // momentum, i.e. the plain mean distance).
  {
    std::vector<double> pos_latents;
    for (int ti : train_idx) {
      const Sample& s = samples[static_cast<std::size_t>(ti)];
      const PillarTensor pt =
          voxelize(s.cloud, grid, mix_seed(cfg.seed, kInitVoxSalt + static_cast<std::uint64_t>(ti)));
      const auto packed = nn::pack_pillars<float>({&pt});
      const auto rows = split_rows(packed, {&s.grid_scores});
      if (rows.pos_rows.empty()) continue;
      const EvalForward fwd = eval_forward(net, packed);
      for (int r : rows.pos_rows)
        for (int c = 0; c < dim; ++c)
          pos_latents.push_back(fwd.latents[static_cast<std::size_t>(r) * dim + c]);
    }
    if (pos_latents.empty())
      throw EmptyPositiveSet("fit: no positive cells in the training split");
    sphere.center = compute_center(pos_latents, dim);
    std::vector<double> dists(pos_latents.size() / static_cast<std::size_t>(dim));
    for (std::size_t r = 0; r < dists.size(); ++r)
      dists[r] = center_distance(pos_latents.data() + r * static_cast<std::size_t>(dim), sphere);
    sphere.radius = update_radius(0.0, dists, 0.0);
  }

  ModelSnapshot best;
  const std::size_t batch_count =
      (train_idx.size() + static_cast<std::size_t>(cfg.batch_size) - 1) /
      static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<int> order = train_idx;
    {
      Rng rng(mix_seed(cfg.seed, 0x50000000ULL + static_cast<std::uint64_t>(epoch)));
      for (std::size_t i = order.size() - 1; i > 0; --i) {
        const std::size_t j = rng.uniform_index(i + 1);
        std::swap(order[i], order[j]);
      }
    }

    nn::LossReport epoch_sum;
    long epoch_nn = 0, epoch_na = 0;
    int used_batches = 0;
    std::vector<double> epoch_pos_latents;

    for (std::size_t b = 0; b < batch_count; ++b) {
      const std::size_t lo = b * static_cast<std::size_t>(cfg.batch_size);
      const std::size_t hi = std::min(order.size(), lo + static_cast<std::size_t>(cfg.batch_size));

      // Fresh augmented view of each scan, with its supervision carried
      // through the same rigid transforms.
      std::vector<PillarTensor> tensors;
      std::vector<SupervisionGrid> sups;
      tensors.reserve(hi - lo);
      sups.reserve(hi - lo);
      for (std::size_t s = lo; s < hi; ++s) {
        const int si = order[s];
        const Sample& sample = samples[static_cast<std::size_t>(si)];
        std::vector<std::array<double, 2>> traj;
        traj.reserve(sample.window.entries.size());
        for (const auto& e : sample.window.entries) traj.push_back({e.x, e.y});
        Rng aug_rng(mix_seed(cfg.seed, epoch_scan_salt(0xA0000000ULL, epoch, si)));
        AugmentResult aug = augment(sample.cloud, traj, cfg.augment, aug_rng);
        SupervisionWindow window = sample.window;
        for (std::size_t e = 0; e < window.entries.size(); ++e) {
          window.entries[e].x = aug.traj_xy[e][0];
          window.entries[e].y = aug.traj_xy[e][1];
        }
        sups.push_back(rasterize(window, grid));
        tensors.push_back(voxelize(aug.cloud, grid,
                                   mix_seed(cfg.seed, epoch_scan_salt(0xB0000000ULL, epoch, si))));
      }

      std::vector<const PillarTensor*> tensor_ptrs;
      std::vector<const SupervisionGrid*> sup_ptrs;
      for (std::size_t s = 0; s < tensors.size(); ++s) {
        tensor_ptrs.push_back(&tensors[s]);
        sup_ptrs.push_back(&sups[s]);
      }
      const auto packed = nn::pack_pillars<float>(tensor_ptrs);
      const auto rows = split_rows(packed, sup_ptrs);
      if (rows.pos_rows.empty()) {
        ++result.skipped_batches;
        if (progress)
          *progress << "[epoch " << epoch << "] batch " << b << " skipped: no positive cells\n";
        continue;
      }

      Rng dropout_rng(mix_seed(cfg.seed, 0xD0000000ULL + static_cast<std::uint64_t>(epoch) * 1009ULL +
                                             static_cast<std::uint64_t>(b)));
      auto map = net.encode_pillars(packed, true);
      auto q = net.gather_cells(map, packed.cell_flat);
      auto head = net.head(q, true, dropout_rng);

      const std::vector<double> latents = to_double(head.z->value);
      std::vector<int> normal_slots, anomalous_slots;
      partition_unlabeled(rows.unl_rows, latents, dim, sphere, cfg.loss_mode, normal_slots,
                          anomalous_slots);

      auto z_p = nn::gather_rows(head.z, rows.pos_rows);
      auto z_n = normal_slots.empty() ? nullptr : nn::gather_rows(head.z, normal_slots);
      auto z_a = anomalous_slots.empty() ? nullptr : nn::gather_rows(head.z, anomalous_slots);
      auto t_a = anomalous_slots.empty() ? nullptr : nn::gather_rows(head.t, anomalous_slots);
      auto u_p = nn::gather_rows(head.u, rows.pos_rows);
      auto q_p = nn::gather_rows(q, rows.pos_rows);
      auto t_p = nn::gather_rows(head.t, rows.pos_rows);

      std::vector<float> center_f(sphere.center.begin(), sphere.center.end());
      auto anomaly = nn::anomaly_loss(z_p, z_n, z_a, center_f, static_cast<float>(cfg.weights.zeta));
      auto recon = nn::recon_loss(u_p, q_p);
      auto regression = nn::regression_loss(t_p, rows.pos_targets, t_a);
      auto bundle = nn::total_loss(anomaly, recon, regression, cfg.weights);

      const nn::LossReport report = bundle.report(cfg.weights);
      if (!std::isfinite(report.total))
        throw NumericError("fit: non-finite loss at epoch " + std::to_string(epoch));

      nn::backward(bundle.total);
      result.adam.step(params);

      epoch_sum.anomaly += report.anomaly;
      epoch_sum.recon += report.recon;
      epoch_sum.regression += report.regression;
      epoch_sum.total += report.total;
      epoch_nn += static_cast<long>(normal_slots.size());
      epoch_na += static_cast<long>(anomalous_slots.size());
      ++used_batches;

      for (int r : rows.pos_rows)
        for (int c = 0; c < dim; ++c)
          epoch_pos_latents.push_back(latents[static_cast<std::size_t>(r) * dim + c]);
    }

    if (used_batches == 0)
      throw EmptyPositiveSet("fit: every batch of epoch " + std::to_string(epoch) + " was skipped");

    // Sphere maintenance at the epoch boundary: center every k epochs,
    // radius EMA every epoch against the freshly updated center.
    if (epoch % cfg.k == 0) sphere.center = compute_center(epoch_pos_latents, dim);
    {
      const std::size_t n = epoch_pos_latents.size() / static_cast<std::size_t>(dim);
      std::vector<double> dists(n);
      for (std::size_t r = 0; r < n; ++r)
        dists[r] =
            center_distance(epoch_pos_latents.data() + r * static_cast<std::size_t>(dim), sphere);
      sphere.radius = update_radius(sphere.radius, dists, cfg.epsilon);
    }

    // Validation: micro F1 against projected labels when available,
    // negative mean total loss otherwise.
    double val_metric = 0.0;
    if (val_labeled) {
      std::vector<Metrics> per_scan;
      for (std::size_t v = 0; v < val_pillars.size(); ++v) {
        const auto packed = nn::pack_pillars<float>({&val_pillars[v]});
        const EvalForward fwd = eval_forward(net, packed);
        LabelGrid pred;
        pred.grid = grid;
        pred.cells.assign(static_cast<std::size_t>(grid.cell_count()), CellLabel::empty);
        for (int s = 0; s < packed.n_cells; ++s) {
          const double d =
              center_distance(fwd.latents.data() + static_cast<std::size_t>(s) * dim, sphere);
          pred.cells[static_cast<std::size_t>(packed.cell_flat[static_cast<std::size_t>(s)])] =
              d <= sphere.radius ? CellLabel::normal : CellLabel::anomalous;
        }
        per_scan.push_back(score(pred, val_truth[v]));
      }
      val_metric = micro_average(per_scan).f1;
    } else {
      double loss_sum = 0.0;
      int counted = 0;
      for (std::size_t v = 0; v < val_pillars.size(); ++v) {
        const int vi = val_idx[v];
        const auto packed = nn::pack_pillars<float>({&val_pillars[v]});
        const auto rows = split_rows(packed, {&samples[static_cast<std::size_t>(vi)].grid_scores});
        if (rows.pos_rows.empty()) continue;
        Rng dummy(0);
        auto map = net.encode_pillars(packed, false);
        auto q = net.gather_cells(map, packed.cell_flat);
        auto head = net.head(q, false, dummy);
        const std::vector<double> latents = to_double(head.z->value);
        std::vector<int> normal_slots, anomalous_slots;
        partition_unlabeled(rows.unl_rows, latents, dim, sphere, cfg.loss_mode, normal_slots,
                            anomalous_slots);
        auto z_p = nn::gather_rows(head.z, rows.pos_rows);
        auto z_n = normal_slots.empty() ? nullptr : nn::gather_rows(head.z, normal_slots);
        auto z_a = anomalous_slots.empty() ? nullptr : nn::gather_rows(head.z, anomalous_slots);
        auto t_a = anomalous_slots.empty() ? nullptr : nn::gather_rows(head.t, anomalous_slots);
        std::vector<float> center_f(sphere.center.begin(), sphere.center.end());
        auto bundle = nn::total_loss(
            nn::anomaly_loss(z_p, z_n, z_a, center_f, static_cast<float>(cfg.weights.zeta)),
            nn::recon_loss(nn::gather_rows(head.u, rows.pos_rows), nn::gather_rows(q, rows.pos_rows)),
            nn::regression_loss(nn::gather_rows(head.t, rows.pos_rows), rows.pos_targets, t_a),
            cfg.weights);
        loss_sum += bundle.report(cfg.weights).total;
        ++counted;
      }
      val_metric = counted > 0 ? -loss_sum / counted : -std::numeric_limits<double>::infinity();
    }

    if (val_metric > best.metric) best = take_snapshot(net, sphere, epoch, val_metric);

    EpochRow row;
    row.epoch = epoch;
    row.loss.anomaly = epoch_sum.anomaly / used_batches;
    row.loss.recon = epoch_sum.recon / used_batches;
    row.loss.regression = epoch_sum.regression / used_batches;
    row.loss.total = epoch_sum.total / used_batches;
    row.r_p = sphere.radius;
    row.n_n = epoch_nn;
    row.n_a = epoch_na;
    row.val_metric = val_metric;
    result.log.push_back(row);

    if (progress) {
      *progress << "[epoch " << epoch << "/" << cfg.epochs << "] total=" << row.loss.total
                << " anomaly=" << row.loss.anomaly << " recon=" << row.loss.recon
                << " regression=" << row.loss.regression << " r_p=" << row.r_p
                << (val_labeled ? " val_f1=" : " val_neg_loss=") << val_metric << "\n";
      progress->flush();
    }
  }

  restore_snapshot(net, sphere, best);
  result.model.sphere = sphere;
  result.model.best_epoch = best.epoch;
  result.model.best_val_metric = best.metric;
  return result;
}

ScanInference infer_scan(TrainedModel& model, const PointCloud& cloud, const GridConfig& grid) {
  const PillarTensor pt = voxelize(cloud, grid, mix_seed(model.train_cfg.seed, kInferVoxSalt));
  const auto packed = nn::pack_pillars<float>({&pt});
  ScanInference out;
  out.cell_flat = packed.cell_flat;
  const EvalForward fwd = eval_forward(model.net, packed);
  out.latents = fwd.latents;
  out.scores = fwd.scores;
  return out;
}

}  // namespace travest
