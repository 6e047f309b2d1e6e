#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "travest/augment.hpp"
#include "travest/hypersphere.hpp"
#include "travest/nn/adam.hpp"
#include "travest/nn/losses.hpp"
#include "travest/nn/network.hpp"
#include "travest/supervision.hpp"

namespace travest {

struct TrainConfig {
  double lr = 5e-4;
  int batch_size = 12;  // scans per optimizer step
  int epochs = 100;
  int k = 5;             // center recompute cadence, epochs
  double epsilon = 0.5;  // radius EMA momentum
  nn::LossWeights weights;
  nn::LossMode loss_mode = nn::LossMode::normal_anomalous;
  AugmentPolicy augment;
  std::uint64_t seed = 0;
  double train_frac = 0.8;
  double val_frac = 0.2;
  nn::NetworkConfig net;

  void check() const {
    if (epochs < 1) throw ConfigError("train config: epochs must be >= 1");
    if (k < 1) throw ConfigError("train config: k must be >= 1");
    if (batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
    if (!(lr > 0.0)) throw ConfigError("train config: lr must be positive");
    if (epsilon < 0.0 || epsilon > 1.0) throw ConfigError("train config: epsilon outside [0,1]");
    if (std::abs(train_frac + val_frac - 1.0) > 1e-9)
      throw ConfigError("train config: split fractions must sum to 1");
    if (train_frac <= 0.0 || val_frac <= 0.0)
      throw ConfigError("train config: both split fractions must be positive");
    weights.check();
    net.check();
  }
};

// One scan's training inputs: the cloud, its scored trajectory window,
// and the window rasterized onto the shared grid.
struct Sample {
  PointCloud cloud;
  SupervisionWindow window;
  SupervisionGrid grid_scores;
};

struct TrainedModel {
  nn::TravNetwork<float> net;
  Hypersphere sphere;
  TrainConfig train_cfg;
  GridConfig grid;
  int best_epoch = 0;
  double best_val_metric = 0.0;
};

struct EpochRow {
  int epoch = 0;
  nn::LossReport loss;
  double r_p = 0.0;
  long n_n = 0;  // normal latents used by the losses this epoch
  long n_a = 0;
  double val_metric = 0.0;
};

struct TrainResult {
  TrainedModel model;
  nn::Adam<float> adam;
  std::vector<EpochRow> log;
  int skipped_batches = 0;
};

// Seeded shuffle then proportional split of [0, n) into train/val index
// sets; both sides non-empty.
std::pair<std::vector<int>, std::vector<int>> split_dataset(int n, double train_frac,
                                                            std::uint64_t seed);

// Full training protocol: epoch-0 sphere initialization, per-epoch radius
// EMA, center recompute every k epochs, validation-based best-model
// selection. anomalous_classes drive validation label projection; when a
// validation cloud carries no labels, selection falls back to lowest
// total loss. Progress lines go to *progress when non-null.
TrainResult fit(const std::vector<Sample>& samples, const GridConfig& grid,
                const std::vector<int>& anomalous_classes, const TrainConfig& cfg,
                std::ostream* progress = nullptr);

// Eval-mode forward of one scan: latents and regression scores for every
// occupied cell.
struct ScanInference {
  std::vector<int> cell_flat;   // i * width + j per occupied cell
  std::vector<double> latents;  // [n_cells, latent_dim]
  std::vector<double> scores;   // [n_cells]
};
ScanInference infer_scan(TrainedModel& model, const PointCloud& cloud, const GridConfig& grid);

}  // namespace travest
