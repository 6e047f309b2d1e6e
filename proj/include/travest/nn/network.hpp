#pragma once

#include <string>
#include <vector>

#include "travest/nn/layers.hpp"
#include "travest/voxelize.hpp"

namespace travest::nn {

struct NetworkConfig {
  int point_feat_dim = 7;
  int cell_feat_dim = 32;
  int latent_dim = 8;
  int encoder_hidden = 16;
  int recon_hidden = 16;
  double dropout_rate = 0.1;
  int backbone_convs = 2;

  void check() const {
    if (point_feat_dim < 1 || cell_feat_dim < 1 || latent_dim < 1 || encoder_hidden < 1 ||
        recon_hidden < 1 || backbone_convs < 0)
      throw ConfigError("network config: dims must be >= 1");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
      throw ConfigError("network config: dropout_rate must lie in [0,1)");
  }
};

// Parameter groups: 1 = BEV extractor, 2 = encoder alpha, 3 = regression
// beta, 4 = reconstruction h.
template <typename T>
struct ParamRef {
  std::string name;
  int group = 0;
  NodePtr<T> node;
};

// Valid pillar rows of one or more scans packed densely for the shared
// per-point layers, with bookkeeping to scatter pooled cell features back
// onto the [B,H,W,C] map.
template <typename T>
struct PackedPillars {
  std::vector<T> point_feats;  // [n_points, point_feat_dim]
  std::vector<int> segments;   // row -> occupied-cell slot
  std::vector<int> cell_flat;  // slot -> b*H*W + i*W + j
  int n_points = 0;
  int n_cells = 0;
  int batch = 0;
  int height = 0;
  int width = 0;
};

template <typename T>
PackedPillars<T> pack_pillars(const std::vector<const PillarTensor*>& scans) {
  PackedPillars<T> out;
  if (scans.empty()) return out;
  out.batch = static_cast<int>(scans.size());
  out.height = scans[0]->grid.height_cells;
  out.width = scans[0]->grid.width_cells;
  const std::size_t plane = static_cast<std::size_t>(out.height) * out.width;
  for (int b = 0; b < out.batch; ++b) {
    const PillarTensor& t = *scans[static_cast<std::size_t>(b)];
    if (t.grid.height_cells != out.height || t.grid.width_cells != out.width)
      throw ShapeMismatch("pack_pillars: scans disagree on grid dims");
    for (int i = 0; i < out.height; ++i) {
      for (int j = 0; j < out.width; ++j) {
        const int count = t.count_at(i, j);
        if (count == 0) continue;
        const int slot = out.n_cells++;
        out.cell_flat.push_back(b * static_cast<int>(plane) + i * out.width + j);
        for (int m = 0; m < count; ++m) {
          const double* row = t.features.data() + t.row_offset(i, j, m);
          for (int c = 0; c < PillarTensor::kChannels; ++c)
            out.point_feats.push_back(static_cast<T>(row[c]));
          out.segments.push_back(slot);
          ++out.n_points;
        }
      }
    }
  }
  return out;
}

template <typename T>
struct HeadOut {
  NodePtr<T> z;  // [N, latent_dim]
  NodePtr<T> t;  // [N, 1], sigmoid scores
  NodePtr<T> u;  // [N, cell_feat_dim]
};

template <typename T>
struct TravNetwork {
  NetworkConfig cfg;
  // omega_1: BEV extractor
  Linear<T> point_linear;
  BatchNorm<T> point_bn;
  std::vector<Conv3x3Layer<T>> convs;
  std::vector<BatchNorm<T>> conv_bns;
  // omega_2: encoder alpha
  Linear<T> enc_hidden;
  BatchNorm<T> enc_bn;
  Linear<T> enc_out;
  // omega_3: regression beta
  Linear<T> reg;
  // omega_4: reconstruction h
  Linear<T> rec_hidden;
  BatchNorm<T> rec_bn;
  Linear<T> rec_out;

  static TravNetwork init(const NetworkConfig& cfg, std::uint64_t seed) {
    cfg.check();
    TravNetwork net;
    net.cfg = cfg;
    Rng rng(mix_seed(seed, 0x6e657477ULL));  // distinct stream per concern
    net.point_linear = Linear<T>::init(cfg.point_feat_dim, cfg.cell_feat_dim, rng);
    net.point_bn = BatchNorm<T>::init(cfg.cell_feat_dim);
    for (int i = 0; i < cfg.backbone_convs; ++i) {
      net.convs.push_back(Conv3x3Layer<T>::init(cfg.cell_feat_dim, cfg.cell_feat_dim, rng));
      net.conv_bns.push_back(BatchNorm<T>::init(cfg.cell_feat_dim));
    }
    net.enc_hidden = Linear<T>::init(cfg.cell_feat_dim, cfg.encoder_hidden, rng);
    net.enc_bn = BatchNorm<T>::init(cfg.encoder_hidden);
    net.enc_out = Linear<T>::init(cfg.encoder_hidden, cfg.latent_dim, rng);
    net.reg = Linear<T>::init(cfg.latent_dim, 1, rng);
    net.rec_hidden = Linear<T>::init(cfg.latent_dim, cfg.recon_hidden, rng);
    net.rec_bn = BatchNorm<T>::init(cfg.recon_hidden);
    net.rec_out = Linear<T>::init(cfg.recon_hidden, cfg.cell_feat_dim, rng);
    return net;
  }

  std::vector<ParamRef<T>> params() {
    std::vector<ParamRef<T>> out;
    out.push_back({"bev.point_linear.weight", 1, point_linear.weight});
    out.push_back({"bev.point_linear.bias", 1, point_linear.bias});
    out.push_back({"bev.point_bn.gamma", 1, point_bn.gamma});
    out.push_back({"bev.point_bn.beta", 1, point_bn.beta});
    for (std::size_t i = 0; i < convs.size(); ++i) {
      const std::string p = "bev.conv" + std::to_string(i);
      out.push_back({p + ".weight", 1, convs[i].weight});
      out.push_back({p + ".bn.gamma", 1, conv_bns[i].gamma});
      out.push_back({p + ".bn.beta", 1, conv_bns[i].beta});
    }
    out.push_back({"alpha.hidden.weight", 2, enc_hidden.weight});
    out.push_back({"alpha.hidden.bias", 2, enc_hidden.bias});
    out.push_back({"alpha.bn.gamma", 2, enc_bn.gamma});
    out.push_back({"alpha.bn.beta", 2, enc_bn.beta});
    out.push_back({"alpha.out.weight", 2, enc_out.weight});
    out.push_back({"alpha.out.bias", 2, enc_out.bias});
    out.push_back({"beta.weight", 3, reg.weight});
    out.push_back({"beta.bias", 3, reg.bias});
    out.push_back({"h.hidden.weight", 4, rec_hidden.weight});
    out.push_back({"h.hidden.bias", 4, rec_hidden.bias});
    out.push_back({"h.bn.gamma", 4, rec_bn.gamma});
    out.push_back({"h.bn.beta", 4, rec_bn.beta});
    out.push_back({"h.out.weight", 4, rec_out.weight});
    out.push_back({"h.out.bias", 4, rec_out.bias});
    return out;
  }

  // Batch-norm running statistics in a stable named order, for snapshots
  // and checkpoints.
  std::vector<std::pair<std::string, std::vector<T>*>> stat_refs() {
    std::vector<std::pair<std::string, std::vector<T>*>> out;
    out.emplace_back("bev.point_bn.running_mean", &point_bn.running_mean);
    out.emplace_back("bev.point_bn.running_var", &point_bn.running_var);
    for (std::size_t i = 0; i < conv_bns.size(); ++i) {
      const std::string p = "bev.conv" + std::to_string(i) + ".bn";
      out.emplace_back(p + ".running_mean", &conv_bns[i].running_mean);
      out.emplace_back(p + ".running_var", &conv_bns[i].running_var);
    }
    out.emplace_back("alpha.bn.running_mean", &enc_bn.running_mean);
    out.emplace_back("alpha.bn.running_var", &enc_bn.running_var);
    out.emplace_back("h.bn.running_mean", &rec_bn.running_mean);
    out.emplace_back("h.bn.running_var", &rec_bn.running_var);
    return out;
  }

  // Per-point shared linear + BN + ReLU, masked max-pool per pillar (only
  // valid rows are packed, so padding can never leak in), scatter onto the
  // dense map, then the 3x3 conv backbone. Returns the [B,H,W,C] map.
  NodePtr<T> encode_pillars(const PackedPillars<T>& packed, bool training) {
    const std::size_t plane = static_cast<std::size_t>(packed.height) * packed.width;
    const std::vector<int> map_shape = {packed.batch, packed.height, packed.width,
                                        cfg.cell_feat_dim};
    NodePtr<T> map;
    if (packed.n_points == 0) {
      map = constant<T>(map_shape,
                        std::vector<T>(static_cast<std::size_t>(packed.batch) * plane *
                                           static_cast<std::size_t>(cfg.cell_feat_dim),
                                       T(0)));
    } else {
      auto x = constant<T>({packed.n_points, cfg.point_feat_dim}, packed.point_feats);
      auto h = relu(point_bn(point_linear(x), training));
      auto pooled = segment_max(h, packed.segments, packed.n_cells);
      map = scatter_rows(pooled, packed.cell_flat, map_shape);
    }
    for (std::size_t i = 0; i < convs.size(); ++i) {
      map = relu(conv_bns[i](convs[i](map), training));
    }
    return map;
  }

  // Occupied-cell feature vectors from an encoded map.
  NodePtr<T> gather_cells(const NodePtr<T>& map, const std::vector<int>& cell_flat) const {
    return gather_rows(map, cell_flat);
  }

  HeadOut<T> head(const NodePtr<T>& q, bool training, Rng& dropout_rng) {
    if (q->cols() != cfg.cell_feat_dim) throw ShapeMismatch("head: expected cell features");
    HeadOut<T> out;
    auto hidden = relu(dropout(enc_bn(enc_hidden(q), training), cfg.dropout_rate, training, dropout_rng));
    out.z = enc_out(hidden);
    out.t = sigmoid(reg(out.z));
    auto rhidden =
        relu(dropout(rec_bn(rec_hidden(out.z), training), cfg.dropout_rate, training, dropout_rng));
    out.u = rec_out(rhidden);
    return out;
  }
};

}  // namespace travest::nn
