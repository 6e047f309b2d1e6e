#include "travest/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "travest/errors.hpp"

namespace travest {

namespace {

constexpr char kMagic[4] = {'G', 'S', 'N', 'N'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void put_vec(std::ofstream& os, const std::vector<T>& v) {
  put(os, static_cast<std::uint32_t>(v.size()));
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(T)));
}

void put_str(std::ofstream& os, const std::string& s) {
  put(os, static_cast<std::uint16_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
void get(std::ifstream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
}

template <typename T>
std::vector<T> get_vec(std::ifstream& is) {
  std::uint32_t n = 0;
  get(is, n);
  std::vector<T> v(n);
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
  return v;
}

std::string get_str(std::ifstream& is) {
  std::uint16_t n = 0;
  get(is, n);
  std::string s(n, '\0');
  is.read(s.data(), n);
  return s;
}

}  // namespace

void save_checkpoint(Checkpoint& ck, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("save_checkpoint: cannot open " + path);
  os.write(kMagic, 4);
  put(os, kVersion);

  const auto& net_cfg = ck.model.net.cfg;
  put(os, static_cast<std::int32_t>(net_cfg.point_feat_dim));
  put(os, static_cast<std::int32_t>(net_cfg.cell_feat_dim));
  put(os, static_cast<std::int32_t>(net_cfg.latent_dim));
  put(os, static_cast<std::int32_t>(net_cfg.encoder_hidden));
  put(os, static_cast<std::int32_t>(net_cfg.recon_hidden));
  put(os, static_cast<std::int32_t>(net_cfg.backbone_convs));
  put(os, net_cfg.dropout_rate);

  const auto& g = ck.model.grid;
  put(os, static_cast<std::int32_t>(g.height_cells));
  put(os, static_cast<std::int32_t>(g.width_cells));
  put(os, static_cast<std::int32_t>(g.max_points));
  put(os, g.resolution);
  put(os, g.origin_x);
  put(os, g.origin_y);
  put(os, g.z_min);
  put(os, g.z_max);

  const auto& tc = ck.model.train_cfg;
  put(os, tc.lr);
  put(os, static_cast<std::int32_t>(tc.batch_size));
  put(os, static_cast<std::int32_t>(tc.epochs));
  put(os, static_cast<std::int32_t>(tc.k));
  put(os, tc.epsilon);
  put(os, tc.weights.lambda1);
  put(os, tc.weights.lambda2);
  put(os, tc.weights.lambda3);
  put(os, tc.weights.zeta);
  put(os, static_cast<std::uint8_t>(tc.loss_mode));
  put(os, tc.augment.flip_prob);
  put(os, tc.augment.yaw_min);
  put(os, tc.augment.yaw_max);
  put(os, static_cast<std::uint8_t>(tc.augment.pitch_enabled ? 1 : 0));
  put(os, tc.augment.pitch_slope_gate);
  put(os, static_cast<std::int32_t>(tc.augment.ransac.iterations));
  put(os, tc.augment.ransac.inlier_dist);
  put(os, tc.augment.ransac.min_inlier_frac);
  put(os, static_cast<std::uint64_t>(tc.augment.ransac.seed));
  put(os, static_cast<std::uint64_t>(tc.seed));
  put(os, tc.train_frac);
  put(os, tc.val_frac);

  put(os, static_cast<std::int32_t>(ck.model.best_epoch));
  put(os, ck.model.best_val_metric);

  auto params = ck.model.net.params();
  put(os, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    put_str(os, p.name);
    put(os, static_cast<std::uint8_t>(p.group));
    put(os, static_cast<std::uint32_t>(p.node->shape.size()));
    for (int d : p.node->shape) put(os, static_cast<std::int32_t>(d));
    put_vec(os, p.node->value);
  }

  auto stats = ck.model.net.stat_refs();
  put(os, static_cast<std::uint32_t>(stats.size()));
  for (const auto& s : stats) {
    put_str(os, s.first);
    put_vec(os, *s.second);
  }

  const auto& sp = ck.model.sphere;
  put_vec(os, sp.center);
  put(os, sp.radius);
  put(os, sp.momentum);
  put(os, static_cast<std::int32_t>(sp.update_period));

  const bool has_adam = !ck.adam.m.empty();
  put(os, static_cast<std::uint8_t>(has_adam ? 1 : 0));
  if (has_adam) {
    put(os, static_cast<std::int64_t>(ck.adam.step_count));
    put(os, ck.adam.lr);
    put(os, ck.adam.beta1);
    put(os, ck.adam.beta2);
    put(os, ck.adam.eps);
    for (std::size_t p = 0; p < params.size(); ++p) {
      put_vec(os, ck.adam.m[p]);
      put_vec(os, ck.adam.v[p]);
    }
  }
  if (!os) throw IoError("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("load_checkpoint: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw IoError("load_checkpoint: bad magic in " + path);
  std::uint32_t version = 0;
  get(is, version);
  if (version != kVersion)
    throw IoError("load_checkpoint: unsupported checkpoint version " + std::to_string(version) +
                  " in " + path);

  Checkpoint ck;
  nn::NetworkConfig net_cfg;
  std::int32_t i32 = 0;
  get(is, i32); net_cfg.point_feat_dim = i32;
  get(is, i32); net_cfg.cell_feat_dim = i32;
  get(is, i32); net_cfg.latent_dim = i32;
  get(is, i32); net_cfg.encoder_hidden = i32;
  get(is, i32); net_cfg.recon_hidden = i32;
  get(is, i32); net_cfg.backbone_convs = i32;
  get(is, net_cfg.dropout_rate);

  auto& g = ck.model.grid;
  get(is, i32); g.height_cells = i32;
  get(is, i32); g.width_cells = i32;
  get(is, i32); g.max_points = i32;
  get(is, g.resolution);
  get(is, g.origin_x);
  get(is, g.origin_y);
  get(is, g.z_min);
  get(is, g.z_max);

  auto& tc = ck.model.train_cfg;
  get(is, tc.lr);
  get(is, i32); tc.batch_size = i32;
  get(is, i32); tc.epochs = i32;
  get(is, i32); tc.k = i32;
  get(is, tc.epsilon);
  get(is, tc.weights.lambda1);
  get(is, tc.weights.lambda2);
  get(is, tc.weights.lambda3);
  get(is, tc.weights.zeta);
  std::uint8_t u8 = 0;
  get(is, u8); tc.loss_mode = static_cast<nn::LossMode>(u8);
  get(is, tc.augment.flip_prob);
  get(is, tc.augment.yaw_min);
  get(is, tc.augment.yaw_max);
  get(is, u8); tc.augment.pitch_enabled = (u8 != 0);
  get(is, tc.augment.pitch_slope_gate);
  get(is, i32); tc.augment.ransac.iterations = i32;
  get(is, tc.augment.ransac.inlier_dist);
  get(is, tc.augment.ransac.min_inlier_frac);
  std::uint64_t u64 = 0;
  get(is, u64); tc.augment.ransac.seed = u64;
  get(is, u64); tc.seed = u64;
  get(is, tc.train_frac);
  get(is, tc.val_frac);

  get(is, i32); ck.model.best_epoch = i32;
  get(is, ck.model.best_val_metric);
  tc.net = net_cfg;

  ck.model.net = nn::TravNetwork<float>::init(net_cfg, 0);
  auto params = ck.model.net.params();
  std::uint32_t n_params = 0;
  get(is, n_params);
  if (n_params != params.size())
    throw IoError("load_checkpoint: parameter count mismatch in " + path);
  for (auto& p : params) {
    const std::string name = get_str(is);
    if (name != p.name) throw IoError("load_checkpoint: unexpected parameter " + name);
    get(is, u8);
    std::uint32_t ndims = 0;
    get(is, ndims);
    std::vector<int> shape(ndims);
    for (auto& d : shape) { get(is, i32); d = i32; }
    if (shape != p.node->shape) throw IoError("load_checkpoint: shape mismatch for " + name);
    p.node->value = get_vec<float>(is);
    if (p.node->value.size() != nn::numel(shape))
      throw IoError("load_checkpoint: truncated data for " + name);
  }

  auto stats = ck.model.net.stat_refs();
  std::uint32_t n_stats = 0;
  get(is, n_stats);
  if (n_stats != stats.size()) throw IoError("load_checkpoint: stat count mismatch in " + path);
  for (auto& s : stats) {
    const std::string name = get_str(is);
    if (name != s.first) throw IoError("load_checkpoint: unexpected stat " + name);
    *s.second = get_vec<float>(is);
  }

  auto& sp = ck.model.sphere;
  sp.center = get_vec<double>(is);
  get(is, sp.radius);
  get(is, sp.momentum);
  get(is, i32); sp.update_period = i32;

  get(is, u8);
  if (u8) {
    std::int64_t steps = 0;
    get(is, steps);
    ck.adam.step_count = static_cast<long>(steps);
    get(is, ck.adam.lr);
    get(is, ck.adam.beta1);
    get(is, ck.adam.beta2);
    get(is, ck.adam.eps);
    ck.adam.m.resize(params.size());
    ck.adam.v.resize(params.size());
    for (std::size_t p = 0; p < params.size(); ++p) {
      ck.adam.m[p] = get_vec<float>(is);
      ck.adam.v[p] = get_vec<float>(is);
    }
  }
  if (!is) throw IoError("load_checkpoint: truncated file " + path);
  return ck;
}

}  // namespace travest
