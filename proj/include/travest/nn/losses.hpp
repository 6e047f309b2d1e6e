#pragma once

#include <string>
#include <vector>

#include "travest/nn/tensor.hpp"

namespace travest::nn {

// How unlabeled latents participate in training. The first three are the
// ablation rows of the loss study; normal_anomalous is the full method.
enum class LossMode { none, all_unlabeled, anomalous_only, normal_anomalous };

inline LossMode parse_loss_mode(const std::string& s) {
  if (s == "none") return LossMode::none;
  if (s == "all-unlabeled" || s == "all_unlabeled") return LossMode::all_unlabeled;
  if (s == "anomalous-only" || s == "anomalous_only") return LossMode::anomalous_only;
  if (s == "full" || s == "normal-anomalous" || s == "normal_anomalous")
    return LossMode::normal_anomalous;
  throw ConfigError("unknown loss mode: " + s);
}

inline std::string loss_mode_name(LossMode m) {
  switch (m) {
    case LossMode::none: return "none";
    case LossMode::all_unlabeled: return "all-unlabeled";
    case LossMode::anomalous_only: return "anomalous-only";
    case LossMode::normal_anomalous: return "full";
  }
  return "full";
}

struct LossWeights {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double lambda3 = 20.0;
  double zeta = 1e-6;

  void check() const {
    if (lambda1 < 0.0 || lambda2 < 0.0 || lambda3 < 0.0)
      throw ConfigError("loss weights must be non-negative");
    if (!(zeta > 0.0)) throw ConfigError("zeta must be positive");
  }
};

struct LossReport {
  double anomaly = 0.0;
  double recon = 0.0;
  double regression = 0.0;
  double total = 0.0;
};

template <typename T>
bool has_rows(const NodePtr<T>& n) {
  return n && n->rows() > 0;
}

// Squared distance of each latent row to a fixed center.
template <typename T>
NodePtr<T> sq_dist_to_center(const NodePtr<T>& z, const std::vector<T>& center) {
  if (z->cols() != static_cast<int>(center.size()))
    throw ShapeMismatch("sq_dist_to_center: center dim mismatch");
  auto c = constant<T>({static_cast<int>(center.size())}, center);
  auto diff = sub_rowvec(z, c);
  return row_sum(mul(diff, diff));
}

// Mean squared center distance of positives and normals, plus a mean
// inverse-squared-distance push on anomalous latents. Empty normal or
// anomalous sets contribute zero; positives are mandatory.
template <typename T>
NodePtr<T> anomaly_loss(const NodePtr<T>& z_p, const NodePtr<T>& z_n, const NodePtr<T>& z_a,
                        const std::vector<T>& center, T zeta) {
  if (!has_rows(z_p)) throw EmptyPositiveSet("anomaly_loss: no positive latents");
  auto loss = mean_all(sq_dist_to_center(z_p, center));
  if (has_rows(z_n)) loss = add(loss, mean_all(sq_dist_to_center(z_n, center)));
  if (has_rows(z_a)) loss = add(loss, mean_all(recip_shift(sq_dist_to_center(z_a, center), zeta)));
  return loss;
}

// Mean squared error between reconstructed and pooled cell features over
// the positive set.
template <typename T>
NodePtr<T> recon_loss(const NodePtr<T>& u_p, const NodePtr<T>& q_p) {
  if (!u_p || !q_p || u_p->shape != q_p->shape)
    throw SizeMismatch("recon_loss: feature sets must align");
  if (u_p->rows() < 1) throw SizeMismatch("recon_loss: empty positive set");
  auto diff = sub(u_p, q_p);
  return mean_all(row_sum(mul(diff, diff)));
}

// Mean squared error of positive scores against their supervision targets
// plus a mean squared pull of anomalous scores toward zero.
template <typename T>
NodePtr<T> regression_loss(const NodePtr<T>& t_p, const std::vector<T>& targets,
                           const NodePtr<T>& t_a) {
  if (!t_p || t_p->rows() != static_cast<int>(targets.size()) || targets.empty())
    throw SizeMismatch("regression_loss: scores and targets must align");
  auto tgt = constant<T>(t_p->shape, targets);
  auto diff = sub(t_p, tgt);
  auto loss = mean_all(mul(diff, diff));
  if (has_rows(t_a)) loss = add(loss, mean_all(mul(t_a, t_a)));
  return loss;
}

template <typename T>
struct LossBundle {
  NodePtr<T> anomaly;
  NodePtr<T> recon;
  NodePtr<T> regression;
  NodePtr<T> total;

  LossReport report(const LossWeights& w) const {
    LossReport r;
    r.anomaly = static_cast<double>(anomaly->value[0]);
    r.recon = static_cast<double>(recon->value[0]);
    r.regression = static_cast<double>(regression->value[0]);
    r.total = w.lambda1 * r.anomaly + w.lambda2 * r.recon + w.lambda3 * r.regression;
    return r;
  }
};

template <typename T>
LossBundle<T> total_loss(const NodePtr<T>& anomaly, const NodePtr<T>& recon,
                         const NodePtr<T>& regression, const LossWeights& w) {
  w.check();
  LossBundle<T> b;
  b.anomaly = anomaly;
  b.recon = recon;
  b.regression = regression;
  b.total = add(add(scale(anomaly, static_cast<T>(w.lambda1)),
                    scale(recon, static_cast<T>(w.lambda2))),
                scale(regression, static_cast<T>(w.lambda3)));
  return b;
}

}  // namespace travest::nn
