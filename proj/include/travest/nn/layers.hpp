#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "travest/nn/tensor.hpp"

namespace travest::nn {

// W ~ U(-1/sqrt(fan_in), +1/sqrt(fan_in)), biases zero.
template <typename T>
std::vector<T> uniform_init(std::size_t count, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<T> out(count);
  for (auto& v : out) v = static_cast<T>(rng.uniform(-bound, bound));
  return out;
}

template <typename T>
struct Linear {
  NodePtr<T> weight;  // [in, out]
  NodePtr<T> bias;    // [out]

  static Linear init(int in, int out, Rng& rng) {
    Linear l;
    l.weight = make_param<T>({in, out}, uniform_init<T>(static_cast<std::size_t>(in) * out, in, rng));
    l.bias = make_param<T>({out}, std::vector<T>(static_cast<std::size_t>(out), T(0)));
    return l;
  }

  NodePtr<T> operator()(const NodePtr<T>& x) const { return add_rowvec(matmul(x, weight), bias); }
};

// Batch normalization over the trailing feature dimension of any tensor
// (conv maps [B,H,W,C] normalize per channel over B*H*W). Training mode
// uses population batch statistics and folds them into the running
// estimates; eval mode applies the running estimates.
template <typename T>
struct BatchNorm {
  NodePtr<T> gamma;  // [f]
  NodePtr<T> beta;   // [f]
  std::vector<T> running_mean;
  std::vector<T> running_var;
  T momentum = T(0.9);
  T eps = T(1e-5);

  static BatchNorm init(int f) {
    BatchNorm bn;
    bn.gamma = make_param<T>({f}, std::vector<T>(static_cast<std::size_t>(f), T(1)));
    bn.beta = make_param<T>({f}, std::vector<T>(static_cast<std::size_t>(f), T(0)));
    bn.running_mean.assign(static_cast<std::size_t>(f), T(0));
    bn.running_var.assign(static_cast<std::size_t>(f), T(1));
    return bn;
  }

  NodePtr<T> operator()(const NodePtr<T>& x, bool training) {
    const int f = x->cols();
    if (f != static_cast<int>(gamma->size())) throw ShapeMismatch("batchnorm: feature dim mismatch");
    const int rows = x->rows();
    if (rows == 0) return x;

    std::vector<T> mean(static_cast<std::size_t>(f)), inv_std(static_cast<std::size_t>(f));
    if (training) {
      std::vector<T> var(static_cast<std::size_t>(f), T(0));
      std::fill(mean.begin(), mean.end(), T(0));
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < f; ++c) mean[static_cast<std::size_t>(c)] += x->value[static_cast<std::size_t>(r) * f + c];
      for (auto& m : mean) m /= static_cast<T>(rows);
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < f; ++c) {
          const T d = x->value[static_cast<std::size_t>(r) * f + c] - mean[static_cast<std::size_t>(c)];
          var[static_cast<std::size_t>(c)] += d * d;
        }
      for (auto& v : var) v /= static_cast<T>(rows);
      for (int c = 0; c < f; ++c) {
        inv_std[static_cast<std::size_t>(c)] = T(1) / std::sqrt(var[static_cast<std::size_t>(c)] + eps);
        running_mean[static_cast<std::size_t>(c)] =
            momentum * running_mean[static_cast<std::size_t>(c)] + (T(1) - momentum) * mean[static_cast<std::size_t>(c)];
        running_var[static_cast<std::size_t>(c)] =
            momentum * running_var[static_cast<std::size_t>(c)] + (T(1) - momentum) * var[static_cast<std::size_t>(c)];
      }
    } else {
      for (int c = 0; c < f; ++c) {
        mean[static_cast<std::size_t>(c)] = running_mean[static_cast<std::size_t>(c)];
        inv_std[static_cast<std::size_t>(c)] = T(1) / std::sqrt(running_var[static_cast<std::size_t>(c)] + eps);
      }
    }

    auto xhat = std::make_shared<std::vector<T>>(x->size());
    std::vector<T> out(x->size());
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < f; ++c) {
        const std::size_t i = static_cast<std::size_t>(r) * f + c;
        (*xhat)[i] = (x->value[i] - mean[static_cast<std::size_t>(c)]) * inv_std[static_cast<std::size_t>(c)];
        out[i] = gamma->value[static_cast<std::size_t>(c)] * (*xhat)[i] + beta->value[static_cast<std::size_t>(c)];
      }

    auto istd = std::make_shared<std::vector<T>>(std::move(inv_std));
    return detail::result_of<T>(
        x->shape, std::move(out), {x, gamma, beta},
        [xhat, istd, rows, f, training](Node<T>& n) {
          auto& gx = *n.inputs[0];
          auto& ggamma = *n.inputs[1];
          auto& gbeta = *n.inputs[2];
          // Per-feature reductions of dy and dy*xhat serve every branch.
          std::vector<T> sum_dy(static_cast<std::size_t>(f), T(0));
          std::vector<T> sum_dy_xhat(static_cast<std::size_t>(f), T(0));
          for (int r = 0; r < rows; ++r)
            for (int c = 0; c < f; ++c) {
              const std::size_t i = static_cast<std::size_t>(r) * f + c;
              sum_dy[static_cast<std::size_t>(c)] += n.grad[i];
              sum_dy_xhat[static_cast<std::size_t>(c)] += n.grad[i] * (*xhat)[i];
            }
          if (gbeta.requires_grad) {
            gbeta.ensure_grad();
            for (int c = 0; c < f; ++c) gbeta.grad[static_cast<std::size_t>(c)] += sum_dy[static_cast<std::size_t>(c)];
          }
          if (ggamma.requires_grad) {
            ggamma.ensure_grad();
            for (int c = 0; c < f; ++c)
              ggamma.grad[static_cast<std::size_t>(c)] += sum_dy_xhat[static_cast<std::size_t>(c)];
          }
          if (gx.requires_grad) {
            gx.ensure_grad();
            const T inv_n = T(1) / static_cast<T>(rows);
            for (int r = 0; r < rows; ++r)
              for (int c = 0; c < f; ++c) {
                const std::size_t i = static_cast<std::size_t>(r) * f + c;
                const T gam = ggamma.value[static_cast<std::size_t>(c)];
                const T is = (*istd)[static_cast<std::size_t>(c)];
                if (training) {
                  // Batch statistics depend on x, so the normalization
                  // couples every row of the same feature.
                  gx.grad[i] += gam * is * inv_n *
                                (static_cast<T>(rows) * n.grad[i] - sum_dy[static_cast<std::size_t>(c)] -
                                 (*xhat)[i] * sum_dy_xhat[static_cast<std::size_t>(c)]);
                } else {
                  gx.grad[i] += gam * is * n.grad[i];
                }
              }
          }
        });
  }
};

template <typename T>
struct Conv3x3Layer {
  NodePtr<T> weight;  // [Cout, Cin*9]
  int in_ch = 0, out_ch = 0;

  static Conv3x3Layer init(int in_ch, int out_ch, Rng& rng) {
    Conv3x3Layer l;
    l.in_ch = in_ch;
    l.out_ch = out_ch;
    l.weight = make_param<T>({out_ch, in_ch * 9},
                             uniform_init<T>(static_cast<std::size_t>(out_ch) * in_ch * 9, in_ch * 9, rng));
    return l;
  }

  NodePtr<T> operator()(const NodePtr<T>& x) const { return conv3x3(x, weight); }
};

}  // namespace travest::nn
