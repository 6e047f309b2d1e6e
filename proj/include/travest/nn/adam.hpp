#pragma once

#include <cmath>
#include <vector>

#include "travest/nn/network.hpp"

namespace travest::nn {

// Standard Adam with bias correction. Gradients must be populated by a
// preceding backward pass; they are cleared after the update so stale
// gradients can never leak into the next step.
template <typename T>
struct Adam {
  T lr = T(5e-4);
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T eps = T(1e-8);
  long step_count = 0;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;

  void step(std::vector<ParamRef<T>>& params) {
    if (m.empty()) {
      m.resize(params.size());
      v.resize(params.size());
      for (std::size_t p = 0; p < params.size(); ++p) {
        m[p].assign(params[p].node->size(), T(0));
        v[p].assign(params[p].node->size(), T(0));
      }
    }
    if (m.size() != params.size()) throw ShapeMismatch("adam: parameter list changed size");
    ++step_count;
    const T c1 = T(1) - static_cast<T>(std::pow(static_cast<double>(beta1), step_count));
    const T c2 = T(1) - static_cast<T>(std::pow(static_cast<double>(beta2), step_count));
    for (std::size_t p = 0; p < params.size(); ++p) {
      auto& node = *params[p].node;
      if (node.grad.size() != node.value.size())
        throw MissingGrad("adam: no gradient for " + params[p].name);
      for (std::size_t i = 0; i < node.value.size(); ++i) {
        const T g = node.grad[i];
        m[p][i] = beta1 * m[p][i] + (T(1) - beta1) * g;
        v[p][i] = beta2 * v[p][i] + (T(1) - beta2) * g * g;
        const T mhat = m[p][i] / c1;
        const T vhat = v[p][i] / c2;
        node.value[i] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
      node.grad.clear();
    }
  }
};

}  // namespace travest::nn
