#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <unordered_set>
#include <vector>

#include "travest/errors.hpp"
#include "travest/rng.hpp"

// Reverse-mode autodiff over dense row-major tensors, templated on the
// scalar so training runs in float while gradient tests instantiate
// double. Graphs are ephemeral: parameters are long-lived leaf nodes and
// every forward pass builds fresh interior nodes on top of them.
namespace travest::nn {

template <typename T>
struct Node;

template <typename T>
using NodePtr = std::shared_ptr<Node<T>>;

inline std::size_t numel(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  return n;
}

template <typename T>
struct Node {
  std::vector<int> shape;
  std::vector<T> value;
  std::vector<T> grad;  // sized lazily during backward
  bool requires_grad = false;
  std::vector<NodePtr<T>> inputs;
  std::function<void(Node<T>&)> backprop;  // scatters this->grad into inputs

  std::size_t size() const { return value.size(); }
  int rows() const {
    return shape.empty() ? 0 : static_cast<int>(size()) / shape.back();
  }
  int cols() const { return shape.empty() ? 0 : shape.back(); }
  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
  }
};

template <typename T>
using MatMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

template <typename T>
NodePtr<T> make_node(std::vector<int> shape, std::vector<T> value, bool requires_grad = false) {
  if (numel(shape) != value.size()) throw ShapeMismatch("make_node: data does not match shape");
  auto n = std::make_shared<Node<T>>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  return n;
}

template <typename T>
NodePtr<T> make_param(std::vector<int> shape, std::vector<T> value) {
  return make_node<T>(std::move(shape), std::move(value), true);
}

template <typename T>
NodePtr<T> constant(std::vector<int> shape, std::vector<T> value) {
  return make_node<T>(std::move(shape), std::move(value), false);
}

namespace detail {

template <typename T>
NodePtr<T> result_of(std::vector<int> shape, std::vector<T> value,
                     std::vector<NodePtr<T>> inputs, std::function<void(Node<T>&)> backprop) {
  bool needs = false;
  for (const auto& in : inputs) needs = needs || in->requires_grad;
  auto n = make_node<T>(std::move(shape), std::move(value), needs);
  if (needs) {
    n->inputs = std::move(inputs);
    n->backprop = std::move(backprop);
  }
  return n;
}

template <typename T>
void require_same_shape(const NodePtr<T>& a, const NodePtr<T>& b, const char* op) {
  if (a->shape != b->shape) throw ShapeMismatch(std::string(op) + ": shape mismatch");
}

}  // namespace detail

template <typename T>
NodePtr<T> add(const NodePtr<T>& a, const NodePtr<T>& b) {
  detail::require_same_shape(a, b, "add");
  std::vector<T> out(a->size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->value[i] + b->value[i];
  return detail::result_of<T>(a->shape, std::move(out), {a, b}, [](Node<T>& n) {
    auto& ga = *n.inputs[0];
    auto& gb = *n.inputs[1];
    if (ga.requires_grad) {
      ga.ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i) ga.grad[i] += n.grad[i];
    }
    if (gb.requires_grad) {
      gb.ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i) gb.grad[i] += n.grad[i];
    }
  });
}

template <typename T>
NodePtr<T> sub(const NodePtr<T>& a, const NodePtr<T>& b) {
  detail::require_same_shape(a, b, "sub");
  std::vector<T> out(a->size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->value[i] - b->value[i];
  return detail::result_of<T>(a->shape, std::move(out), {a, b}, [](Node<T>& n) {
    auto& ga = *n.inputs[0];
    auto& gb = *n.inputs[1];
    if (ga.requires_grad) {
      ga.ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i) ga.grad[i] += n.grad[i];
    }
    if (gb.requires_grad) {
      gb.ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i) gb.grad[i] -= n.grad[i];
    }
  });
}

template <typename T>
NodePtr<T> mul(const NodePtr<T>& a, const NodePtr<T>& b) {
  detail::require_same_shape(a, b, "mul");
  std::vector<T> out(a->size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->value[i] * b->value[i];
  return detail::result_of<T>(a->shape, std::move(out), {a, b}, [](Node<T>& n) {
    auto& ga = *n.inputs[0];
    auto& gb = *n.inputs[1];
    if (ga.requires_grad) {
      ga.ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i) ga.grad[i] += n.grad[i] * gb.value[i];
    }
    if (gb.requires_grad) {
      gb.ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i) gb.grad[i] += n.grad[i] * ga.value[i];
    }
  });
}

template <typename T>
NodePtr<T> scale(const NodePtr<T>& a, T c) {
  std::vector<T> out(a->size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * a->value[i];
  return detail::result_of<T>(a->shape, std::move(out), {a}, [c](Node<T>& n) {
    auto& ga = *n.inputs[0];
    ga.ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) ga.grad[i] += c * n.grad[i];
  });
}

template <typename T>
NodePtr<T> add_scalar(const NodePtr<T>& a, T c) {
  std::vector<T> out(a->size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->value[i] + c;
  return detail::result_of<T>(a->shape, std::move(out), {a}, [](Node<T>& n) {
    auto& ga = *n.inputs[0];
    ga.ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) ga.grad[i] += n.grad[i];
  });
}

// a: [n,k], b: [k,m] -> [n,m]
template <typename T>
NodePtr<T> matmul(const NodePtr<T>& a, const NodePtr<T>& b) {
  if (a->shape.size() != 2 || b->shape.size() != 2 || a->shape[1] != b->shape[0])
    throw ShapeMismatch("matmul: incompatible operand shapes");
  const int n = a->shape[0], k = a->shape[1], m = b->shape[1];
  std::vector<T> out(static_cast<std::size_t>(n) * m);
  {
    ConstMatMap<T> A(a->value.data(), n, k), B(b->value.data(), k, m);
    MatMap<T> O(out.data(), n, m);
    O.noalias() = A * B;
  }
  return detail::result_of<T>({n, m}, std::move(out), {a, b}, [n, k, m](Node<T>& node) {
    auto& ga = *node.inputs[0];
    auto& gb = *node.inputs[1];
    ConstMatMap<T> dY(node.grad.data(), n, m);
    if (ga.requires_grad) {
      ga.ensure_grad();
      ConstMatMap<T> B(gb.value.data(), k, m);
      MatMap<T> dA(ga.grad.data(), n, k);
      dA.noalias() += dY * B.transpose();
    }
    if (gb.requires_grad) {
      gb.ensure_grad();
      ConstMatMap<T> A(ga.value.data(), n, k);
      MatMap<T> dB(gb.grad.data(), k, m);
      dB.noalias() += A.transpose() * dY;
    }
  });
}

// Broadcast a length-f vector across the rows of an [..., f] tensor.
template <typename T>
NodePtr<T> add_rowvec(const NodePtr<T>& a, const NodePtr<T>& v) {
  const int f = a->cols();
  if (static_cast<int>(v->size()) != f) throw ShapeMismatch("add_rowvec: vector length mismatch");
  const int rows = a->rows();
  std::vector<T> out(a->size());
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < f; ++c)
      out[static_cast<std::size_t>(r) * f + c] =
          a->value[static_cast<std::size_t>(r) * f + c] + v->value[static_cast<std::size_t>(c)];
  return detail::result_of<T>(a->shape, std::move(out), {a, v}, [rows, f](Node<T>& n) {
    auto& ga = *n.inputs[0];
    auto& gv = *n.inputs[1];
    if (ga.requires_grad) {
      ga.ensure_grad();
      for (std::size_t i = 0; i < n.grad.size(); ++i) ga.grad[i] += n.grad[i];
    }
    if (gv.requires_grad) {
      gv.ensure_grad();
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < f; ++c)
          gv.grad[static_cast<std::size_t>(c)] += n.grad[static_cast<std::size_t>(r) * f + c];
    }
  });
}

template <typename T>
NodePtr<T> sub_rowvec(const NodePtr<T>& a, const NodePtr<T>& v) {
  return add_rowvec(a, scale(v, T(-1)));
}

template <typename T>
NodePtr<T> relu(const NodePtr<T>& a) {
  std::vector<T> out(a->size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->value[i] > T(0) ? a->value[i] : T(0);
  return detail::result_of<T>(a->shape, std::move(out), {a}, [](Node<T>& n) {
    auto& ga = *n.inputs[0];
    ga.ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      if (ga.value[i] > T(0)) ga.grad[i] += n.grad[i];
  });
}

template <typename T>
NodePtr<T> sigmoid(const NodePtr<T>& a) {
  std::vector<T> out(a->size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T x = a->value[i];
    if (x >= T(0)) {
      out[i] = T(1) / (T(1) + std::exp(-x));
    } else {
      const T e = std::exp(x);
      out[i] = e / (T(1) + e);
    }
  }
  return detail::result_of<T>(a->shape, std::move(out), {a}, [](Node<T>& n) {
    auto& ga = *n.inputs[0];
    ga.ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      const T y = n.value[i];
      ga.grad[i] += n.grad[i] * y * (T(1) - y);
    }
  });
}

// Per-row sum over the last dimension: [n, f] -> [n]
template <typename T>
NodePtr<T> row_sum(const NodePtr<T>& a) {
  const int rows = a->rows(), f = a->cols();
  std::vector<T> out(static_cast<std::size_t>(rows), T(0));
  for (int r = 0; r < rows; ++r) {
    T s = T(0);
    for (int c = 0; c < f; ++c) s += a->value[static_cast<std::size_t>(r) * f + c];
    out[static_cast<std::size_t>(r)] = s;
  }
  return detail::result_of<T>({rows}, std::move(out), {a}, [rows, f](Node<T>& n) {
    auto& ga = *n.inputs[0];
    ga.ensure_grad();
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < f; ++c)
        ga.grad[static_cast<std::size_t>(r) * f + c] += n.grad[static_cast<std::size_t>(r)];
  });
}

template <typename T>
NodePtr<T> mean_all(const NodePtr<T>& a) {
  if (a->size() == 0) throw ShapeMismatch("mean_all: empty tensor");
  T s = T(0);
  for (T v : a->value) s += v;
  const T inv = T(1) / static_cast<T>(a->size());
  return detail::result_of<T>({1}, {s * inv}, {a}, [inv](Node<T>& n) {
    auto& ga = *n.inputs[0];
    ga.ensure_grad();
    const T g = n.grad[0] * inv;
    for (std::size_t i = 0; i < ga.grad.size(); ++i) ga.grad[i] += g;
  });
}

// 1 / (x + shift), elementwise
template <typename T>
NodePtr<T> recip_shift(const NodePtr<T>& a, T shift) {
  std::vector<T> out(a->size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = T(1) / (a->value[i] + shift);
  return detail::result_of<T>(a->shape, std::move(out), {a}, [](Node<T>& n) {
    auto& ga = *n.inputs[0];
    ga.ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i)
      ga.grad[i] -= n.grad[i] * n.value[i] * n.value[i];
  });
}

// Rows picked from an [..., f] tensor viewed as [size/f, f].
template <typename T>
NodePtr<T> gather_rows(const NodePtr<T>& a, std::vector<int> indices) {
  const int f = a->cols();
  const int total = a->rows();
  std::vector<T> out(indices.size() * static_cast<std::size_t>(f));
  for (std::size_t g = 0; g < indices.size(); ++g) {
    if (indices[g] < 0 || indices[g] >= total) throw ShapeMismatch("gather_rows: index out of range");
    std::copy_n(a->value.begin() + static_cast<std::ptrdiff_t>(indices[g]) * f, f,
                out.begin() + static_cast<std::ptrdiff_t>(g) * f);
  }
  const int g_rows = static_cast<int>(indices.size());
  return detail::result_of<T>(
      {g_rows, f}, std::move(out), {a}, [idx = std::move(indices), f](Node<T>& n) {
        auto& ga = *n.inputs[0];
        ga.ensure_grad();
        for (std::size_t g = 0; g < idx.size(); ++g)
          for (int c = 0; c < f; ++c)
            ga.grad[static_cast<std::size_t>(idx[g]) * f + c] +=
                n.grad[g * static_cast<std::size_t>(f) + c];
      });
}

// Rows of a placed at the given distinct row positions of a zero tensor
// with `out_shape` (whose trailing dim must match a's row width).
template <typename T>
NodePtr<T> scatter_rows(const NodePtr<T>& a, std::vector<int> positions,
                        std::vector<int> out_shape) {
  const int f = a->cols();
  if (out_shape.empty() || out_shape.back() != f)
    throw ShapeMismatch("scatter_rows: trailing dim mismatch");
  const std::size_t out_size = numel(out_shape);
  const int out_rows = static_cast<int>(out_size) / f;
  if (static_cast<int>(positions.size()) != a->rows())
    throw ShapeMismatch("scatter_rows: one position per input row required");
  std::vector<T> out(out_size, T(0));
  for (std::size_t r = 0; r < positions.size(); ++r) {
    if (positions[r] < 0 || positions[r] >= out_rows)
      throw ShapeMismatch("scatter_rows: position out of range");
    std::copy_n(a->value.begin() + static_cast<std::ptrdiff_t>(r) * f, f,
                out.begin() + static_cast<std::ptrdiff_t>(positions[r]) * f);
  }
  return detail::result_of<T>(
      std::move(out_shape), std::move(out), {a}, [pos = std::move(positions), f](Node<T>& n) {
        auto& ga = *n.inputs[0];
        ga.ensure_grad();
        for (std::size_t r = 0; r < pos.size(); ++r)
          for (int c = 0; c < f; ++c)
            ga.grad[r * static_cast<std::size_t>(f) + c] +=
                n.grad[static_cast<std::size_t>(pos[r]) * f + c];
      });
}

// Per-feature max over the rows of each segment; segments with no rows
// yield zero. Ties route the gradient to the first maximal row.
template <typename T>
NodePtr<T> segment_max(const NodePtr<T>& a, const std::vector<int>& segments, int n_segments) {
  const int f = a->cols();
  if (static_cast<int>(segments.size()) != a->rows())
    throw ShapeMismatch("segment_max: one segment id per row required");
  std::vector<T> out(static_cast<std::size_t>(n_segments) * f, T(0));
  auto argmax = std::make_shared<std::vector<int>>(static_cast<std::size_t>(n_segments) * f, -1);
  for (std::size_t r = 0; r < segments.size(); ++r) {
    const int s = segments[r];
    if (s < 0 || s >= n_segments) throw ShapeMismatch("segment_max: segment id out of range");
    for (int c = 0; c < f; ++c) {
      const std::size_t o = static_cast<std::size_t>(s) * f + c;
      const T v = a->value[r * static_cast<std::size_t>(f) + c];
      if ((*argmax)[o] < 0 || v > out[o]) {
        out[o] = v;
        (*argmax)[o] = static_cast<int>(r);
      }
    }
  }
  return detail::result_of<T>({n_segments, f}, std::move(out), {a}, [argmax, f](Node<T>& n) {
    auto& ga = *n.inputs[0];
    ga.ensure_grad();
    for (std::size_t o = 0; o < argmax->size(); ++o) {
      const int r = (*argmax)[o];
      if (r >= 0) ga.grad[static_cast<std::size_t>(r) * f + (o % static_cast<std::size_t>(f))] += n.grad[o];
    }
  });
}

// 3x3 same-padding convolution over x: [B,H,W,Cin] with weight [Cout, Cin*9]
// (weight row layout: cin-major, then kernel row ky, then kx).
template <typename T>
NodePtr<T> conv3x3(const NodePtr<T>& x, const NodePtr<T>& w) {
  if (x->shape.size() != 4) throw ShapeMismatch("conv3x3: input must be [B,H,W,C]");
  const int B = x->shape[0], H = x->shape[1], W = x->shape[2], Cin = x->shape[3];
  if (w->shape.size() != 2 || w->shape[1] != Cin * 9)
    throw ShapeMismatch("conv3x3: weight must be [Cout, Cin*9]");
  const int Cout = w->shape[0];
  const int K = Cin * 9;
  const std::size_t plane = static_cast<std::size_t>(H) * W;

  // im2col buffer kept for the backward pass: [B*H*W, Cin*9]
  auto cols = std::make_shared<std::vector<T>>(static_cast<std::size_t>(B) * plane * K, T(0));
  for (int b = 0; b < B; ++b) {
    const T* xb = x->value.data() + static_cast<std::size_t>(b) * plane * Cin;
    T* cb = cols->data() + static_cast<std::size_t>(b) * plane * K;
    for (int i = 0; i < H; ++i) {
      for (int j = 0; j < W; ++j) {
        T* dst = cb + (static_cast<std::size_t>(i) * W + j) * K;
        for (int ky = 0; ky < 3; ++ky) {
          const int si = i + ky - 1;
          if (si < 0 || si >= H) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int sj = j + kx - 1;
            if (sj < 0 || sj >= W) continue;
            const T* src = xb + (static_cast<std::size_t>(si) * W + sj) * Cin;
            for (int c = 0; c < Cin; ++c) dst[(c * 3 + ky) * 3 + kx] = src[c];
          }
        }
      }
    }
  }

  std::vector<T> out(static_cast<std::size_t>(B) * plane * Cout);
  {
    ConstMatMap<T> M(cols->data(), B * static_cast<int>(plane), K);
    ConstMatMap<T> Wm(w->value.data(), Cout, K);
    MatMap<T> O(out.data(), B * static_cast<int>(plane), Cout);
    O.noalias() = M * Wm.transpose();
  }

  return detail::result_of<T>(
      {B, H, W, Cout}, std::move(out), {x, w}, [cols, B, H, W, Cin, Cout, K](Node<T>& n) {
        auto& gx = *n.inputs[0];
        auto& gw = *n.inputs[1];
        const std::size_t plane = static_cast<std::size_t>(H) * W;
        ConstMatMap<T> dY(n.grad.data(), B * static_cast<int>(plane), Cout);
        if (gw.requires_grad) {
          gw.ensure_grad();
          ConstMatMap<T> M(cols->data(), B * static_cast<int>(plane), K);
          MatMap<T> dW(gw.grad.data(), Cout, K);
          dW.noalias() += dY.transpose() * M;
        }
        if (gx.requires_grad) {
          gx.ensure_grad();
          // dCols = dY * W, then fold the column buffer back onto the input
          std::vector<T> dcols(static_cast<std::size_t>(B) * plane * K);
          {
            ConstMatMap<T> Wm(gw.value.data(), Cout, K);
            MatMap<T> dM(dcols.data(), B * static_cast<int>(plane), K);
            dM.noalias() = dY * Wm;
          }
          for (int b = 0; b < B; ++b) {
            T* gxb = gx.grad.data() + static_cast<std::size_t>(b) * plane * Cin;
            const T* cb = dcols.data() + static_cast<std::size_t>(b) * plane * K;
            for (int i = 0; i < H; ++i) {
              for (int j = 0; j < W; ++j) {
                const T* src = cb + (static_cast<std::size_t>(i) * W + j) * K;
                for (int ky = 0; ky < 3; ++ky) {
                  const int si = i + ky - 1;
                  if (si < 0 || si >= H) continue;
                  for (int kx = 0; kx < 3; ++kx) {
                    const int sj = j + kx - 1;
                    if (sj < 0 || sj >= W) continue;
                    T* dst = gxb + (static_cast<std::size_t>(si) * W + sj) * Cin;
                    for (int c = 0; c < Cin; ++c) dst[c] += src[(c * 3 + ky) * 3 + kx];
                  }
                }
              }
            }
          }
        }
      });
}

// Inverted dropout; identity in eval mode. rate=0 keeps every element.
template <typename T>
NodePtr<T> dropout(const NodePtr<T>& a, double rate, bool training, Rng& rng) {
  if (!training || rate <= 0.0) return a;
  if (rate >= 1.0) throw ShapeMismatch("dropout: rate must be < 1");
  const T inv_keep = T(1.0 / (1.0 - rate));
  auto mask = std::make_shared<std::vector<T>>(a->size());
  std::vector<T> out(a->size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const T m = rng.uniform() < rate ? T(0) : inv_keep;
    (*mask)[i] = m;
    out[i] = a->value[i] * m;
  }
  return detail::result_of<T>(a->shape, std::move(out), {a}, [mask](Node<T>& n) {
    auto& ga = *n.inputs[0];
    ga.ensure_grad();
    for (std::size_t i = 0; i < n.grad.size(); ++i) ga.grad[i] += n.grad[i] * (*mask)[i];
  });
}

// Value copy that blocks gradient flow.
template <typename T>
NodePtr<T> detach(const NodePtr<T>& a) {
  return make_node<T>(a->shape, a->value, false);
}

// Accumulates d(loss)/d(node) into every reachable node that requires a
// gradient. loss must be scalar.
template <typename T>
void backward(const NodePtr<T>& loss) {
  if (loss->size() != 1) throw GraphError("backward: loss must be a scalar");
  // Post-order DFS so each node is processed after everything it feeds.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack;
  stack.emplace_back(loss.get(), 0);
  seen.insert(loss.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node<T>* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  for (Node<T>* n : order) n->ensure_grad();
  loss->grad[0] = T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backprop) (*it)->backprop(**it);
  }
}

}  // namespace travest::nn
