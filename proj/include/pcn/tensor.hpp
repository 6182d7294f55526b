#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

namespace pcn {

#ifdef PCN_USE_DOUBLE
using Scalar = double;
#else
using Scalar = float;
#endif

using EigenMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EigenMap = Eigen::Map<EigenMatrix>;
using ConstEigenMap = Eigen::Map<const EigenMatrix>;

namespace detail {

inline std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

inline std::string shape_str(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

}  // namespace detail

// One node of the reverse-mode tape. Tensors are shared handles to nodes;
// the graph is held alive by parent pointers until the last handle drops.
struct TensorNode {
  std::vector<std::size_t> shape;
  std::vector<Scalar> data;
  std::vector<Scalar> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  // Accumulates this node's grad into its parents' grads.
  std::function<void(TensorNode&)> backward_fn;

  std::size_t numel() const { return data.size(); }

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), Scalar(0));
  }
};

class Tensor {
 public:
  Tensor() = default;

  Tensor(std::vector<std::size_t> shape, std::vector<Scalar> data,
         bool requires_grad = false) {
    if (data.size() != detail::shape_numel(shape))
      throw std::invalid_argument("Tensor: data length " +
                                  std::to_string(data.size()) +
                                  " does not match shape " +
                                  detail::shape_str(shape));
    node_ = std::make_shared<TensorNode>();
    node_->shape = std::move(shape);
    node_->data = std::move(data);
    node_->requires_grad = requires_grad;
  }

  static Tensor zeros(std::vector<std::size_t> shape,
                      bool requires_grad = false) {
    std::vector<Scalar> d(detail::shape_numel(shape), Scalar(0));
    return Tensor(std::move(shape), std::move(d), requires_grad);
  }

  static Tensor scalar(Scalar v) { return Tensor({}, {v}); }

  bool valid() const { return node_ != nullptr; }
  const std::vector<std::size_t>& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->data.size(); }
  std::size_t extent(std::size_t axis) const { return node_->shape.at(axis); }

  std::vector<Scalar>& data() { return node_->data; }
  const std::vector<Scalar>& data() const { return node_->data; }
  std::vector<Scalar>& grad() { return node_->grad; }
  const std::vector<Scalar>& grad() const { return node_->grad; }
  bool requires_grad() const { return node_->requires_grad; }

  Scalar value() const {
    if (numel() != 1)
      throw std::logic_error("Tensor::value requires a scalar tensor");
    return node_->data[0];
  }

  void zero_grad() { node_->grad.assign(node_->data.size(), Scalar(0)); }

  std::shared_ptr<TensorNode> node() const { return node_; }

  explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<TensorNode> node_;
};

namespace detail {

inline std::shared_ptr<TensorNode> make_node(
    std::vector<std::size_t> shape,
    std::vector<std::shared_ptr<TensorNode>> parents) {
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->data.resize(shape_numel(n->shape));
  n->requires_grad = false;
  for (const auto& p : parents)
    if (p->requires_grad) n->requires_grad = true;
  if (n->requires_grad) n->parents = std::move(parents);
  return n;
}

}  // namespace detail

// out[r][c] = sum_k in[r][k] * w[k][c] + b[c]
inline Tensor linear(const Tensor& input, const Tensor& weight,
                     const Tensor& bias) {
  if (input.rank() != 2 || weight.rank() != 2 || bias.rank() != 1 ||
      input.extent(1) != weight.extent(0) ||
      bias.extent(0) != weight.extent(1))
    throw std::invalid_argument(
        "linear: shape mismatch, input " + detail::shape_str(input.shape()) +
        " vs weight " + detail::shape_str(weight.shape()) + " bias " +
        detail::shape_str(bias.shape()));

  const std::size_t rows = input.extent(0), inner = input.extent(1),
                    cols = weight.extent(1);
  auto node = detail::make_node({rows, cols},
                                {input.node(), weight.node(), bias.node()});
  ConstEigenMap in(input.data().data(), rows, inner);
  ConstEigenMap w(weight.data().data(), inner, cols);
  EigenMap out(node->data.data(), rows, cols);
  // Row-at-a-time keeps each output row a pure function of its input row,
  // bit-identical regardless of how many other rows are present.
  for (std::size_t r = 0; r < rows; ++r)
    out.row(r).noalias() = in.row(r) * w;
  out.rowwise() += Eigen::Map<const Eigen::RowVector<Scalar, Eigen::Dynamic>>(
      bias.data().data(), cols);

  if (node->requires_grad) {
    auto in_n = input.node();
    auto w_n = weight.node();
    auto b_n = bias.node();
    node->backward_fn = [in_n, w_n, b_n, rows, inner, cols](TensorNode& self) {
      ConstEigenMap go(self.grad.data(), rows, cols);
      if (in_n->requires_grad) {
        in_n->ensure_grad();
        ConstEigenMap w(w_n->data.data(), inner, cols);
        EigenMap gi(in_n->grad.data(), rows, inner);
        gi.noalias() += go * w.transpose();
      }
      if (w_n->requires_grad) {
        w_n->ensure_grad();
        ConstEigenMap in(in_n->data.data(), rows, inner);
        EigenMap gw(w_n->grad.data(), inner, cols);
        gw.noalias() += in.transpose() * go;
      }
      if (b_n->requires_grad) {
        b_n->ensure_grad();
        Eigen::Map<Eigen::RowVector<Scalar, Eigen::Dynamic>> gb(
            b_n->grad.data(), cols);
        gb += go.colwise().sum();
      }
    };
  }
  return Tensor(node);
}

// Elementwise max(0, x); subgradient at 0 is 0.
inline Tensor relu(const Tensor& input) {
  auto node = detail::make_node(input.shape(), {input.node()});
  for (std::size_t i = 0; i < node->data.size(); ++i)
    node->data[i] = std::max(Scalar(0), input.data()[i]);
  if (node->requires_grad) {
    auto in_n = input.node();
    node->backward_fn = [in_n](TensorNode& self) {
      in_n->ensure_grad();
      for (std::size_t i = 0; i < self.data.size(); ++i)
        if (in_n->data[i] > Scalar(0)) in_n->grad[i] += self.grad[i];
    };
  }
  return Tensor(node);
}

struct MaxPoolResult {
  Tensor pooled;                    // shape [k]
  std::vector<std::size_t> argmax;  // lowest row index attaining each max
};

// Column-wise max over rows; gradient routes only to the argmax rows.
inline MaxPoolResult max_pool_points(const Tensor& features) {
  if (features.rank() != 2)
    throw std::invalid_argument("max_pool_points: expected a 2-d tensor, got " +
                                detail::shape_str(features.shape()));
  const std::size_t m = features.extent(0), k = features.extent(1);
  if (m == 0)
    throw std::invalid_argument("max_pool_points: empty input (m = 0)");

  auto node = detail::make_node({k}, {features.node()});
  std::vector<std::size_t> argmax(k, 0);
  for (std::size_t j = 0; j < k; ++j) {
    Scalar best = features.data()[j];
    std::size_t best_i = 0;
    for (std::size_t i = 1; i < m; ++i) {
      Scalar v = features.data()[i * k + j];
      if (v > best) {
        best = v;
        best_i = i;
      }
    }
    node->data[j] = best;
    argmax[j] = best_i;
  }
  if (node->requires_grad) {
    auto in_n = features.node();
    auto am = argmax;
    node->backward_fn = [in_n, am, k](TensorNode& self) {
      in_n->ensure_grad();
      for (std::size_t j = 0; j < k; ++j)
        in_n->grad[am[j] * k + j] += self.grad[j];
    };
  }
  return {Tensor(node), std::move(argmax)};
}

// Appends the global vector to every row: out_i = [rows_i || global].
inline Tensor concat_feature(const Tensor& rows, const Tensor& global) {
  if (rows.rank() != 2 || global.rank() != 1)
    throw std::invalid_argument("concat_feature: expected [m x a] and [b]");
  const std::size_t m = rows.extent(0), a = rows.extent(1),
                    b = global.extent(0);
  auto node = detail::make_node({m, a + b}, {rows.node(), global.node()});
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(rows.data().data() + i * a, a,
                node->data.data() + i * (a + b));
    std::copy_n(global.data().data(), b,
                node->data.data() + i * (a + b) + a);
  }
  if (node->requires_grad) {
    auto r_n = rows.node();
    auto g_n = global.node();
    node->backward_fn = [r_n, g_n, m, a, b](TensorNode& self) {
      if (r_n->requires_grad) {
        r_n->ensure_grad();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < a; ++j)
            r_n->grad[i * a + j] += self.grad[i * (a + b) + j];
      }
      if (g_n->requires_grad) {
        g_n->ensure_grad();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < b; ++j)
            g_n->grad[j] += self.grad[i * (a + b) + a + j];
      }
    };
  }
  return Tensor(node);
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw std::invalid_argument("add: shape mismatch " +
                                detail::shape_str(a.shape()) + " vs " +
                                detail::shape_str(b.shape()));
  auto node = detail::make_node(a.shape(), {a.node(), b.node()});
  for (std::size_t i = 0; i < node->data.size(); ++i)
    node->data[i] = a.data()[i] + b.data()[i];
  if (node->requires_grad) {
    auto a_n = a.node();
    auto b_n = b.node();
    node->backward_fn = [a_n, b_n](TensorNode& self) {
      for (auto* p : {a_n.get(), b_n.get()}) {
        if (!p->requires_grad) continue;
        p->ensure_grad();
        for (std::size_t i = 0; i < self.data.size(); ++i)
          p->grad[i] += self.grad[i];
      }
    };
  }
  return Tensor(node);
}

inline Tensor scale(const Tensor& a, Scalar factor) {
  auto node = detail::make_node(a.shape(), {a.node()});
  for (std::size_t i = 0; i < node->data.size(); ++i)
    node->data[i] = a.data()[i] * factor;
  if (node->requires_grad) {
    auto a_n = a.node();
    node->backward_fn = [a_n, factor](TensorNode& self) {
      a_n->ensure_grad();
      for (std::size_t i = 0; i < self.data.size(); ++i)
        a_n->grad[i] += self.grad[i] * factor;
    };
  }
  return Tensor(node);
}

inline Tensor sum(const Tensor& a) {
  auto node = detail::make_node({}, {a.node()});
  node->data[0] =
      std::accumulate(a.data().begin(), a.data().end(), Scalar(0));
  if (node->requires_grad) {
    auto a_n = a.node();
    node->backward_fn = [a_n](TensorNode& self) {
      a_n->ensure_grad();
      for (auto& g : a_n->grad) g += self.grad[0];
    };
  }
  return Tensor(node);
}

// View with a new shape over the same data; numel must match.
inline Tensor reshape(const Tensor& a, std::vector<std::size_t> shape) {
  if (detail::shape_numel(shape) != a.numel())
    throw std::invalid_argument("reshape: numel mismatch");
  auto node = detail::make_node(std::move(shape), {a.node()});
  node->data = a.data();
  if (node->requires_grad) {
    auto a_n = a.node();
    node->backward_fn = [a_n](TensorNode& self) {
      a_n->ensure_grad();
      for (std::size_t i = 0; i < self.data.size(); ++i)
        a_n->grad[i] += self.grad[i];
    };
  }
  return Tensor(node);
}

struct MlpLayer {
  Tensor weight;  // [in x out]
  Tensor bias;    // [out]
};

// The same (weight, bias) stack applied to every row independently.
// ReLU between layers; the last layer is linear unless relu_last is set.
inline Tensor shared_mlp(const Tensor& points,
                         const std::vector<MlpLayer>& layers,
                         bool relu_last = false) {
  Tensor h = points;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    h = linear(h, layers[i].weight, layers[i].bias);
    if (i + 1 < layers.size() || relu_last) h = relu(h);
  }
  return h;
}

// Reverse-mode sweep from a scalar loss. Grads accumulate across calls;
// reset leaf grads between iterations.
inline void backward(const Tensor& loss) {
  if (loss.numel() != 1)
    throw std::invalid_argument("backward: loss must be a scalar, got " +
                                detail::shape_str(loss.shape()));
  // Topological order by DFS over requires_grad parents.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> seen;
  std::vector<std::pair<TensorNode*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      TensorNode* p = node->parents[idx++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  // Interior nodes get fresh gradients each sweep; only leaves accumulate
  // across repeated backward calls.
  for (TensorNode* n : order)
    if (n->backward_fn) n->grad.assign(n->data.size(), Scalar(0));
  loss.node()->ensure_grad();
  loss.node()->grad[0] += Scalar(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
}

}  // namespace pcn
