#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "pcn/assignment.hpp"
#include "pcn/kdtree.hpp"
#include "pcn/point_cloud.hpp"
#include "pcn/tensor.hpp"

namespace pcn {

namespace detail {

inline PointCloud tensor_rows_to_cloud(const Tensor& t) {
  if (t.rank() != 2 || t.extent(1) != 3)
    throw std::invalid_argument("expected an [n x 3] point tensor, got " +
                                shape_str(t.shape()));
  PointCloud c;
  c.points.resize(t.extent(0));
  for (std::size_t i = 0; i < c.points.size(); ++i)
    c.points[i] = {static_cast<float>(t.data()[3 * i]),
                   static_cast<float>(t.data()[3 * i + 1]),
                   static_cast<float>(t.data()[3 * i + 2])};
  return c;
}

// Distance between a tensor row and a cloud point at full Scalar width.
inline Scalar row_point_dist(const std::vector<Scalar>& data, std::size_t row,
                             const Vec3& p) {
  Scalar len2 = 0;
  for (int k = 0; k < 3; ++k) {
    const Scalar d = data[3 * row + k] - static_cast<Scalar>(p[k]);
    len2 += d * d;
  }
  return std::sqrt(len2);
}

}  // namespace detail

// Differentiable symmetric Chamfer distance between a predicted point
// tensor and a fixed target cloud. Nearest-neighbor indices come from the
// KD-tree and are treated as constant during the backward pass; the loss
// value itself is accumulated at Scalar width.
inline Tensor chamfer_loss(const Tensor& pred, const PointCloud& target) {
  if (target.empty())
    throw std::invalid_argument("chamfer_loss: empty target cloud");
  const PointCloud pred_cloud = detail::tensor_rows_to_cloud(pred);
  if (pred_cloud.empty())
    throw std::invalid_argument("chamfer_loss: empty prediction");

  const std::size_t np = pred_cloud.size(), ng = target.size();
  const KdTree pred_tree(pred_cloud);
  const KdTree gt_tree(target);

  std::vector<std::size_t> nn_of_pred(np);  // pred -> target
  std::vector<std::size_t> nn_of_gt(ng);    // target -> pred
  for (std::size_t i = 0; i < np; ++i)
    nn_of_pred[i] = gt_tree.nearest(pred_cloud[i]).index;
  for (std::size_t j = 0; j < ng; ++j)
    nn_of_gt[j] = pred_tree.nearest(target[j]).index;

  Scalar sum_pg = 0, sum_gp = 0;
  for (std::size_t i = 0; i < np; ++i)
    sum_pg += detail::row_point_dist(pred.data(), i, target[nn_of_pred[i]]);
  for (std::size_t j = 0; j < ng; ++j)
    sum_gp += detail::row_point_dist(pred.data(), nn_of_gt[j], target[j]);

  auto node = detail::make_node({}, {pred.node()});
  node->data[0] = sum_pg / static_cast<Scalar>(np) +
                  sum_gp / static_cast<Scalar>(ng);
  if (node->requires_grad) {
    auto pred_n = pred.node();
    PointCloud tgt = target;
    node->backward_fn = [pred_n, tgt, nn_of_pred, nn_of_gt, np,
                         ng](TensorNode& self) {
      pred_n->ensure_grad();
      const Scalar g = self.grad[0];
      auto add_unit = [&](std::size_t pred_idx, const Vec3& other,
                          Scalar weight) {
        Scalar d[3];
        Scalar len2 = 0;
        for (int k = 0; k < 3; ++k) {
          d[k] = pred_n->data[3 * pred_idx + k] - static_cast<Scalar>(other[k]);
          len2 += d[k] * d[k];
        }
        const Scalar len = std::sqrt(len2);
        if (len <= Scalar(0)) return;  // subgradient 0 at coincident points
        for (int k = 0; k < 3; ++k)
          pred_n->grad[3 * pred_idx + k] += g * weight * d[k] / len;
      };
      for (std::size_t i = 0; i < np; ++i)
        add_unit(i, tgt[nn_of_pred[i]], Scalar(1) / static_cast<Scalar>(np));
      for (std::size_t j = 0; j < ng; ++j)
        add_unit(nn_of_gt[j], tgt[j], Scalar(1) / static_cast<Scalar>(ng));
    };
  }
  return Tensor(node);
}

// Differentiable (1+eps)-approximate EMD against a fixed equal-size target.
// The matching is treated as constant during the backward pass.
inline Tensor emd_loss(const Tensor& pred, const PointCloud& target,
                       double epsilon = -1.0) {
  const PointCloud pred_cloud = detail::tensor_rows_to_cloud(pred);
  if (pred_cloud.size() != target.size())
    throw std::invalid_argument(
        "emd_loss: prediction and target must be the same size, got " +
        std::to_string(pred_cloud.size()) + " and " +
        std::to_string(target.size()));
  const auto assignment = emd_approx_assignment(pred_cloud, target, epsilon);
  const std::size_t n = pred_cloud.size();

  Scalar total = 0;
  for (std::size_t i = 0; i < n; ++i)
    total += detail::row_point_dist(pred.data(), i, target[assignment.matching[i]]);

  auto node = detail::make_node({}, {pred.node()});
  node->data[0] = total / static_cast<Scalar>(n);
  if (node->requires_grad) {
    auto pred_n = pred.node();
    PointCloud tgt = target;
    auto matching = assignment.matching;
    node->backward_fn = [pred_n, tgt, matching, n](TensorNode& self) {
      pred_n->ensure_grad();
      const Scalar g = self.grad[0];
      const Scalar w = Scalar(1) / static_cast<Scalar>(n);
      for (std::size_t i = 0; i < n; ++i) {
        const Vec3& y = tgt[matching[i]];
        Scalar d[3];
        Scalar len2 = 0;
        for (int k = 0; k < 3; ++k) {
          d[k] = pred_n->data[3 * i + k] - static_cast<Scalar>(y[k]);
          len2 += d[k] * d[k];
        }
        const Scalar len = std::sqrt(len2);
        if (len <= Scalar(0)) continue;
        for (int k = 0; k < 3; ++k)
          pred_n->grad[3 * i + k] += g * w * d[k] / len;
      }
    };
  }
  return Tensor(node);
}

}  // namespace pcn
