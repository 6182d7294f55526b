#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "pcn/point_cloud.hpp"

namespace pcn {

// Static exact nearest-neighbor index. Median split, leaf size 16.
// Ties resolve to the lowest point index, matching the brute-force rule.
class KdTree {
 public:
  static constexpr std::size_t kLeafSize = 16;

  explicit KdTree(const PointCloud& cloud) : points_(cloud.points) {
    if (points_.empty())
      throw std::invalid_argument("KdTree: cannot build over an empty cloud");
    indices_.resize(points_.size());
    std::iota(indices_.begin(), indices_.end(), std::size_t{0});
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    root_ = build(0, points_.size());
  }

  struct Result {
    std::size_t index;
    float distance;  // unsquared L2
  };

  Result nearest(const Vec3& query) const {
    Best best{std::numeric_limits<float>::max(),
              std::numeric_limits<std::size_t>::max()};
    search(root_, query, best);
    return {best.index, std::sqrt(best.sq_dist)};
  }

  std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    float split = 0.0f;
    int axis = -1;  // -1 marks a leaf
    std::size_t begin = 0, end = 0;
    int left = -1, right = -1;
  };

  struct Best {
    float sq_dist;
    std::size_t index;
  };

  int build(std::size_t begin, std::size_t end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    if (end - begin <= kLeafSize) {
      nodes_[id].begin = begin;
      nodes_[id].end = end;
      return id;
    }
    // Split on the widest axis at the median.
    Vec3 lo = points_[indices_[begin]], hi = lo;
    for (std::size_t i = begin; i < end; ++i)
      for (int k = 0; k < 3; ++k) {
        lo[k] = std::min(lo[k], points_[indices_[i]][k]);
        hi[k] = std::max(hi[k], points_[indices_[i]][k]);
      }
    int axis = 0;
    for (int k = 1; k < 3; ++k)
      if (hi[k] - lo[k] > hi[axis] - lo[axis]) axis = k;
    const std::size_t mid = (begin + end) / 2;
    std::nth_element(indices_.begin() + begin, indices_.begin() + mid,
                     indices_.begin() + end,
                     [&](std::size_t a, std::size_t b) {
                       return points_[a][axis] < points_[b][axis];
                     });
    const float split = points_[indices_[mid]][axis];
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[id].axis = axis;
    nodes_[id].split = split;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  void search(int id, const Vec3& query, Best& best) const {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const std::size_t idx = indices_[i];
        const float d = squared_dist(points_[idx], query);
        // The first clause also claims a candidate when every distance is
        // NaN, so the returned index is always in range.
        if (best.index == std::numeric_limits<std::size_t>::max() ||
            d < best.sq_dist || (d == best.sq_dist && idx < best.index)) {
          best.sq_dist = d;
          best.index = idx;
        }
      }
      return;
    }
    const float diff = query[node.axis] - node.split;
    const int near = diff < 0 ? node.left : node.right;
    const int far = diff < 0 ? node.right : node.left;
    search(near, query, best);
    if (diff * diff <= best.sq_dist) search(far, query, best);
  }

  std::vector<Vec3> points_;
  std::vector<std::size_t> indices_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace pcn
