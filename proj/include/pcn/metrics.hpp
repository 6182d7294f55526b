#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "pcn/kdtree.hpp"
#include "pcn/point_cloud.hpp"

namespace pcn {

// Symmetric Chamfer distance with unsquared L2 norms, each direction
// averaged over its own cloud. Sizes may differ.
inline double chamfer(const PointCloud& s1, const PointCloud& s2) {
  if (s1.empty() || s2.empty())
    throw std::invalid_argument("chamfer: clouds must be non-empty");
  const KdTree t1(s1);
  const KdTree t2(s2);
  double sum12 = 0;
  for (const auto& p : s1.points) sum12 += t2.nearest(p).distance;
  double sum21 = 0;
  for (const auto& p : s2.points) sum21 += t1.nearest(p).distance;
  return sum12 / static_cast<double>(s1.size()) +
         sum21 / static_cast<double>(s2.size());
}

// One-directional mean NN distance, input -> output.
inline double fidelity(const PointCloud& input, const PointCloud& output) {
  if (input.empty() || output.empty())
    throw std::invalid_argument("fidelity: clouds must be non-empty");
  const KdTree tree(output);
  double sum = 0;
  for (const auto& p : input.points) sum += tree.nearest(p).distance;
  return sum / static_cast<double>(input.size());
}

struct MmdResult {
  double distance;
  std::size_t index;
};

// Minimal matching distance: CD to the closest database model.
inline MmdResult mmd(const PointCloud& output,
                     const std::vector<PointCloud>& database) {
  if (database.empty())
    throw std::invalid_argument("mmd: database must be non-empty");
  MmdResult best{std::numeric_limits<double>::max(), 0};
  for (std::size_t i = 0; i < database.size(); ++i) {
    const double d = chamfer(output, database[i]);
    if (d < best.distance) {
      best.distance = d;
      best.index = i;
    }
  }
  return best;
}

// Mean CD between consecutive frames.
inline double consistency(const std::vector<PointCloud>& frames) {
  if (frames.size() < 2)
    throw std::invalid_argument("consistency: need at least 2 frames");
  double sum = 0;
  for (std::size_t i = 0; i + 1 < frames.size(); ++i)
    sum += chamfer(frames[i], frames[i + 1]);
  return sum / static_cast<double>(frames.size() - 1);
}

// Regular voxel grid of distances to the nearest cloud point, in metric
// units. Values are sampled at voxel centers.
struct DistanceField {
  std::size_t resolution = 0;
  Vec3 origin{0, 0, 0};
  float voxel_size = 0;
  std::vector<float> values;  // resolution^3, x fastest

  float at(std::size_t ix, std::size_t iy, std::size_t iz) const {
    return values[(iz * resolution + iy) * resolution + ix];
  }
};

inline DistanceField to_distance_field(const PointCloud& cloud,
                                       std::size_t resolution,
                                       const Vec3& bounds_min = {-0.5f, -0.5f,
                                                                 -0.5f},
                                       const Vec3& bounds_max = {0.5f, 0.5f,
                                                                 0.5f}) {
  if (cloud.empty())
    throw std::invalid_argument("to_distance_field: empty cloud");
  if (resolution == 0)
    throw std::invalid_argument("to_distance_field: resolution must be >= 1");
  DistanceField df;
  df.resolution = resolution;
  df.origin = bounds_min;
  df.voxel_size = (bounds_max[0] - bounds_min[0]) /
                  static_cast<float>(resolution);
  df.values.resize(resolution * resolution * resolution);
  const KdTree tree(cloud);
  std::size_t idx = 0;
  for (std::size_t iz = 0; iz < resolution; ++iz)
    for (std::size_t iy = 0; iy < resolution; ++iy)
      for (std::size_t ix = 0; ix < resolution; ++ix) {
        const Vec3 center{
            bounds_min[0] + (static_cast<float>(ix) + 0.5f) * df.voxel_size,
            bounds_min[1] + (static_cast<float>(iy) + 0.5f) * df.voxel_size,
            bounds_min[2] + (static_cast<float>(iz) + 0.5f) * df.voxel_size};
        df.values[idx++] = tree.nearest(center).distance;
      }
  return df;
}

// Mean |a - b| over voxels, optionally restricted to a mask.
inline double l1_field(const DistanceField& a, const DistanceField& b,
                       const std::vector<bool>* mask = nullptr) {
  if (a.resolution != b.resolution ||
      std::fabs(a.voxel_size - b.voxel_size) > 1e-9f ||
      dist(a.origin, b.origin) > 1e-9f)
    throw std::invalid_argument("l1_field: grid geometry mismatch");
  if (mask && mask->size() != a.values.size())
    throw std::invalid_argument("l1_field: mask size mismatch");
  double sum = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    sum += std::fabs(static_cast<double>(a.values[i]) - b.values[i]);
    ++count;
  }
  if (count == 0)
    throw std::invalid_argument("l1_field: mask selects no voxels");
  return sum / static_cast<double>(count);
}

// Registration error between rotations: 2*acos(2*<q1,q2>^2 - 1).
inline double rotation_error(const std::array<float, 4>& q1,
                             const std::array<float, 4>& q2) {
  auto qnorm = [](const std::array<float, 4>& q) {
    return std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
  };
  if (std::fabs(qnorm(q1) - 1.0f) > 1e-5f ||
      std::fabs(qnorm(q2) - 1.0f) > 1e-5f)
    throw std::invalid_argument("rotation_error: quaternions must be unit");
  const double ip = static_cast<double>(q1[0]) * q2[0] +
                    static_cast<double>(q1[1]) * q2[1] +
                    static_cast<double>(q1[2]) * q2[2] +
                    static_cast<double>(q1[3]) * q2[3];
  const double arg = std::clamp(2.0 * ip * ip - 1.0, -1.0, 1.0);
  return 2.0 * std::acos(arg);
}

inline double translation_error(const Vec3& t1, const Vec3& t2) {
  return static_cast<double>(dist(t1, t2));
}

}  // namespace pcn
