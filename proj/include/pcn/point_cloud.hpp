#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace pcn {

using Vec3 = std::array<float, 3>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline Vec3 operator-(const Vec3& a, const Vec3& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
inline Vec3 operator*(float s, const Vec3& a) {
  return {s * a[0], s * a[1], s * a[2]};
}
inline float dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}
inline float norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline float squared_dist(const Vec3& a, const Vec3& b) {
  const float dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}
inline float dist(const Vec3& a, const Vec3& b) {
  return std::sqrt(squared_dist(a, b));
}

// An ordered array of 3D points standing for an unordered set.
struct PointCloud {
  std::vector<Vec3> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  Vec3& operator[](std::size_t i) { return points[i]; }
  const Vec3& operator[](std::size_t i) const { return points[i]; }

  Vec3 centroid() const {
    if (points.empty())
      throw std::invalid_argument("PointCloud::centroid: empty cloud");
    double cx = 0, cy = 0, cz = 0;
    for (const auto& p : points) {
      cx += p[0];
      cy += p[1];
      cz += p[2];
    }
    const double n = static_cast<double>(points.size());
    return {static_cast<float>(cx / n), static_cast<float>(cy / n),
            static_cast<float>(cz / n)};
  }

  // Length of the axis-aligned bounding box diagonal.
  float bbox_diagonal() const {
    if (points.empty()) return 0.0f;
    Vec3 lo = points[0], hi = points[0];
    for (const auto& p : points)
      for (int k = 0; k < 3; ++k) {
        lo[k] = std::min(lo[k], p[k]);
        hi[k] = std::max(hi[k], p[k]);
      }
    return dist(lo, hi);
  }
};

// Unit quaternion (w, x, y, z) plus translation.
struct RigidTransform {
  std::array<float, 4> rotation{1.0f, 0.0f, 0.0f, 0.0f};
  Vec3 translation{0.0f, 0.0f, 0.0f};

  static RigidTransform identity() { return {}; }

  static RigidTransform from_axis_angle(const Vec3& axis, float angle,
                                        const Vec3& t = {0, 0, 0}) {
    const float n = norm(axis);
    if (n <= 0)
      throw std::invalid_argument("from_axis_angle: zero axis");
    const float s = std::sin(angle / 2) / n;
    return {{std::cos(angle / 2), s * axis[0], s * axis[1], s * axis[2]}, t};
  }

  float quat_norm() const {
    return std::sqrt(rotation[0] * rotation[0] + rotation[1] * rotation[1] +
                     rotation[2] * rotation[2] + rotation[3] * rotation[3]);
  }

  void check_unit(float tol = 1e-6f) const {
    if (std::fabs(quat_norm() - 1.0f) > tol)
      throw std::invalid_argument(
          "RigidTransform: quaternion is not unit length");
  }

  std::array<Vec3, 3> rotation_matrix() const {
    const float w = rotation[0], x = rotation[1], y = rotation[2],
                z = rotation[3];
    return {Vec3{1 - 2 * (y * y + z * z), 2 * (x * y - w * z),
                 2 * (x * z + w * y)},
            Vec3{2 * (x * y + w * z), 1 - 2 * (x * x + z * z),
                 2 * (y * z - w * x)},
            Vec3{2 * (x * z - w * y), 2 * (y * z + w * x),
                 1 - 2 * (x * x + y * y)}};
  }

  Vec3 apply(const Vec3& p) const {
    const auto R = rotation_matrix();
    return {dot(R[0], p) + translation[0], dot(R[1], p) + translation[1],
            dot(R[2], p) + translation[2]};
  }

  RigidTransform inverse() const {
    RigidTransform inv;
    inv.rotation = {rotation[0], -rotation[1], -rotation[2], -rotation[3]};
    const auto R = rotation_matrix();
    // R^T * (-t)
    inv.translation = {
        -(R[0][0] * translation[0] + R[1][0] * translation[1] +
          R[2][0] * translation[2]),
        -(R[0][1] * translation[0] + R[1][1] * translation[1] +
          R[2][1] * translation[2]),
        -(R[0][2] * translation[0] + R[1][2] * translation[1] +
          R[2][2] * translation[2])};
    return inv;
  }

  // this ∘ other: apply other first, then this.
  RigidTransform compose(const RigidTransform& other) const {
    const float w1 = rotation[0], x1 = rotation[1], y1 = rotation[2],
                z1 = rotation[3];
    const float w2 = other.rotation[0], x2 = other.rotation[1],
                y2 = other.rotation[2], z2 = other.rotation[3];
    RigidTransform out;
    out.rotation = {w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
                    w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
                    w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
                    w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2};
    const auto rt = apply(other.translation);
    out.translation = rt;
    return out;
  }
};

inline PointCloud apply_transform(const PointCloud& cloud,
                                  const RigidTransform& T) {
  T.check_unit();
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) out.points.push_back(T.apply(p));
  return out;
}

struct NormalizeResult {
  PointCloud cloud;
  Vec3 center;
  float scale;  // max radius before scaling
};

// Centers the cloud at the origin and scales the max radius to 1.
inline NormalizeResult normalize_cloud(const PointCloud& cloud) {
  if (cloud.empty())
    throw std::invalid_argument("normalize_cloud: empty cloud");
  const Vec3 c = cloud.centroid();
  float max_r = 0.0f;
  for (const auto& p : cloud.points) max_r = std::max(max_r, dist(p, c));
  if (max_r <= std::numeric_limits<float>::epsilon())
    throw std::invalid_argument(
        "normalize_cloud: all points identical, scale undefined");
  NormalizeResult out;
  out.center = c;
  out.scale = max_r;
  out.cloud.points.reserve(cloud.size());
  const float inv = 1.0f / max_r;
  for (const auto& p : cloud.points)
    out.cloud.points.push_back(inv * (p - c));
  return out;
}

}  // namespace pcn
