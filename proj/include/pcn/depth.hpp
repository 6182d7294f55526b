#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "pcn/mesh.hpp"
#include "pcn/point_cloud.hpp"

namespace pcn {

struct CameraIntrinsics {
  float fx = 0, fy = 0, cx = 0, cy = 0;
};

// Pinhole depth image. Depth 0 is the invalid sentinel; valid depths are
// positive camera-frame z values.
struct DepthImage {
  std::size_t width = 0, height = 0;
  std::vector<float> depth;  // row-major, height x width
  CameraIntrinsics intrinsics;
  RigidTransform camera_pose;  // camera-to-world

  float& at(std::size_t u, std::size_t v) { return depth[v * width + u]; }
  float at(std::size_t u, std::size_t v) const { return depth[v * width + u]; }

  std::size_t valid_count() const {
    std::size_t n = 0;
    for (float d : depth)
      if (d > 0) ++n;
    return n;
  }

  float max_valid_depth() const {
    float m = 0;
    for (float d : depth) m = std::max(m, d);
    return m;
  }
};

// Camera looking at `target` from `eye`, x right, y down, z forward.
inline RigidTransform look_at(const Vec3& eye, const Vec3& target,
                              const Vec3& up_hint = {0, 1, 0}) {
  Vec3 fwd = target - eye;
  const float fn = norm(fwd);
  if (fn <= 0) throw std::invalid_argument("look_at: eye equals target");
  fwd = (1.0f / fn) * fwd;
  Vec3 right = cross(up_hint, fwd);
  float rn = norm(right);
  if (rn < 1e-6f) {
    right = cross(Vec3{1, 0, 0}, fwd);
    rn = norm(right);
  }
  right = (1.0f / rn) * right;
  const Vec3 down = cross(fwd, right);
  // Columns of R are the camera axes in world coordinates.
  const float m00 = right[0], m01 = down[0], m02 = fwd[0];
  const float m10 = right[1], m11 = down[1], m12 = fwd[1];
  const float m20 = right[2], m21 = down[2], m22 = fwd[2];
  // Rotation matrix to quaternion (Shepperd's method).
  RigidTransform T;
  const float tr = m00 + m11 + m22;
  float w, x, y, z;
  if (tr > 0) {
    const float s = std::sqrt(tr + 1.0f) * 2;
    w = 0.25f * s;
    x = (m21 - m12) / s;
    y = (m02 - m20) / s;
    z = (m10 - m01) / s;
  } else if (m00 > m11 && m00 > m22) {
    const float s = std::sqrt(1.0f + m00 - m11 - m22) * 2;
    w = (m21 - m12) / s;
    x = 0.25f * s;
    y = (m01 + m10) / s;
    z = (m02 + m20) / s;
  } else if (m11 > m22) {
    const float s = std::sqrt(1.0f + m11 - m00 - m22) * 2;
    w = (m02 - m20) / s;
    x = (m01 + m10) / s;
    y = 0.25f * s;
    z = (m12 + m21) / s;
  } else {
    const float s = std::sqrt(1.0f + m22 - m00 - m11) * 2;
    w = (m10 - m01) / s;
    x = (m02 + m20) / s;
    y = (m12 + m21) / s;
    z = 0.25f * s;
  }
  const float qn = std::sqrt(w * w + x * x + y * y + z * z);
  T.rotation = {w / qn, x / qn, y / qn, z / qn};
  T.translation = eye;
  return T;
}

namespace detail {

// Moller-Trumbore ray/triangle test. Returns t > 0 on hit, -1 otherwise.
inline float ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                          const Vec3& b, const Vec3& c) {
  constexpr float kEps = 1e-9f;
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 pvec = cross(dir, e2);
  const float det = dot(e1, pvec);
  if (std::fabs(det) < kEps) return -1.0f;
  const float inv_det = 1.0f / det;
  const Vec3 tvec = origin - a;
  const float u = dot(tvec, pvec) * inv_det;
  if (u < 0 || u > 1) return -1.0f;
  const Vec3 qvec = cross(tvec, e1);
  const float v = dot(dir, qvec) * inv_det;
  if (v < 0 || u + v > 1) return -1.0f;
  const float t = dot(e2, qvec) * inv_det;
  return t > kEps ? t : -1.0f;
}

}  // namespace detail

// Renders per-pixel depth (camera-frame z of the nearest intersection).
inline DepthImage render_depth(const TriangleMesh& mesh,
                               std::size_t width, std::size_t height,
                               const CameraIntrinsics& intr,
                               const RigidTransform& camera_pose) {
  camera_pose.check_unit();
  if (intr.fx <= 0 || intr.fy <= 0)
    throw std::invalid_argument("render_depth: focal lengths must be positive");
  DepthImage img;
  img.width = width;
  img.height = height;
  img.depth.assign(width * height, 0.0f);
  img.intrinsics = intr;
  img.camera_pose = camera_pose;

  // Transform mesh into the camera frame once.
  const RigidTransform world_to_cam = camera_pose.inverse();
  std::vector<Vec3> verts(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
    verts[i] = world_to_cam.apply(mesh.vertices[i]);

  const Vec3 origin{0, 0, 0};
  for (std::size_t v = 0; v < height; ++v) {
    for (std::size_t u = 0; u < width; ++u) {
      const Vec3 dir{(static_cast<float>(u) - intr.cx) / intr.fx,
                     (static_cast<float>(v) - intr.cy) / intr.fy, 1.0f};
      float best = std::numeric_limits<float>::max();
      for (const auto& tri : mesh.triangles) {
        const float t = detail::ray_triangle(origin, dir, verts[tri[0]],
                                             verts[tri[1]], verts[tri[2]]);
        if (t > 0 && t < best) best = t;
      }
      // dir has unit z, so the ray parameter is the camera-frame depth.
      if (best < std::numeric_limits<float>::max())
        img.at(u, v) = best;
    }
  }
  return img;
}

// Valid pixels to world-frame points through the pinhole model and pose.
inline PointCloud backproject(const DepthImage& img) {
  if (img.intrinsics.fx <= 0 || img.intrinsics.fy <= 0)
    throw std::invalid_argument("backproject: focal lengths must be positive");
  PointCloud out;
  for (std::size_t v = 0; v < img.height; ++v) {
    for (std::size_t u = 0; u < img.width; ++u) {
      const float d = img.at(u, v);
      if (d <= 0) continue;
      const Vec3 cam{(static_cast<float>(u) - img.intrinsics.cx) * d /
                         img.intrinsics.fx,
                     (static_cast<float>(v) - img.intrinsics.cy) * d /
                         img.intrinsics.fy,
                     d};
      out.points.push_back(img.camera_pose.apply(cam));
    }
  }
  return out;
}

}  // namespace pcn
