#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcn/depth.hpp"
#include "pcn/mesh.hpp"
#include "pcn/ply.hpp"
#include "pcn/point_cloud.hpp"
#include "pcn/rng.hpp"

namespace pcn {

namespace detail {

inline void append_box(TriangleMesh& mesh, const Vec3& center,
                       const Vec3& half) {
  const std::uint32_t base = static_cast<std::uint32_t>(mesh.vertices.size());
  for (int i = 0; i < 8; ++i)
    mesh.vertices.push_back({center[0] + (i & 1 ? half[0] : -half[0]),
                             center[1] + (i & 2 ? half[1] : -half[1]),
                             center[2] + (i & 4 ? half[2] : -half[2])});
  static const std::uint32_t faces[12][3] = {
      {0, 2, 1}, {1, 2, 3},  // z-
      {4, 5, 6}, {5, 7, 6},  // z+
      {0, 1, 4}, {1, 5, 4},  // y-
      {2, 6, 3}, {3, 6, 7},  // y+
      {0, 4, 2}, {2, 4, 6},  // x-
      {1, 3, 5}, {3, 7, 5},  // x+
  };
  for (const auto& f : faces)
    mesh.triangles.push_back({base + f[0], base + f[1], base + f[2]});
}

inline void append_cylinder(TriangleMesh& mesh, const Vec3& center,
                            float radius, float half_height,
                            std::size_t segments) {
  const std::uint32_t base = static_cast<std::uint32_t>(mesh.vertices.size());
  for (std::size_t i = 0; i < segments; ++i) {
    const float a = 2.0f * 3.14159265358979323846f * static_cast<float>(i) /
                    static_cast<float>(segments);
    const float x = center[0] + radius * std::cos(a);
    const float z = center[2] + radius * std::sin(a);
    mesh.vertices.push_back({x, center[1] - half_height, z});
    mesh.vertices.push_back({x, center[1] + half_height, z});
  }
  const std::uint32_t bot_c = static_cast<std::uint32_t>(mesh.vertices.size());
  mesh.vertices.push_back({center[0], center[1] - half_height, center[2]});
  const std::uint32_t top_c = bot_c + 1;
  mesh.vertices.push_back({center[0], center[1] + half_height, center[2]});
  const auto n = static_cast<std::uint32_t>(segments);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t j = (i + 1) % n;
    const std::uint32_t b0 = base + 2 * i, t0 = base + 2 * i + 1;
    const std::uint32_t b1 = base + 2 * j, t1 = base + 2 * j + 1;
    mesh.triangles.push_back({b0, t0, b1});  // side
    mesh.triangles.push_back({b1, t0, t1});  // side
    mesh.triangles.push_back({bot_c, b1, b0});  // bottom cap
    mesh.triangles.push_back({top_c, t0, t1});  // top cap
  }
}

inline void normalize_mesh_to_half_unit(TriangleMesh& mesh) {
  if (mesh.vertices.empty()) return;
  Vec3 lo = mesh.vertices[0], hi = mesh.vertices[0];
  for (const auto& v : mesh.vertices)
    for (int k = 0; k < 3; ++k) {
      lo[k] = std::min(lo[k], v[k]);
      hi[k] = std::max(hi[k], v[k]);
    }
  const Vec3 c = 0.5f * (lo + hi);
  float max_r = 0;
  for (const auto& v : mesh.vertices) max_r = std::max(max_r, dist(v, c));
  if (max_r <= 0)
    throw std::invalid_argument("procedural_shape: degenerate mesh");
  const float scale = 0.5f / max_r;
  for (auto& v : mesh.vertices) v = scale * (v - c);
}

}  // namespace detail

// Desk-scale stand-ins for dataset shapes. All meshes are centered and
// scaled so the farthest vertex sits at radius 0.5.
inline TriangleMesh procedural_shape(const std::string& kind,
                                     std::uint64_t seed) {
  Rng rng = Rng::derive(seed, std::hash<std::string>{}(kind));
  TriangleMesh mesh;
  auto u = [&rng](double lo, double hi) {
    return static_cast<float>(rng.uniform(lo, hi));
  };
  if (kind == "box") {
    detail::append_box(mesh, {0, 0, 0}, {0.5f, 0.5f, 0.5f});
  } else if (kind == "cylinder") {
    detail::append_cylinder(mesh, {0, 0, 0}, 0.5f, 0.5f, 16);
  } else if (kind == "lamp") {
    // pole, base and a boxy shade
    const float pole_r = u(0.02, 0.05);
    detail::append_cylinder(mesh, {0, 0.0f, 0}, pole_r, 0.45f, 12);
    detail::append_cylinder(mesh, {0, -0.45f, 0}, u(0.15, 0.25), 0.03f, 16);
    detail::append_box(mesh, {0, u(0.3, 0.45), 0},
                       {u(0.12, 0.2), u(0.08, 0.15), u(0.12, 0.2)});
  } else if (kind == "table") {
    const float top_y = u(0.2, 0.4);
    const float hx = u(0.3, 0.5), hz = u(0.2, 0.4);
    const float leg = u(0.02, 0.05);
    detail::append_box(mesh, {0, top_y, 0}, {hx, u(0.02, 0.05), hz});
    for (int sx : {-1, 1})
      for (int sz : {-1, 1})
        detail::append_box(
            mesh,
            {static_cast<float>(sx) * (hx - leg),
             (top_y - 0.5f) / 2.0f,
             static_cast<float>(sz) * (hz - leg)},
            {leg, (top_y + 0.5f) / 2.0f, leg});
  } else if (kind == "chair") {
    const float seat_y = u(-0.1, 0.05);
    const float hx = u(0.2, 0.3), hz = u(0.2, 0.3);
    const float leg = u(0.02, 0.04);
    detail::append_box(mesh, {0, seat_y, 0}, {hx, 0.03f, hz});
    for (int sx : {-1, 1})
      for (int sz : {-1, 1})
        detail::append_box(mesh,
                           {static_cast<float>(sx) * (hx - leg),
                            (seat_y - 0.5f) / 2.0f,
                            static_cast<float>(sz) * (hz - leg)},
                           {leg, (seat_y + 0.5f) / 2.0f, leg});
    detail::append_box(mesh, {0, (seat_y + 0.5f) / 2.0f, -(hz - 0.02f)},
                       {hx, (0.5f - seat_y) / 2.0f, 0.02f});
  } else {
    throw std::invalid_argument("procedural_shape: unknown kind '" + kind +
                                "'");
  }
  detail::normalize_mesh_to_half_unit(mesh);
  mesh.validate();
  return mesh;
}

struct DataGenConfig {
  std::size_t n_complete = 1024;  // toy default; full scale 16384
  std::size_t coarse_size = 64;   // |sub|; paper scale 1024
  std::size_t views = 8;
  std::size_t render_width = 160;
  std::size_t render_height = 120;
  float focal = 120.0f;
  float camera_radius = 1.5f;
  std::uint64_t seed = 0;
  std::vector<std::string> kinds{"box", "cylinder", "lamp", "table", "chair"};
  std::size_t shapes = 10;
  std::size_t val_shapes = 0;
  std::size_t test_shapes = 0;
};

struct TrainingPair {
  PointCloud partial;
  PointCloud complete;
  PointCloud complete_sub;  // exact subset of complete
  std::size_t shape_id = 0;
  std::size_t view_id = 0;
  std::uint64_t seed = 0;
};

inline CameraIntrinsics default_intrinsics(const DataGenConfig& cfg) {
  return {cfg.focal, cfg.focal, static_cast<float>(cfg.render_width) / 2.0f,
          static_cast<float>(cfg.render_height) / 2.0f};
}

// Camera pose for one view: direction uniform on the sphere, fixed radius,
// looking at the origin. The jitter argument perturbs retries.
inline RigidTransform view_camera(const DataGenConfig& cfg,
                                  std::size_t shape_id, std::size_t view_id,
                                  std::size_t jitter = 0) {
  Rng rng = Rng::derive(cfg.seed ^ 0x76696577ULL, shape_id,
                        view_id * 16 + jitter);
  const double z = rng.uniform(-1.0, 1.0);
  const double phi = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
  const double rxy = std::sqrt(std::max(0.0, 1.0 - z * z));
  const Vec3 eye{
      static_cast<float>(cfg.camera_radius * rxy * std::cos(phi)),
      static_cast<float>(cfg.camera_radius * z),
      static_cast<float>(cfg.camera_radius * rxy * std::sin(phi))};
  return look_at(eye, {0, 0, 0});
}

inline DepthImage render_view(const TriangleMesh& mesh,
                              const DataGenConfig& cfg, std::size_t shape_id,
                              std::size_t view_id, std::size_t jitter = 0) {
  return render_depth(mesh, cfg.render_width, cfg.render_height,
                      default_intrinsics(cfg),
                      view_camera(cfg, shape_id, view_id, jitter));
}

// Complete cloud by uniform surface sampling, partial by depth rendering
// and back-projection, sub by uniform subsampling without replacement.
inline TrainingPair make_pair(const TriangleMesh& mesh, std::size_t shape_id,
                              std::size_t view_id, const DataGenConfig& cfg) {
  TrainingPair pair;
  pair.shape_id = shape_id;
  pair.view_id = view_id;
  pair.seed = cfg.seed;
  Rng rng = Rng::derive(cfg.seed, shape_id, view_id);

  pair.complete = sample_mesh_surface(mesh, cfg.n_complete, rng.next_u64());

  DepthImage img;
  for (std::size_t attempt = 0;; ++attempt) {
    img = render_view(mesh, cfg, shape_id, view_id, attempt);
    if (img.valid_count() > 0) break;
    if (attempt + 1 >= 8)
      throw std::runtime_error(
          "make_pair: no foreground pixels after 8 camera attempts (shape " +
          std::to_string(shape_id) + ", view " + std::to_string(view_id) +
          ")");
  }
  pair.partial = backproject(img);

  // Uniform subsample without replacement (partial Fisher-Yates).
  if (cfg.coarse_size > cfg.n_complete)
    throw std::invalid_argument("make_pair: coarse_size > n_complete");
  std::vector<std::size_t> idx(cfg.n_complete);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < cfg.coarse_size; ++i) {
    const std::size_t j =
        i + static_cast<std::size_t>(rng.uniform_index(idx.size() - i));
    std::swap(idx[i], idx[j]);
    pair.complete_sub.points.push_back(pair.complete[idx[i]]);
  }
  return pair;
}

// Depth-image perturbations: Gaussian noise scaled by the max valid depth,
// a contiguous square occlusion mask covering ~p of the valid pixels, and
// a fraction of valid pixels clamped to d_max.
inline DepthImage perturb(const DepthImage& input, double noise_sigma_rel,
                          double occlusion_p, double outlier_frac,
                          float d_max, std::uint64_t seed) {
  if (occlusion_p < 0 || occlusion_p > 1)
    throw std::invalid_argument("perturb: occlusion_p must be in [0, 1]");
  if (outlier_frac < 0 || outlier_frac > 1)
    throw std::invalid_argument("perturb: outlier_frac must be in [0, 1]");
  DepthImage img = input;
  Rng rng(seed);

  const float scale = img.max_valid_depth();
  if (noise_sigma_rel > 0 && scale > 0) {
    const double sigma = noise_sigma_rel * static_cast<double>(scale);
    for (auto& d : img.depth)
      if (d > 0)
        d = std::max(1e-6f, d + static_cast<float>(rng.normal(0.0, sigma)));
  }

  if (occlusion_p > 0) {
    std::vector<std::pair<std::size_t, std::size_t>> valid;
    for (std::size_t v = 0; v < img.height; ++v)
      for (std::size_t u = 0; u < img.width; ++u)
        if (img.at(u, v) > 0) valid.emplace_back(u, v);
    if (!valid.empty()) {
      const auto [cu, cv] = valid[rng.uniform_index(valid.size())];
      const double target = occlusion_p * static_cast<double>(valid.size());
      // Grow a square around a random valid center until it covers the
      // requested fraction of the valid pixels.
      auto count_inside = [&](double h) {
        std::size_t c = 0;
        for (const auto& [u, v] : valid)
          if (std::abs(static_cast<double>(u) - static_cast<double>(cu)) <=
                  h &&
              std::abs(static_cast<double>(v) - static_cast<double>(cv)) <= h)
            ++c;
        return c;
      };
      double lo = 0, hi = static_cast<double>(img.width + img.height);
      for (int it = 0; it < 40; ++it) {
        const double mid = (lo + hi) / 2;
        if (static_cast<double>(count_inside(mid)) < target)
          lo = mid;
        else
          hi = mid;
      }
      const double h = hi;
      for (const auto& [u, v] : valid)
        if (std::abs(static_cast<double>(u) - static_cast<double>(cu)) <= h &&
            std::abs(static_cast<double>(v) - static_cast<double>(cv)) <= h)
          img.at(u, v) = 0.0f;
    }
  }

  if (outlier_frac > 0) {
    std::vector<std::size_t> valid_idx;
    for (std::size_t i = 0; i < img.depth.size(); ++i)
      if (img.depth[i] > 0) valid_idx.push_back(i);
    const std::size_t count = static_cast<std::size_t>(
        std::llround(outlier_frac * static_cast<double>(valid_idx.size())));
    for (std::size_t i = 0; i < count && i < valid_idx.size(); ++i) {
      const std::size_t j =
          i + static_cast<std::size_t>(rng.uniform_index(valid_idx.size() - i));
      std::swap(valid_idx[i], valid_idx[j]);
      img.depth[valid_idx[i]] = d_max;
    }
  }
  return img;
}

struct ManifestEntry {
  std::size_t shape_id = 0;
  std::size_t view_id = 0;
  std::string split;  // train / val / test
  std::string kind;
};

struct DatasetManifest {
  std::filesystem::path root;
  DataGenConfig config;
  std::vector<ManifestEntry> entries;

  std::string pair_basename(const ManifestEntry& e) const {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "shape%04zu_view%zu", e.shape_id,
                  e.view_id);
    return buf;
  }
  std::filesystem::path pair_path(const ManifestEntry& e,
                                  const std::string& role) const {
    return root / "pairs" / (pair_basename(e) + "_" + role + ".ply");
  }
};

inline void write_manifest(const DatasetManifest& m) {
  std::ofstream out(m.root / "manifest");
  if (!out)
    throw std::runtime_error("write_manifest: cannot open " +
                             (m.root / "manifest").string());
  out << "seed = " << m.config.seed << "\n"
      << "shapes = " << m.config.shapes << "\n"
      << "views = " << m.config.views << "\n"
      << "n_complete = " << m.config.n_complete << "\n"
      << "coarse_size = " << m.config.coarse_size << "\n"
      << "render_width = " << m.config.render_width << "\n"
      << "render_height = " << m.config.render_height << "\n"
      << "focal = " << m.config.focal << "\n"
      << "camera_radius = " << m.config.camera_radius << "\n";
  for (const auto& e : m.entries)
    out << "pair = " << e.shape_id << " " << e.view_id << " " << e.split
        << " " << e.kind << "\n";
}

inline DatasetManifest read_manifest(const std::filesystem::path& root) {
  std::ifstream in(root / "manifest");
  if (!in)
    throw std::runtime_error("read_manifest: cannot open " +
                             (root / "manifest").string());
  DatasetManifest m;
  m.root = root;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    key.erase(key.find_last_not_of(" \t") + 1);
    std::istringstream val(line.substr(eq + 1));
    if (key == "seed")
      val >> m.config.seed;
    else if (key == "shapes")
      val >> m.config.shapes;
    else if (key == "views")
      val >> m.config.views;
    else if (key == "n_complete")
      val >> m.config.n_complete;
    else if (key == "coarse_size")
      val >> m.config.coarse_size;
    else if (key == "render_width")
      val >> m.config.render_width;
    else if (key == "render_height")
      val >> m.config.render_height;
    else if (key == "focal")
      val >> m.config.focal;
    else if (key == "camera_radius")
      val >> m.config.camera_radius;
    else if (key == "pair") {
      ManifestEntry e;
      val >> e.shape_id >> e.view_id >> e.split >> e.kind;
      m.entries.push_back(e);
    }
  }
  return m;
}

// Generates shapes x views pairs on disk, split by shape id so no shape
// ever spans two splits.
inline DatasetManifest build_dataset(const DataGenConfig& cfg,
                                     const std::filesystem::path& root) {
  if (cfg.val_shapes + cfg.test_shapes > cfg.shapes)
    throw std::invalid_argument(
        "build_dataset: val + test shapes exceed total");
  DatasetManifest m;
  m.root = root;
  m.config = cfg;
  std::filesystem::create_directories(root / "pairs");

  for (std::size_t shape_id = 0; shape_id < cfg.shapes; ++shape_id) {
    const std::string kind = cfg.kinds[shape_id % cfg.kinds.size()];
    const TriangleMesh mesh =
        procedural_shape(kind, cfg.seed + 1000 * shape_id);
    std::string split = "train";
    if (shape_id >= cfg.shapes - cfg.test_shapes)
      split = "test";
    else if (shape_id >= cfg.shapes - cfg.test_shapes - cfg.val_shapes)
      split = "val";
    for (std::size_t view_id = 0; view_id < cfg.views; ++view_id) {
      const TrainingPair pair = make_pair(mesh, shape_id, view_id, cfg);
      ManifestEntry e{shape_id, view_id, split, kind};
      ply_write(pair.partial, m.pair_path(e, "partial").string());
      ply_write(pair.complete, m.pair_path(e, "complete").string());
      ply_write(pair.complete_sub, m.pair_path(e, "sub").string());
      m.entries.push_back(e);
    }
  }
  write_manifest(m);
  return m;
}

inline TrainingPair load_pair(const DatasetManifest& m,
                              const ManifestEntry& e) {
  TrainingPair pair;
  pair.partial = ply_read(m.pair_path(e, "partial").string());
  pair.complete = ply_read(m.pair_path(e, "complete").string());
  pair.complete_sub = ply_read(m.pair_path(e, "sub").string());
  pair.shape_id = e.shape_id;
  pair.view_id = e.view_id;
  pair.seed = m.config.seed;
  return pair;
}

}  // namespace pcn
