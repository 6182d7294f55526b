#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcn/point_cloud.hpp"
#include "pcn/rng.hpp"

namespace pcn {

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;

  float triangle_area(std::size_t t) const {
    const auto& tri = triangles[t];
    const Vec3 e1 = vertices[tri[1]] - vertices[tri[0]];
    const Vec3 e2 = vertices[tri[2]] - vertices[tri[0]];
    return 0.5f * norm(cross(e1, e2));
  }

  double total_area() const {
    double a = 0;
    for (std::size_t t = 0; t < triangles.size(); ++t)
      a += triangle_area(t);
    return a;
  }

  void validate() const {
    for (const auto& tri : triangles)
      for (auto idx : tri)
        if (idx >= vertices.size())
          throw std::invalid_argument(
              "TriangleMesh: vertex index " + std::to_string(idx) +
              " out of range (" + std::to_string(vertices.size()) +
              " vertices)");
  }
};

// Uniform sampling on the surface: faces by area, position by barycentric
// coordinates (square-root trick for uniformity in the triangle).
inline PointCloud sample_mesh_surface(const TriangleMesh& mesh, std::size_t n,
                                      std::uint64_t seed) {
  mesh.validate();
  std::vector<double> cumulative(mesh.triangles.size());
  double total = 0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    total += mesh.triangle_area(t);
    cumulative[t] = total;
  }
  if (total <= 0)
    throw std::invalid_argument(
        "sample_mesh_surface: mesh has zero surface area");

  Rng rng(seed);
  PointCloud out;
  out.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = rng.uniform() * total;
    const auto it =
        std::lower_bound(cumulative.begin(), cumulative.end(), r);
    std::size_t t = static_cast<std::size_t>(it - cumulative.begin());
    if (t >= mesh.triangles.size()) t = mesh.triangles.size() - 1;
    const auto& tri = mesh.triangles[t];
    const float su = std::sqrt(static_cast<float>(rng.uniform()));
    const float v = static_cast<float>(rng.uniform());
    const float b0 = 1.0f - su;
    const float b1 = su * (1.0f - v);
    const float b2 = su * v;
    out.points.push_back(b0 * mesh.vertices[tri[0]] +
                         b1 * mesh.vertices[tri[1]] +
                         b2 * mesh.vertices[tri[2]]);
  }
  return out;
}

// OFF: "OFF" header, counts line, vertex lines, face lines. Faces with
// more than 3 vertices are fan-triangulated.
inline TriangleMesh off_read(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("off_read: cannot open " + path);
  std::string token;
  if (!(in >> token) || token != "OFF")
    throw std::runtime_error("off_read: missing OFF header in " + path);
  std::size_t nv = 0, nf = 0, ne = 0;
  if (!(in >> nv >> nf >> ne))
    throw std::runtime_error("off_read: bad counts line in " + path);
  TriangleMesh mesh;
  mesh.vertices.resize(nv);
  for (std::size_t i = 0; i < nv; ++i)
    if (!(in >> mesh.vertices[i][0] >> mesh.vertices[i][1] >>
          mesh.vertices[i][2]))
      throw std::runtime_error("off_read: bad vertex " + std::to_string(i) +
                               " in " + path);
  for (std::size_t f = 0; f < nf; ++f) {
    std::size_t k = 0;
    if (!(in >> k) || k < 3)
      throw std::runtime_error("off_read: bad face " + std::to_string(f) +
                               " in " + path);
    std::vector<std::uint32_t> poly(k);
    for (auto& idx : poly)
      if (!(in >> idx))
        throw std::runtime_error("off_read: bad face " + std::to_string(f) +
                                 " in " + path);
    for (std::size_t i = 1; i + 1 < k; ++i)
      mesh.triangles.push_back({poly[0], poly[i], poly[i + 1]});
  }
  mesh.validate();
  return mesh;
}

inline void off_write(const TriangleMesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("off_write: cannot open " + path);
  out << "OFF\n"
      << mesh.vertices.size() << " " << mesh.triangles.size() << " 0\n";
  for (const auto& v : mesh.vertices)
    out << v[0] << " " << v[1] << " " << v[2] << "\n";
  for (const auto& t : mesh.triangles)
    out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
}

}  // namespace pcn
