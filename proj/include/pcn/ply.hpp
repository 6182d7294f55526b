#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcn/point_cloud.hpp"

namespace pcn {

enum class PlyFormat { kAscii, kBinaryLittleEndian };

namespace detail {

inline std::size_t ply_type_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "int32" || t == "uint32" ||
      t == "float" || t == "float32")
    return 4;
  if (t == "double" || t == "float64") return 8;
  return 0;
}

inline float ply_read_scalar(const char* buf, const std::string& t) {
  if (t == "float" || t == "float32") {
    float v;
    std::memcpy(&v, buf, 4);
    return v;
  }
  if (t == "double" || t == "float64") {
    double v;
    std::memcpy(&v, buf, 8);
    return static_cast<float>(v);
  }
  throw std::runtime_error("ply: coordinate property has non-float type " + t);
}

}  // namespace detail

inline void ply_write(const PointCloud& cloud, const std::string& path,
                      PlyFormat format = PlyFormat::kBinaryLittleEndian) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("ply_write: cannot open " + path);
  out << "ply\n"
      << (format == PlyFormat::kAscii ? "format ascii 1.0\n"
                                      : "format binary_little_endian 1.0\n")
      << "element vertex " << cloud.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "end_header\n";
  if (format == PlyFormat::kAscii) {
    std::ostringstream ss;
    ss.precision(9);
    for (const auto& p : cloud.points)
      ss << p[0] << " " << p[1] << " " << p[2] << "\n";
    out << ss.str();
  } else {
    for (const auto& p : cloud.points)
      out.write(reinterpret_cast<const char*>(p.data()), 3 * sizeof(float));
  }
  if (!out) throw std::runtime_error("ply_write: write failed for " + path);
}

// Reads x/y/z from the vertex element; other properties are skipped.
inline PointCloud ply_read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("ply_read: cannot open " + path);

  auto fail = [&](std::size_t line_no, const std::string& msg) {
    throw std::runtime_error("ply_read: " + path + ":" +
                             std::to_string(line_no) + ": " + msg);
  };

  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() {
    if (!std::getline(in, line)) fail(line_no, "unexpected end of header");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
  };

  next_line();
  if (line != "ply") fail(line_no, "missing 'ply' magic");

  PlyFormat format = PlyFormat::kAscii;
  bool have_format = false;
  std::size_t vertex_count = 0;
  bool in_vertex_element = false, seen_vertex = false;
  struct Prop {
    std::string type;
    std::string name;
    bool is_list = false;
  };
  std::vector<Prop> vertex_props;
  // Non-vertex elements after the vertex element are ignored entirely;
  // elements before it must be skipped, which we only support for ascii.
  std::vector<std::pair<std::string, std::size_t>> pre_vertex_elements;

  for (;;) {
    next_line();
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "comment" || word.empty()) continue;
    if (word == "format") {
      std::string f, ver;
      ss >> f >> ver;
      if (f == "ascii")
        format = PlyFormat::kAscii;
      else if (f == "binary_little_endian")
        format = PlyFormat::kBinaryLittleEndian;
      else
        fail(line_no, "unsupported format '" + f + "'");
      have_format = true;
    } else if (word == "element") {
      std::string name;
      std::size_t count = 0;
      if (!(ss >> name >> count)) fail(line_no, "malformed element line");
      if (name == "vertex") {
        vertex_count = count;
        in_vertex_element = true;
        seen_vertex = true;
      } else {
        in_vertex_element = false;
        if (!seen_vertex) pre_vertex_elements.emplace_back(name, count);
      }
    } else if (word == "property") {
      if (!in_vertex_element) continue;
      Prop p;
      ss >> p.type;
      if (p.type == "list") {
        std::string count_t, item_t;
        ss >> count_t >> item_t >> p.name;
        p.is_list = true;
      } else {
        ss >> p.name;
      }
      if (p.name.empty()) fail(line_no, "malformed property line");
      vertex_props.push_back(p);
    } else if (word == "end_header") {
      break;
    } else {
      fail(line_no, "unknown header keyword '" + word + "'");
    }
  }
  if (!have_format) fail(line_no, "missing format line");
  if (!seen_vertex) fail(line_no, "no vertex element");

  int xi = -1, yi = -1, zi = -1;
  for (std::size_t i = 0; i < vertex_props.size(); ++i) {
    if (vertex_props[i].name == "x") xi = static_cast<int>(i);
    if (vertex_props[i].name == "y") yi = static_cast<int>(i);
    if (vertex_props[i].name == "z") zi = static_cast<int>(i);
  }
  if (xi < 0 || yi < 0 || zi < 0)
    fail(line_no, "vertex element lacks x/y/z properties");

  if (!pre_vertex_elements.empty() && format != PlyFormat::kAscii)
    fail(line_no, "binary elements before 'vertex' are not supported");

  PointCloud cloud;
  cloud.points.reserve(vertex_count);

  if (format == PlyFormat::kAscii) {
    // Skip any elements declared before vertex (one line per item).
    for (const auto& [name, count] : pre_vertex_elements)
      for (std::size_t i = 0; i < count; ++i) next_line();
    for (std::size_t i = 0; i < vertex_count; ++i) {
      next_line();
      std::istringstream ss(line);
      Vec3 p{0, 0, 0};
      for (std::size_t j = 0; j < vertex_props.size(); ++j) {
        if (vertex_props[j].is_list)
          fail(line_no, "list property inside vertex element");
        double v;
        if (!(ss >> v)) fail(line_no, "malformed vertex line");
        if (static_cast<int>(j) == xi) p[0] = static_cast<float>(v);
        if (static_cast<int>(j) == yi) p[1] = static_cast<float>(v);
        if (static_cast<int>(j) == zi) p[2] = static_cast<float>(v);
      }
      cloud.points.push_back(p);
    }
  } else {
    std::size_t stride = 0;
    std::vector<std::size_t> offsets(vertex_props.size());
    for (std::size_t j = 0; j < vertex_props.size(); ++j) {
      if (vertex_props[j].is_list)
        fail(line_no, "list property inside binary vertex element");
      const std::size_t sz = detail::ply_type_size(vertex_props[j].type);
      if (sz == 0)
        fail(line_no, "unknown property type '" + vertex_props[j].type + "'");
      offsets[j] = stride;
      stride += sz;
    }
    std::vector<char> buf(stride);
    for (std::size_t i = 0; i < vertex_count; ++i) {
      if (!in.read(buf.data(), static_cast<std::streamsize>(stride)))
        fail(line_no, "truncated binary vertex data at vertex " +
                          std::to_string(i));
      Vec3 p{detail::ply_read_scalar(buf.data() + offsets[xi],
                                     vertex_props[xi].type),
             detail::ply_read_scalar(buf.data() + offsets[yi],
                                     vertex_props[yi].type),
             detail::ply_read_scalar(buf.data() + offsets[zi],
                                     vertex_props[zi].type)};
      cloud.points.push_back(p);
    }
  }
  return cloud;
}

}  // namespace pcn
