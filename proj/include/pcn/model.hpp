#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcn/losses.hpp"
#include "pcn/point_cloud.hpp"
#include "pcn/rng.hpp"
#include "pcn/tensor.hpp"

namespace pcn {

enum class DecoderVariant { kMultistage, kFc, kFolding };
enum class CoarseLoss { kCd, kEmd };

struct ModelConfig {
  std::vector<std::size_t> encoder_mlp1_widths{128, 256};
  std::vector<std::size_t> encoder_mlp2_widths{512, 1024};
  std::size_t num_pn_layers = 2;
  std::size_t bottleneck = 1024;  // k, must equal the last encoder width
  std::size_t coarse_size = 1024;  // s
  std::size_t grid_size = 4;       // u
  float grid_scale = 0.05f;        // r
  std::vector<std::size_t> folding_mlp_widths{512, 512, 3};
  std::vector<std::size_t> coarse_fc_widths{1024, 1024};
  DecoderVariant decoder = DecoderVariant::kMultistage;
  CoarseLoss coarse_loss = CoarseLoss::kCd;

  std::size_t detail_size() const {
    if (decoder == DecoderVariant::kFolding) return grid_size * grid_size;
    return coarse_size * grid_size * grid_size;
  }

  void validate() const {
    if (num_pn_layers < 1)
      throw std::invalid_argument("ModelConfig: num_pn_layers must be >= 1");
    if (encoder_mlp1_widths.empty() || encoder_mlp2_widths.empty())
      throw std::invalid_argument("ModelConfig: empty encoder widths");
    const std::size_t k = num_pn_layers == 1 ? encoder_mlp1_widths.back()
                                             : encoder_mlp2_widths.back();
    if (bottleneck != k)
      throw std::invalid_argument(
          "ModelConfig: bottleneck (" + std::to_string(bottleneck) +
          ") must equal the last encoder width (" + std::to_string(k) + ")");
    if (folding_mlp_widths.empty() || folding_mlp_widths.back() != 3)
      throw std::invalid_argument(
          "ModelConfig: folding MLP must end with 3 units");
    if (grid_size < 1)
      throw std::invalid_argument("ModelConfig: grid_size must be >= 1");
    if (grid_scale <= 0)
      throw std::invalid_argument("ModelConfig: grid_scale must be > 0");
    if (coarse_size < 1)
      throw std::invalid_argument("ModelConfig: coarse_size must be >= 1");
  }

  // Named configurations: the full-scale defaults and a desk-scale toy.
  static ModelConfig preset(const std::string& name) {
    ModelConfig c;
    if (name == "pcn-default" || name == "pcn-cd") {
      // defaults as constructed
    } else if (name == "pcn-emd") {
      c.coarse_loss = CoarseLoss::kEmd;
    } else if (name == "fc") {
      c.decoder = DecoderVariant::kFc;
    } else if (name == "folding") {
      c.decoder = DecoderVariant::kFolding;
      c.grid_size = 128;
      c.grid_scale = 0.5f;
    } else if (name == "toy") {
      c.encoder_mlp1_widths = {64, 128};
      c.encoder_mlp2_widths = {128, 128};
      c.bottleneck = 128;
      c.coarse_size = 64;
      c.grid_size = 2;
      c.grid_scale = 0.1f;
      c.folding_mlp_widths = {64, 64, 3};
      c.coarse_fc_widths = {128, 128};
    } else {
      throw std::invalid_argument("ModelConfig: unknown preset '" + name +
                                  "'");
    }
    c.validate();
    return c;
  }

  std::string to_kv() const;
  static ModelConfig from_kv(const std::string& text);
};

struct ParamShape {
  std::string name;
  std::vector<std::size_t> shape;
};

// Shapes of every trainable array, derivable from the config alone.
inline std::vector<ParamShape> derive_param_shapes(const ModelConfig& cfg) {
  cfg.validate();
  std::vector<ParamShape> out;
  auto add_mlp = [&out](const std::string& prefix, std::size_t in_dim,
                        const std::vector<std::size_t>& widths) {
    std::size_t d = in_dim;
    for (std::size_t j = 0; j < widths.size(); ++j) {
      out.push_back({prefix + ".l" + std::to_string(j) + ".w", {d, widths[j]}});
      out.push_back({prefix + ".l" + std::to_string(j) + ".b", {widths[j]}});
      d = widths[j];
    }
  };

  std::size_t prev = 3;
  for (std::size_t layer = 0; layer < cfg.num_pn_layers; ++layer) {
    const auto& widths =
        layer == 0 ? cfg.encoder_mlp1_widths : cfg.encoder_mlp2_widths;
    const std::size_t in_dim = layer == 0 ? prev : 2 * prev;
    add_mlp("enc" + std::to_string(layer + 1), in_dim, widths);
    prev = widths.back();
  }
  const std::size_t k = prev;

  switch (cfg.decoder) {
    case DecoderVariant::kMultistage: {
      auto fc = cfg.coarse_fc_widths;
      fc.push_back(3 * cfg.coarse_size);
      add_mlp("dec.fc", k, fc);
      add_mlp("dec.fold", 2 + 3 + k, cfg.folding_mlp_widths);
      break;
    }
    case DecoderVariant::kFc: {
      auto fc = cfg.coarse_fc_widths;
      fc.push_back(3 * cfg.detail_size());
      add_mlp("dec.fc", k, fc);
      break;
    }
    case DecoderVariant::kFolding: {
      add_mlp("dec.fold1", 2 + k, cfg.folding_mlp_widths);
      add_mlp("dec.fold2", 3 + k, cfg.folding_mlp_widths);
      break;
    }
  }
  return out;
}

inline std::size_t param_count(const ModelConfig& cfg) {
  std::size_t total = 0;
  for (const auto& p : derive_param_shapes(cfg))
    total += detail::shape_numel(p.shape);
  return total;
}

struct ModelParams {
  std::vector<std::string> names;
  std::vector<Tensor> tensors;

  Tensor& at(const std::string& name) {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return tensors[i];
    throw std::out_of_range("ModelParams: no parameter named '" + name + "'");
  }
  const Tensor& at(const std::string& name) const {
    return const_cast<ModelParams*>(this)->at(name);
  }

  void zero_grad() {
    for (auto& t : tensors) t.zero_grad();
  }

  std::size_t count() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += t.numel();
    return n;
  }
};

// Glorot-uniform weights, zero biases.
inline ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  ModelParams params;
  Rng rng(seed);
  for (const auto& spec : derive_param_shapes(cfg)) {
    std::vector<Scalar> data(detail::shape_numel(spec.shape), Scalar(0));
    if (spec.shape.size() == 2) {
      const double fan_in = static_cast<double>(spec.shape[0]);
      const double fan_out = static_cast<double>(spec.shape[1]);
      const double bound = std::sqrt(6.0 / (fan_in + fan_out));
      for (auto& v : data)
        v = static_cast<Scalar>(rng.uniform(-bound, bound));
    }
    params.names.push_back(spec.name);
    params.tensors.emplace_back(spec.shape, std::move(data), true);
  }
  return params;
}

namespace detail {

inline std::vector<MlpLayer> gather_mlp(const ModelParams& params,
                                        const std::string& prefix) {
  std::vector<MlpLayer> layers;
  for (std::size_t j = 0;; ++j) {
    const std::string base = prefix + ".l" + std::to_string(j);
    bool found = false;
    for (const auto& n : params.names)
      if (n == base + ".w") found = true;
    if (!found) break;
    layers.push_back({params.at(base + ".w"), params.at(base + ".b")});
  }
  if (layers.empty())
    throw std::out_of_range("gather_mlp: no layers under '" + prefix + "'");
  return layers;
}

inline Tensor cloud_to_tensor(const PointCloud& cloud) {
  std::vector<Scalar> data;
  data.reserve(cloud.size() * 3);
  for (const auto& p : cloud.points)
    for (int kk = 0; kk < 3; ++kk) data.push_back(static_cast<Scalar>(p[kk]));
  return Tensor({cloud.size(), 3}, std::move(data));
}

}  // namespace detail

struct EncodeResult {
  Tensor v;  // [k]
  std::vector<std::vector<std::size_t>> layer_argmax;  // per PN layer
};

// Stacked-PN encoder: shared MLP + maxpool, then (concat global, shared
// MLP, maxpool) for each further layer.
inline EncodeResult encode(const ModelParams& params, const ModelConfig& cfg,
                           const PointCloud& input) {
  if (input.empty())
    throw std::invalid_argument("encode: empty input cloud");
  EncodeResult result;
  Tensor features = detail::cloud_to_tensor(input);
  Tensor global;
  for (std::size_t layer = 0; layer < cfg.num_pn_layers; ++layer) {
    const auto mlp =
        detail::gather_mlp(params, "enc" + std::to_string(layer + 1));
    if (layer > 0) features = concat_feature(features, global);
    features = shared_mlp(features, mlp);
    auto pooled = max_pool_points(features);
    global = pooled.pooled;
    result.layer_argmax.push_back(std::move(pooled.argmax));
  }
  result.v = global;
  return result;
}

// Zero-centered u x u grid with side length r, row-major, x fastest.
inline std::vector<std::array<Scalar, 2>> folding_grid(std::size_t u,
                                                       Scalar r) {
  std::vector<std::array<Scalar, 2>> grid;
  grid.reserve(u * u);
  auto lin = [u, r](std::size_t i) {
    if (u == 1) return Scalar(0);
    return -r / 2 + r * static_cast<Scalar>(i) / static_cast<Scalar>(u - 1);
  };
  for (std::size_t iy = 0; iy < u; ++iy)
    for (std::size_t ix = 0; ix < u; ++ix)
      grid.push_back({lin(ix), lin(iy)});
  return grid;
}

namespace detail {

// Rows [grid_j || q_i || v] for every coarse point i and grid point j.
inline Tensor build_fold_input(const Tensor& coarse, const Tensor& v,
                               const std::vector<std::array<Scalar, 2>>& grid) {
  const std::size_t s = coarse.extent(0);
  const std::size_t t = grid.size();
  const std::size_t k = v.extent(0);
  const std::size_t width = 2 + 3 + k;
  auto node = make_node({s * t, width}, {coarse.node(), v.node()});
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < t; ++j) {
      Scalar* row = node->data.data() + (i * t + j) * width;
      row[0] = grid[j][0];
      row[1] = grid[j][1];
      for (int c = 0; c < 3; ++c) row[2 + c] = coarse.data()[3 * i + c];
      std::copy_n(v.data().data(), k, row + 5);
    }
  }
  if (node->requires_grad) {
    auto c_n = coarse.node();
    auto v_n = v.node();
    node->backward_fn = [c_n, v_n, s, t, k, width](TensorNode& self) {
      if (c_n->requires_grad) {
        c_n->ensure_grad();
        for (std::size_t i = 0; i < s; ++i)
          for (std::size_t j = 0; j < t; ++j)
            for (int c = 0; c < 3; ++c)
              c_n->grad[3 * i + c] +=
                  self.grad[(i * t + j) * width + 2 + c];
      }
      if (v_n->requires_grad) {
        v_n->ensure_grad();
        for (std::size_t r = 0; r < s * t; ++r)
          for (std::size_t c = 0; c < k; ++c)
            v_n->grad[c] += self.grad[r * width + 5 + c];
      }
    };
  }
  return Tensor(node);
}

// out[i*t + j] = offsets[i*t + j] + coarse[i]
inline Tensor add_centers(const Tensor& offsets, const Tensor& coarse,
                          std::size_t t) {
  const std::size_t s = coarse.extent(0);
  if (offsets.extent(0) != s * t || offsets.extent(1) != 3)
    throw std::invalid_argument("add_centers: shape mismatch");
  auto node = make_node(offsets.shape(), {offsets.node(), coarse.node()});
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = 0; j < t; ++j)
      for (int c = 0; c < 3; ++c)
        node->data[(i * t + j) * 3 + c] =
            offsets.data()[(i * t + j) * 3 + c] + coarse.data()[3 * i + c];
  if (node->requires_grad) {
    auto o_n = offsets.node();
    auto c_n = coarse.node();
    node->backward_fn = [o_n, c_n, s, t](TensorNode& self) {
      if (o_n->requires_grad) {
        o_n->ensure_grad();
        for (std::size_t r = 0; r < self.data.size(); ++r)
          o_n->grad[r] += self.grad[r];
      }
      if (c_n->requires_grad) {
        c_n->ensure_grad();
        for (std::size_t i = 0; i < s; ++i)
          for (std::size_t j = 0; j < t; ++j)
            for (int c = 0; c < 3; ++c)
              c_n->grad[3 * i + c] += self.grad[(i * t + j) * 3 + c];
      }
    };
  }
  return Tensor(node);
}

}  // namespace detail

// One local patch: deform a u x u grid conditioned on the center point and
// the global feature, then translate by the center.
inline Tensor fold_patch(const ModelParams& params, const ModelConfig& cfg,
                         const Vec3& center, const Tensor& v) {
  const auto grid = folding_grid(cfg.grid_size, Scalar(cfg.grid_scale));
  Tensor coarse({1, 3},
                {Scalar(center[0]), Scalar(center[1]), Scalar(center[2])});
  Tensor input = detail::build_fold_input(coarse, v, grid);
  Tensor offsets =
      shared_mlp(input, detail::gather_mlp(params, "dec.fold"));
  return detail::add_centers(offsets, coarse, grid.size());
}

struct DecodeResult {
  Tensor coarse;  // [s x 3] (invalid for the folding variant)
  Tensor detail;  // [n x 3]
};

inline DecodeResult decode_multistage(const ModelParams& params,
                                      const ModelConfig& cfg,
                                      const Tensor& v) {
  Tensor h = reshape(v, {1, v.extent(0)});
  Tensor flat = shared_mlp(h, detail::gather_mlp(params, "dec.fc"));
  Tensor coarse = reshape(flat, {cfg.coarse_size, 3});
  const auto grid = folding_grid(cfg.grid_size, Scalar(cfg.grid_scale));
  Tensor input = detail::build_fold_input(coarse, v, grid);
  Tensor offsets =
      shared_mlp(input, detail::gather_mlp(params, "dec.fold"));
  Tensor detail_pts = detail::add_centers(offsets, coarse, grid.size());
  return {coarse, detail_pts};
}

inline Tensor decode_fc(const ModelParams& params, const ModelConfig& cfg,
                        const Tensor& v) {
  Tensor h = reshape(v, {1, v.extent(0)});
  Tensor flat = shared_mlp(h, detail::gather_mlp(params, "dec.fc"));
  return reshape(flat, {cfg.detail_size(), 3});
}

inline Tensor decode_folding(const ModelParams& params, const ModelConfig& cfg,
                             const Tensor& v) {
  const auto grid = folding_grid(cfg.grid_size, Scalar(cfg.grid_scale));
  std::vector<Scalar> gdata;
  gdata.reserve(grid.size() * 2);
  for (const auto& g : grid) {
    gdata.push_back(g[0]);
    gdata.push_back(g[1]);
  }
  Tensor grid_t({grid.size(), 2}, std::move(gdata));
  Tensor h1 = shared_mlp(concat_feature(grid_t, v),
                         detail::gather_mlp(params, "dec.fold1"));
  Tensor h2 = shared_mlp(concat_feature(h1, v),
                         detail::gather_mlp(params, "dec.fold2"));
  return h2;
}

// Full forward pass: encoder plus the configured decoder. For the folding
// variant the coarse output is the detail output itself.
inline DecodeResult forward(const ModelParams& params, const ModelConfig& cfg,
                            const PointCloud& input) {
  const auto enc = encode(params, cfg, input);
  switch (cfg.decoder) {
    case DecoderVariant::kMultistage:
      return decode_multistage(params, cfg, enc.v);
    case DecoderVariant::kFc: {
      Tensor d = decode_fc(params, cfg, enc.v);
      return {d, d};
    }
    case DecoderVariant::kFolding: {
      Tensor d = decode_folding(params, cfg, enc.v);
      return {d, d};
    }
  }
  throw std::logic_error("forward: unreachable");
}

inline PointCloud tensor_to_cloud(const Tensor& t) {
  return detail::tensor_rows_to_cloud(t);
}

// Two-term completion loss: d1(coarse, gt_sub) + alpha * cd(detail, gt).
inline Tensor completion_loss(const Tensor& coarse, const Tensor& detail_pts,
                              const PointCloud& gt, const PointCloud& gt_sub,
                              Scalar alpha, CoarseLoss coarse_metric) {
  Tensor d1;
  if (coarse_metric == CoarseLoss::kEmd) {
    if (coarse.extent(0) != gt_sub.size())
      throw std::invalid_argument(
          "completion_loss: EMD needs |gt_sub| == |coarse|, got " +
          std::to_string(gt_sub.size()) + " vs " +
          std::to_string(coarse.extent(0)));
    d1 = emd_loss(coarse, gt_sub);
  } else {
    d1 = chamfer_loss(coarse, gt_sub);
  }
  Tensor d2 = chamfer_loss(detail_pts, gt);
  return add(d1, scale(d2, alpha));
}

struct KeypointResult {
  std::vector<std::vector<std::size_t>> per_layer;  // sorted, deduplicated
};

// Input points whose features survive at least one maxpool channel.
inline KeypointResult keypoints(const ModelParams& params,
                                const ModelConfig& cfg,
                                const PointCloud& input) {
  const auto enc = encode(params, cfg, input);
  KeypointResult out;
  for (const auto& argmax : enc.layer_argmax) {
    std::set<std::size_t> uniq(argmax.begin(), argmax.end());
    out.per_layer.emplace_back(uniq.begin(), uniq.end());
  }
  return out;
}

// ---- Config key-value serialization ----

namespace detail {

inline std::string widths_str(const std::vector<std::size_t>& w) {
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(w[i]);
  }
  return s;
}

inline std::vector<std::size_t> parse_widths(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoul(item));
  return out;
}

}  // namespace detail

inline std::string ModelConfig::to_kv() const {
  std::ostringstream out;
  out << "encoder_mlp1_widths = " << detail::widths_str(encoder_mlp1_widths)
      << "\n"
      << "encoder_mlp2_widths = " << detail::widths_str(encoder_mlp2_widths)
      << "\n"
      << "num_pn_layers = " << num_pn_layers << "\n"
      << "bottleneck = " << bottleneck << "\n"
      << "coarse_size = " << coarse_size << "\n"
      << "grid_size = " << grid_size << "\n"
      << "grid_scale = " << grid_scale << "\n"
      << "folding_mlp_widths = " << detail::widths_str(folding_mlp_widths)
      << "\n"
      << "coarse_fc_widths = " << detail::widths_str(coarse_fc_widths) << "\n"
      << "decoder = "
      << (decoder == DecoderVariant::kMultistage
              ? "multistage"
              : decoder == DecoderVariant::kFc ? "fc" : "folding")
      << "\n"
      << "coarse_loss = " << (coarse_loss == CoarseLoss::kCd ? "cd" : "emd")
      << "\n";
  return out.str();
}

inline ModelConfig ModelConfig::from_kv(const std::string& text) {
  ModelConfig c;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key == "encoder_mlp1_widths")
      c.encoder_mlp1_widths = detail::parse_widths(val);
    else if (key == "encoder_mlp2_widths")
      c.encoder_mlp2_widths = detail::parse_widths(val);
    else if (key == "num_pn_layers")
      c.num_pn_layers = std::stoul(val);
    else if (key == "bottleneck")
      c.bottleneck = std::stoul(val);
    else if (key == "coarse_size")
      c.coarse_size = std::stoul(val);
    else if (key == "grid_size")
      c.grid_size = std::stoul(val);
    else if (key == "grid_scale")
      c.grid_scale = std::stof(val);
    else if (key == "folding_mlp_widths")
      c.folding_mlp_widths = detail::parse_widths(val);
    else if (key == "coarse_fc_widths")
      c.coarse_fc_widths = detail::parse_widths(val);
    else if (key == "decoder")
      c.decoder = val == "multistage" ? DecoderVariant::kMultistage
                  : val == "fc"       ? DecoderVariant::kFc
                                      : DecoderVariant::kFolding;
    else if (key == "coarse_loss")
      c.coarse_loss = val == "emd" ? CoarseLoss::kEmd : CoarseLoss::kCd;
    else
      throw std::invalid_argument("ModelConfig: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

// ---- Checkpoint I/O ----
// Layout: magic "PCNCKPT1", u32 config length, config key-value text,
// u32 block count, then per block: u32 name length, name, u32 rank,
// u64 extents, raw little-endian float32 data.

inline void save_checkpoint(const ModelParams& params, const ModelConfig& cfg,
                            const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("save_checkpoint: cannot open " + path);
  out.write("PCNCKPT1", 8);
  const std::string cfg_text = cfg.to_kv();
  auto write_u32 = [&out](std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
  };
  write_u32(static_cast<std::uint32_t>(cfg_text.size()));
  out.write(cfg_text.data(), static_cast<std::streamsize>(cfg_text.size()));
  write_u32(static_cast<std::uint32_t>(params.tensors.size()));
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    const auto& name = params.names[i];
    const auto& t = params.tensors[i];
    write_u32(static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(static_cast<std::uint32_t>(t.rank()));
    for (auto e : t.shape()) {
      const std::uint64_t v = e;
      out.write(reinterpret_cast<const char*>(&v), 8);
    }
    for (auto x : t.data()) {
      const float f = static_cast<float>(x);
      out.write(reinterpret_cast<const char*>(&f), 4);
    }
  }
  if (!out)
    throw std::runtime_error("save_checkpoint: write failed for " + path);
}

struct Checkpoint {
  ModelConfig config;
  ModelParams params;
};

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, "PCNCKPT1", 8) != 0)
    throw std::runtime_error("load_checkpoint: bad magic in " + path);
  auto read_u32 = [&in, &path]() {
    std::uint32_t v;
    if (!in.read(reinterpret_cast<char*>(&v), 4))
      throw std::runtime_error("load_checkpoint: truncated file " + path);
    return v;
  };
  const std::uint32_t cfg_len = read_u32();
  std::string cfg_text(cfg_len, '\0');
  if (!in.read(cfg_text.data(), cfg_len))
    throw std::runtime_error("load_checkpoint: truncated config in " + path);
  Checkpoint ckpt;
  ckpt.config = ModelConfig::from_kv(cfg_text);
  const std::uint32_t blocks = read_u32();
  for (std::uint32_t b = 0; b < blocks; ++b) {
    const std::uint32_t name_len = read_u32();
    std::string name(name_len, '\0');
    if (!in.read(name.data(), name_len))
      throw std::runtime_error("load_checkpoint: truncated name in " + path);
    const std::uint32_t rank = read_u32();
    std::vector<std::size_t> shape(rank);
    for (auto& e : shape) {
      std::uint64_t v;
      if (!in.read(reinterpret_cast<char*>(&v), 8))
        throw std::runtime_error("load_checkpoint: truncated shape in " +
                                 path);
      e = static_cast<std::size_t>(v);
    }
    std::vector<Scalar> data(detail::shape_numel(shape));
    for (auto& x : data) {
      float f;
      if (!in.read(reinterpret_cast<char*>(&f), 4))
        throw std::runtime_error("load_checkpoint: truncated data in " + path);
      x = static_cast<Scalar>(f);
    }
    ckpt.params.names.push_back(std::move(name));
    ckpt.params.tensors.emplace_back(std::move(shape), std::move(data), true);
  }
  return ckpt;
}

}  // namespace pcn
