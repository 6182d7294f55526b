// pcn: point-cloud completion toolkit, one binary with subcommands.
//
// Exit codes: 0 success, 1 usage error, 2 runtime failure.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pcn/pcn.hpp"

using namespace pcn;
namespace fs = std::filesystem;

namespace {

// ---- config plumbing ----

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;  // key=value
  std::uint64_t seed = 0;
  bool seed_given = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_out = true) {
  cmd->add_option("--config", args.config_path,
                  "Key-value config file (key = value, optional [sections])");
  cmd->add_option("--set", args.overrides,
                  "Override a config key, e.g. --set data.shapes=4")
      ->take_all();
  cmd->add_option("--seed", args.seed, "Master random seed")
      ->each([&args](const std::string&) { args.seed_given = true; });
  if (with_out) cmd->add_option("--out", args.out_dir, "Output directory");
}

KvConfig resolve_config(const CommonArgs& args) {
  KvConfig cfg;
  if (!args.config_path.empty()) cfg = KvConfig::load(args.config_path);
  for (const std::string& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw CLI::ValidationError("--set", "expected key=value, got '" + kv +
                                              "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (args.seed_given) cfg.set("seed", std::to_string(args.seed));
  return cfg;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

std::vector<std::size_t> split_sizes(const KvConfig& cfg,
                                     const std::string& key) {
  std::vector<std::size_t> out;
  for (const std::string& s : split_list(cfg.get(key)))
    try {
      out.push_back(std::stoul(s));
    } catch (const std::exception&) {
      throw std::runtime_error("config: key '" + key +
                               "' has a non-numeric entry: " + s);
    }
  return out;
}

DataGenConfig datagen_from(const KvConfig& cfg) {
  DataGenConfig d;
  d.n_complete = cfg.get_num("data.n_complete", d.n_complete);
  d.coarse_size = cfg.get_num("data.coarse_size", d.coarse_size);
  d.views = cfg.get_num("data.views", d.views);
  d.render_width = cfg.get_num("data.render_width", d.render_width);
  d.render_height = cfg.get_num("data.render_height", d.render_height);
  d.focal = cfg.get_num("data.focal", d.focal);
  d.camera_radius = cfg.get_num("data.camera_radius", d.camera_radius);
  d.shapes = cfg.get_num("data.shapes", d.shapes);
  d.val_shapes = cfg.get_num("data.val_shapes", d.val_shapes);
  d.test_shapes = cfg.get_num("data.test_shapes", d.test_shapes);
  if (cfg.has("data.kinds")) d.kinds = split_list(cfg.get("data.kinds"));
  d.seed = cfg.get_num<std::uint64_t>("seed", d.seed);
  return d;
}

void echo_datagen(KvConfig& cfg, const DataGenConfig& d) {
  cfg.set("data.n_complete", std::to_string(d.n_complete));
  cfg.set("data.coarse_size", std::to_string(d.coarse_size));
  cfg.set("data.views", std::to_string(d.views));
  cfg.set("data.render_width", std::to_string(d.render_width));
  cfg.set("data.render_height", std::to_string(d.render_height));
  cfg.set("data.focal", std::to_string(d.focal));
  cfg.set("data.camera_radius", std::to_string(d.camera_radius));
  cfg.set("data.shapes", std::to_string(d.shapes));
  cfg.set("data.val_shapes", std::to_string(d.val_shapes));
  cfg.set("data.test_shapes", std::to_string(d.test_shapes));
  std::string kinds;
  for (std::size_t i = 0; i < d.kinds.size(); ++i)
    kinds += (i ? "," : "") + d.kinds[i];
  cfg.set("data.kinds", kinds);
  cfg.set("seed", std::to_string(d.seed));
}

bool is_preset(const std::string& name) {
  for (const char* p : {"pcn-default", "pcn-cd", "pcn-emd", "fc", "folding",
                        "toy"})
    if (name == p) return true;
  return false;
}

ModelConfig model_from(const KvConfig& cfg) {
  ModelConfig m = ModelConfig::preset(cfg.get("model.preset", "pcn-default"));
  if (cfg.has("model.decoder")) {
    const std::string d = cfg.get("model.decoder");
    if (d == "multistage")
      m.decoder = DecoderVariant::kMultistage;
    else if (d == "fc")
      m.decoder = DecoderVariant::kFc;
    else if (d == "folding")
      m.decoder = DecoderVariant::kFolding;
    else
      throw std::runtime_error("config: key 'model.decoder' must be "
                               "multistage, fc, or folding, got " +
                               d);
  }
  if (cfg.has("model.coarse_loss")) {
    const std::string c = cfg.get("model.coarse_loss");
    if (c == "cd")
      m.coarse_loss = CoarseLoss::kCd;
    else if (c == "emd")
      m.coarse_loss = CoarseLoss::kEmd;
    else
      throw std::runtime_error(
          "config: key 'model.coarse_loss' must be cd or emd, got " + c);
  }
  m.bottleneck = cfg.get_num("model.bottleneck", m.bottleneck);
  m.coarse_size = cfg.get_num("model.coarse_size", m.coarse_size);
  m.grid_size = cfg.get_num("model.grid_size", m.grid_size);
  m.grid_scale = cfg.get_num("model.grid_scale", m.grid_scale);
  if (cfg.has("model.encoder_mlp1_widths"))
    m.encoder_mlp1_widths = split_sizes(cfg, "model.encoder_mlp1_widths");
  if (cfg.has("model.encoder_mlp2_widths"))
    m.encoder_mlp2_widths = split_sizes(cfg, "model.encoder_mlp2_widths");
  if (cfg.has("model.folding_mlp_widths"))
    m.folding_mlp_widths = split_sizes(cfg, "model.folding_mlp_widths");
  if (cfg.has("model.coarse_fc_widths"))
    m.coarse_fc_widths = split_sizes(cfg, "model.coarse_fc_widths");
  m.validate();
  return m;
}

void echo_model(KvConfig& cfg, const ModelConfig& m) {
  // ModelConfig::to_kv emits flat keys; prefix them into the model section.
  std::istringstream in(m.to_kv());
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    key.erase(key.find_last_not_of(" \t") + 1);
    std::string value = line.substr(eq + 1);
    value.erase(0, value.find_first_not_of(" \t"));
    cfg.set("model." + key, value);
  }
}

TrainConfig train_from(const KvConfig& cfg) {
  TrainConfig t;
  t.epochs = cfg.get_num("train.epochs", t.epochs);
  t.batch_size = cfg.get_num("train.batch_size", t.batch_size);
  t.max_iters = cfg.get_num("train.max_iters", t.max_iters);
  t.lr = cfg.get_num("train.lr", t.lr);
  t.lr_decay = cfg.get_num("train.lr_decay", t.lr_decay);
  t.lr_decay_every = cfg.get_num("train.lr_decay_every", t.lr_decay_every);
  t.eval_every = cfg.get_num("train.eval_every", t.eval_every);
  t.checkpoint_every =
      cfg.get_num("train.checkpoint_every", t.checkpoint_every);
  t.seed = cfg.get_num<std::uint64_t>("seed", t.seed);
  if (cfg.has("train.alpha")) {
    // "iteration:alpha,iteration:alpha,..."
    t.alpha_schedule.clear();
    for (const std::string& item : split_list(cfg.get("train.alpha"))) {
      const auto colon = item.find(':');
      if (colon == std::string::npos)
        throw std::runtime_error(
            "config: key 'train.alpha' expects iteration:alpha pairs, got " +
            item);
      t.alpha_schedule.push_back(
          {std::stoul(item.substr(0, colon)),
           static_cast<Scalar>(std::stod(item.substr(colon + 1)))});
    }
  }
  t.validate();
  return t;
}

void echo_train(KvConfig& cfg, const TrainConfig& t) {
  cfg.set("train.epochs", std::to_string(t.epochs));
  cfg.set("train.batch_size", std::to_string(t.batch_size));
  cfg.set("train.max_iters", std::to_string(t.max_iters));
  cfg.set("train.lr", std::to_string(t.lr));
  cfg.set("train.lr_decay", std::to_string(t.lr_decay));
  cfg.set("train.lr_decay_every", std::to_string(t.lr_decay_every));
  cfg.set("train.eval_every", std::to_string(t.eval_every));
  cfg.set("train.checkpoint_every", std::to_string(t.checkpoint_every));
  cfg.set("seed", std::to_string(t.seed));
  if (!t.alpha_schedule.empty()) {
    std::string sched;
    for (std::size_t i = 0; i < t.alpha_schedule.size(); ++i) {
      if (i) sched += ",";
      sched += std::to_string(t.alpha_schedule[i].iteration) + ":" +
               std::to_string(t.alpha_schedule[i].alpha);
    }
    cfg.set("train.alpha", sched);
  }
}

fs::path require_out(const CommonArgs& args) {
  if (args.out_dir.empty())
    throw CLI::ValidationError("--out", "an output directory is required");
  fs::create_directories(args.out_dir);
  return args.out_dir;
}

void write_effective(const KvConfig& cfg, const fs::path& out) {
  std::ofstream f(out / "effective-config");
  if (!f)
    throw std::runtime_error("cannot write " +
                             (out / "effective-config").string());
  f << cfg.dump();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::vector<TrainingPair> load_split(const DatasetManifest& m,
                                     const std::string& split) {
  std::vector<TrainingPair> pairs;
  for (const auto& e : m.entries)
    if (split == "all" || e.split == split) pairs.push_back(load_pair(m, e));
  return pairs;
}

// ---- subcommands ----

int run_params(const CommonArgs& args) {
  std::vector<std::pair<std::string, std::size_t>> rows;
  if (!args.config_path.empty() && is_preset(args.config_path)) {
    rows.emplace_back(args.config_path,
                      param_count(ModelConfig::preset(args.config_path)));
  } else if (!args.config_path.empty() || !args.overrides.empty()) {
    const KvConfig cfg = resolve_config(args);
    rows.emplace_back(cfg.get("model.preset", "pcn-default") + " (custom)",
                      param_count(model_from(cfg)));
  } else {
    for (const char* name : {"pcn-default", "fc", "folding", "toy"})
      rows.emplace_back(name, param_count(ModelConfig::preset(name)));
  }
  std::printf("%-22s %12s\n", "config", "params");
  for (const auto& [name, count] : rows)
    std::printf("%-22s %12zu\n", name.c_str(), count);
  return 0;
}

int run_gen_data(const CommonArgs& args, std::size_t shapes_flag) {
  KvConfig cfg = resolve_config(args);
  if (shapes_flag) cfg.set("data.shapes", std::to_string(shapes_flag));
  DataGenConfig d = datagen_from(cfg);
  const fs::path out = require_out(args);
  const DatasetManifest m = build_dataset(d, out);
  echo_datagen(cfg, d);
  write_effective(cfg, out);
  std::printf("wrote %zu pairs under %s\n", m.entries.size(),
              out.string().c_str());
  return 0;
}

int run_train(const CommonArgs& args, const std::string& data_dir) {
  KvConfig cfg = resolve_config(args);
  const fs::path out = require_out(args);
  const DatasetManifest m = read_manifest(data_dir);
  const std::vector<TrainingPair> train_pairs = load_split(m, "train");
  if (train_pairs.empty())
    throw std::runtime_error("train: no training pairs in " + data_dir);

  const ModelConfig mcfg = model_from(cfg);
  const TrainConfig tcfg = train_from(cfg);
  TrainOptions opts;
  opts.out_dir = out;
  opts.val_pairs = load_split(m, "val");

  echo_model(cfg, mcfg);
  echo_train(cfg, tcfg);
  write_effective(cfg, out);

  const TrainResult r = train(mcfg, tcfg, train_pairs, {}, {}, opts);

  CsvWriter csv((out / "train_report.csv").string());
  csv.row({"iteration", "total", "coarse", "detail", "lr"});
  for (const auto& row : r.report.rows)
    csv.row({std::to_string(row.iteration), fmt(row.total), fmt(row.d1),
             fmt(row.d2), fmt(row.lr)});
  if (!r.report.rows.empty())
    std::printf("trained %zu iterations, final loss %.6f (%.1fs)\n",
                r.report.rows.size(), r.report.rows.back().total,
                r.report.wall_seconds);
  return 0;
}

ModelParams load_model(const std::string& checkpoint, ModelConfig& mcfg) {
  TrainCheckpoint ckpt = load_train_checkpoint(checkpoint);
  mcfg = ckpt.config;
  return std::move(ckpt.params);
}

int run_infer(const CommonArgs& args, const std::string& checkpoint,
              const std::vector<std::string>& inputs) {
  const fs::path out = require_out(args);
  ModelConfig mcfg;
  const ModelParams params = load_model(checkpoint, mcfg);
  KvConfig cfg = resolve_config(args);
  echo_model(cfg, mcfg);
  write_effective(cfg, out);
  for (const std::string& input : inputs) {
    const PointCloud cloud = ply_read(input);
    if (cloud.empty())
      throw std::runtime_error("infer: empty input cloud in " + input);
    const auto result = forward(params, mcfg, cloud);
    const std::string stem = fs::path(input).stem().string();
    ply_write(tensor_to_cloud(result.coarse),
              (out / (stem + "_coarse.ply")).string());
    ply_write(tensor_to_cloud(result.detail),
              (out / (stem + "_detail.ply")).string());
  }
  std::printf("completed %zu cloud(s) into %s\n", inputs.size(),
              out.string().c_str());
  return 0;
}

int run_eval(const CommonArgs& args, const std::string& checkpoint,
             const std::string& data_dir, const std::string& split) {
  const fs::path out = require_out(args);
  ModelConfig mcfg;
  const ModelParams params = load_model(checkpoint, mcfg);
  const DatasetManifest m = read_manifest(data_dir);
  const std::vector<TrainingPair> pairs = load_split(m, split);
  if (pairs.empty())
    throw std::runtime_error("eval: no pairs in split '" + split + "' under " +
                             data_dir);
  const EvalReport report = evaluate(params, mcfg, pairs);

  KvConfig cfg = resolve_config(args);
  echo_model(cfg, mcfg);
  write_effective(cfg, out);
  CsvWriter csv((out / "eval.csv").string());
  csv.row({"shape_id", "view_id", "cd", "emd_coarse"});
  for (const auto& row : report.rows)
    csv.row({std::to_string(row.shape_id), std::to_string(row.view_id),
             fmt(row.cd), fmt(row.emd_coarse)});
  std::printf("split %s: mean cd %.6f, mean coarse emd %.6f (%zu pairs)\n",
              split.c_str(), report.mean_cd, report.mean_emd_coarse,
              report.rows.size());
  return 0;
}

int run_robustness(const CommonArgs& args, const std::string& checkpoint) {
  KvConfig cfg = resolve_config(args);
  const fs::path out = require_out(args);
  ModelConfig mcfg;
  const ModelParams params = load_model(checkpoint, mcfg);
  const DataGenConfig dcfg = datagen_from(cfg);

  const std::size_t shape_id = cfg.get_num<std::size_t>("robustness.shape", 0);
  const std::size_t view_id = cfg.get_num<std::size_t>("robustness.view", 0);
  const std::string kind =
      cfg.get("robustness.kind", dcfg.kinds[shape_id % dcfg.kinds.size()]);
  std::vector<double> p_values{0.0, 0.2, 0.4, 0.6, 0.8};
  if (cfg.has("robustness.p_values")) {
    p_values.clear();
    for (const std::string& s : split_list(cfg.get("robustness.p_values")))
      p_values.push_back(std::stod(s));
  }
  const double noise = cfg.get_num("robustness.noise_sigma_rel", 0.0);
  const double outliers = cfg.get_num("robustness.outlier_frac", 0.0);
  const float d_max =
      cfg.get_num("robustness.d_max", dcfg.camera_radius + 0.5f);

  const TriangleMesh mesh =
      procedural_shape(kind, dcfg.seed + 1000 * shape_id);
  const TrainingPair pair = make_pair(mesh, shape_id, view_id, dcfg);
  const auto rows = robustness_sweep(params, mcfg, mesh, pair.complete,
                                     pair.complete_sub, dcfg, shape_id,
                                     view_id, p_values, noise, outliers,
                                     d_max, dcfg.seed);

  echo_datagen(cfg, dcfg);
  echo_model(cfg, mcfg);
  cfg.set("robustness.shape", std::to_string(shape_id));
  cfg.set("robustness.view", std::to_string(view_id));
  cfg.set("robustness.kind", kind);
  cfg.set("robustness.noise_sigma_rel", fmt(noise));
  cfg.set("robustness.outlier_frac", fmt(outliers));
  cfg.set("robustness.d_max", fmt(d_max));
  write_effective(cfg, out);

  CsvWriter csv((out / "robustness.csv").string());
  csv.row({"occlusion_p", "partial_points", "cd", "emd_coarse", "failed"});
  for (const auto& row : rows)
    csv.row({fmt(row.occlusion_p), std::to_string(row.partial_points),
             fmt(row.cd), fmt(row.emd_coarse), row.failed ? "1" : "0"});
  std::printf("swept %zu occlusion levels into %s\n", rows.size(),
              out.string().c_str());
  return 0;
}

int run_register(const CommonArgs& args, const std::string& checkpoint) {
  KvConfig cfg = resolve_config(args);
  const fs::path out = require_out(args);
  const DataGenConfig dcfg = datagen_from(cfg);

  const std::size_t frames = cfg.get_num<std::size_t>("register.frames", 5);
  if (frames < 2) throw std::runtime_error("config: key 'register.frames' must be >= 2");
  const std::string kind = cfg.get("register.kind", "lamp");
  const double angle_deg = cfg.get_num("register.angle_deg", 15.0);

  ModelConfig mcfg;
  ModelParams params;
  const bool use_model = !checkpoint.empty();
  if (use_model) params = load_model(checkpoint, mcfg);

  const TriangleMesh mesh = procedural_shape(kind, dcfg.seed);
  const RigidTransform step = RigidTransform::from_axis_angle(
      {0.2f, 1.0f, 0.1f},
      static_cast<float>(angle_deg * 3.14159265358979323846 / 180.0),
      {0.05f, -0.02f, 0.03f});

  std::vector<PointCloud> partials, completes;
  std::vector<RigidTransform> truth;
  RigidTransform pose = RigidTransform::identity();
  for (std::size_t i = 0; i < frames; ++i) {
    const TrainingPair pair = make_pair(mesh, 0, i % dcfg.views, dcfg);
    PointCloud completed = pair.complete;
    if (use_model) {
      if (pair.partial.empty())
        throw std::runtime_error("register: empty partial view " +
                                 std::to_string(i));
      completed = tensor_to_cloud(forward(params, mcfg, pair.partial).detail);
    }
    partials.push_back(apply_transform(pair.partial, pose));
    completes.push_back(apply_transform(completed, pose));
    if (i + 1 < frames) truth.push_back(step);
    pose = step.compose(pose);
  }
  const auto rows = registration_experiment(partials, completes, truth);

  echo_datagen(cfg, dcfg);
  cfg.set("register.frames", std::to_string(frames));
  cfg.set("register.kind", kind);
  cfg.set("register.angle_deg", fmt(angle_deg));
  write_effective(cfg, out);

  CsvWriter csv((out / "register.csv").string());
  csv.row({"pair_id", "input_kind", "rotation_error", "translation_error",
           "iterations", "failed"});
  for (const auto& row : rows)
    csv.row({std::to_string(row.pair_id), row.input_kind,
             fmt(row.rotation_error), fmt(row.translation_error),
             std::to_string(row.iterations), row.failed ? "1" : "0"});
  std::printf("registered %zu frame pairs into %s\n", truth.size(),
              out.string().c_str());
  return 0;
}

int run_keypoints(const CommonArgs& args, const std::string& checkpoint,
                  const std::string& input) {
  const fs::path out = require_out(args);
  ModelConfig mcfg;
  const ModelParams params = load_model(checkpoint, mcfg);
  const PointCloud cloud = ply_read(input);
  if (cloud.empty())
    throw std::runtime_error("keypoints: empty input cloud in " + input);
  const KeypointResult kp = keypoints(params, mcfg, cloud);

  KvConfig cfg = resolve_config(args);
  echo_model(cfg, mcfg);
  write_effective(cfg, out);

  std::ofstream txt(out / "keypoints.txt");
  if (!txt)
    throw std::runtime_error("cannot write " +
                             (out / "keypoints.txt").string());
  std::set<std::size_t> uni;
  for (std::size_t layer = 0; layer < kp.per_layer.size(); ++layer) {
    txt << "layer " << layer + 1 << ":";
    for (std::size_t idx : kp.per_layer[layer]) {
      txt << " " << idx;
      uni.insert(idx);
    }
    txt << "\n";
  }
  PointCloud selected;
  for (std::size_t idx : uni) selected.points.push_back(cloud[idx]);
  ply_write(selected, (out / "keypoints.ply").string());
  std::printf("%zu keypoints over %zu layer(s) into %s\n", uni.size(),
              kp.per_layer.size(), out.string().c_str());
  return 0;
}

int run_perturb(const CommonArgs& args, const std::string& data_dir) {
  KvConfig cfg = resolve_config(args);
  const fs::path out = require_out(args);
  const DatasetManifest src = read_manifest(data_dir);
  const DataGenConfig dcfg = src.config;

  const double noise = cfg.get_num("perturb.noise_sigma_rel", 0.0);
  const double occlusion = cfg.get_num("perturb.occlusion_p", 0.0);
  const double outliers = cfg.get_num("perturb.outlier_frac", 0.0);
  const float d_max = cfg.get_num("perturb.d_max", dcfg.camera_radius + 0.5f);
  const std::uint64_t seed = cfg.get_num<std::uint64_t>("seed", dcfg.seed);

  DatasetManifest dst = src;
  dst.root = out;
  fs::create_directories(out / "pairs");
  for (const auto& e : dst.entries) {
    // Re-render the entry's view, degrade the depth image, and back-project;
    // the complete and sub clouds pass through unchanged.
    const TriangleMesh mesh =
        procedural_shape(e.kind, dcfg.seed + 1000 * e.shape_id);
    DepthImage img;
    for (std::size_t attempt = 0;; ++attempt) {
      img = render_view(mesh, dcfg, e.shape_id, e.view_id, attempt);
      if (img.valid_count() > 0) break;
      if (attempt + 1 >= 8)
        throw std::runtime_error("perturb: no foreground pixels for shape " +
                                 std::to_string(e.shape_id));
    }
    const DepthImage degraded =
        perturb(img, noise, occlusion, outliers, d_max,
                Rng::derive(seed, e.shape_id, e.view_id).next_u64());
    ply_write(backproject(degraded), dst.pair_path(e, "partial").string());
    fs::copy_file(src.pair_path(e, "complete"),
                  dst.pair_path(e, "complete"),
                  fs::copy_options::overwrite_existing);
    fs::copy_file(src.pair_path(e, "sub"), dst.pair_path(e, "sub"),
                  fs::copy_options::overwrite_existing);
  }
  write_manifest(dst);

  echo_datagen(cfg, dcfg);
  cfg.set("perturb.noise_sigma_rel", fmt(noise));
  cfg.set("perturb.occlusion_p", fmt(occlusion));
  cfg.set("perturb.outlier_frac", fmt(outliers));
  cfg.set("perturb.d_max", fmt(d_max));
  cfg.set("seed", std::to_string(seed));
  write_effective(cfg, out);
  std::printf("perturbed %zu pairs into %s\n", dst.entries.size(),
              out.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"point cloud completion toolkit"};
  app.require_subcommand(1);

  CommonArgs params_args;
  auto* cmd_params = app.add_subcommand(
      "params", "Print parameter counts for named model configs");
  add_common(cmd_params, params_args, false);

  CommonArgs gen_args;
  std::size_t shapes_flag = 0;
  auto* cmd_gen =
      app.add_subcommand("gen-data", "Generate a synthetic dataset");
  add_common(cmd_gen, gen_args);
  cmd_gen->add_option("--shapes", shapes_flag, "Number of shapes");

  CommonArgs train_args;
  std::string train_data;
  auto* cmd_train = app.add_subcommand("train", "Train a completion model");
  add_common(cmd_train, train_args);
  cmd_train->add_option("--data", train_data, "Dataset directory")
      ->required();

  CommonArgs infer_args;
  std::string infer_ckpt;
  std::vector<std::string> infer_inputs;
  auto* cmd_infer =
      app.add_subcommand("infer", "Complete partial clouds from PLY files");
  add_common(cmd_infer, infer_args);
  cmd_infer->add_option("--checkpoint", infer_ckpt, "Model checkpoint")
      ->required();
  cmd_infer->add_option("inputs", infer_inputs, "Input PLY files")
      ->required();

  CommonArgs eval_args;
  std::string eval_ckpt, eval_data, eval_split = "test";
  auto* cmd_eval =
      app.add_subcommand("eval", "Score a checkpoint on a dataset split");
  add_common(cmd_eval, eval_args);
  cmd_eval->add_option("--checkpoint", eval_ckpt, "Model checkpoint")
      ->required();
  cmd_eval->add_option("--data", eval_data, "Dataset directory")->required();
  cmd_eval->add_option("--split", eval_split, "train, val, test, or all");

  CommonArgs robust_args;
  std::string robust_ckpt;
  auto* cmd_robust = app.add_subcommand(
      "robustness", "Sweep completion quality against input degradation");
  add_common(cmd_robust, robust_args);
  cmd_robust->add_option("--checkpoint", robust_ckpt, "Model checkpoint")
      ->required();

  CommonArgs reg_args;
  std::string reg_ckpt;
  auto* cmd_reg = app.add_subcommand(
      "register", "Register consecutive frames, partial vs completed");
  add_common(cmd_reg, reg_args);
  cmd_reg->add_option("--checkpoint", reg_ckpt,
                      "Model checkpoint (omit for oracle completions)");

  CommonArgs kp_args;
  std::string kp_ckpt, kp_input;
  auto* cmd_kp = app.add_subcommand(
      "keypoints", "Extract the critical input points of the encoder");
  add_common(cmd_kp, kp_args);
  cmd_kp->add_option("--checkpoint", kp_ckpt, "Model checkpoint")->required();
  cmd_kp->add_option("input", kp_input, "Input PLY file")->required();

  CommonArgs pert_args;
  std::string pert_data;
  auto* cmd_pert = app.add_subcommand(
      "perturb", "Copy a dataset with degraded partial views");
  add_common(cmd_pert, pert_args);
  cmd_pert->add_option("--data", pert_data, "Source dataset directory")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (cmd_params->parsed()) return run_params(params_args);
    if (cmd_gen->parsed()) return run_gen_data(gen_args, shapes_flag);
    if (cmd_train->parsed()) return run_train(train_args, train_data);
    if (cmd_infer->parsed())
      return run_infer(infer_args, infer_ckpt, infer_inputs);
    if (cmd_eval->parsed())
      return run_eval(eval_args, eval_ckpt, eval_data, eval_split);
    if (cmd_robust->parsed()) return run_robustness(robust_args, robust_ckpt);
    if (cmd_reg->parsed()) return run_register(reg_args, reg_ckpt);
    if (cmd_kp->parsed()) return run_keypoints(kp_args, kp_ckpt, kp_input);
    if (cmd_pert->parsed()) return run_perturb(pert_args, pert_data);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
