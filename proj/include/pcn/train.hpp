#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pcn/adam.hpp"
#include "pcn/datagen.hpp"
#include "pcn/metrics.hpp"
#include "pcn/model.hpp"
#include "pcn/rng.hpp"

namespace pcn {

struct AlphaPoint {
  std::size_t iteration;
  Scalar alpha;
};

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 4;  // full scale 32
  std::size_t max_iters = 0;   // 0: derived from epochs and dataset size
  Scalar lr = Scalar(1e-4);
  Scalar lr_decay = Scalar(0.7);
  std::size_t lr_decay_every = 50000;
  // Piecewise-constant alpha: value holds from its iteration onward.
  // Empty: ramp 0.01 / 0.1 / 1.0 at 0% / 10% / 30% of total iterations.
  std::vector<AlphaPoint> alpha_schedule;
  std::size_t eval_every = 0;        // 0: no mid-training eval
  std::size_t checkpoint_every = 0;  // 0: only final checkpoint
  std::uint64_t seed = 0;

  void validate() const {
    for (std::size_t i = 0; i < alpha_schedule.size(); ++i) {
      if (alpha_schedule[i].alpha < 0)
        throw std::invalid_argument("TrainConfig: alpha must be >= 0");
      if (i > 0 &&
          alpha_schedule[i].iteration <= alpha_schedule[i - 1].iteration)
        throw std::invalid_argument(
            "TrainConfig: alpha schedule iterations must strictly increase");
    }
  }

  std::vector<AlphaPoint> effective_alpha_schedule(
      std::size_t total_iters) const {
    if (!alpha_schedule.empty()) return alpha_schedule;
    return {{0, Scalar(0.01)},
            {total_iters / 10, Scalar(0.1)},
            {(3 * total_iters) / 10, Scalar(1.0)}};
  }
};

inline Scalar alpha_at(const std::vector<AlphaPoint>& schedule,
                       std::size_t iteration) {
  Scalar a = schedule.empty() ? Scalar(1) : schedule.front().alpha;
  for (const auto& pt : schedule)
    if (iteration >= pt.iteration) a = pt.alpha;
  return a;
}

struct TrainReportRow {
  std::size_t iteration;
  double total, d1, d2;
  double lr;
};

struct EvalRow {
  std::size_t shape_id, view_id;
  double cd;
  double emd_coarse;  // -1 when not computed
};

struct EvalReport {
  std::vector<EvalRow> rows;
  double mean_cd = 0;
  double mean_emd_coarse = 0;  // over rows that have one
};

struct TrainReport {
  std::vector<TrainReportRow> rows;
  std::vector<std::pair<std::size_t, EvalReport>> evals;
  double wall_seconds = 0;
};

// Mean CD between the detailed output and the ground truth for every pair;
// optionally the coarse-output EMD against the subsampled ground truth.
inline EvalReport evaluate(const ModelParams& params, const ModelConfig& mcfg,
                           const std::vector<TrainingPair>& pairs,
                           bool with_coarse_emd = true) {
  if (pairs.empty())
    throw std::invalid_argument("evaluate: empty split");
  EvalReport report;
  double sum_cd = 0, sum_emd = 0;
  std::size_t emd_count = 0;
  for (const auto& pair : pairs) {
    const auto out = forward(params, mcfg, pair.partial);
    const PointCloud detail_cloud = tensor_to_cloud(out.detail);
    EvalRow row{pair.shape_id, pair.view_id, 0, -1};
    row.cd = chamfer(detail_cloud, pair.complete);
    sum_cd += row.cd;
    if (with_coarse_emd && mcfg.decoder == DecoderVariant::kMultistage &&
        out.coarse.extent(0) == pair.complete_sub.size()) {
      const PointCloud coarse_cloud = tensor_to_cloud(out.coarse);
      row.emd_coarse = emd_approx(coarse_cloud, pair.complete_sub);
      sum_emd += row.emd_coarse;
      ++emd_count;
    }
    report.rows.push_back(row);
  }
  report.mean_cd = sum_cd / static_cast<double>(report.rows.size());
  report.mean_emd_coarse =
      emd_count ? sum_emd / static_cast<double>(emd_count) : -1;
  return report;
}

struct TrainResult {
  ModelParams params;
  AdamState optimizer;
  TrainReport report;
};

// Serializes the model together with the optimizer state so a resumed run
// reproduces the uninterrupted one. Optimizer blocks are prefixed "opt.".
inline void save_train_checkpoint(const ModelParams& params,
                                  const ModelConfig& mcfg,
                                  const AdamState& opt,
                                  const std::string& path) {
  ModelParams combined = params;
  if (!opt.first_moment.empty()) {
    for (std::size_t i = 0; i < params.tensors.size(); ++i) {
      combined.names.push_back("opt.m." + params.names[i]);
      combined.tensors.emplace_back(params.tensors[i].shape(),
                                    opt.first_moment[i], false);
      combined.names.push_back("opt.v." + params.names[i]);
      combined.tensors.emplace_back(params.tensors[i].shape(),
                                    opt.second_moment[i], false);
    }
  }
  combined.names.push_back("opt.step");
  combined.tensors.emplace_back(
      std::vector<std::size_t>{1},
      std::vector<Scalar>{static_cast<Scalar>(opt.step)}, false);
  save_checkpoint(combined, mcfg, path);
}

struct TrainCheckpoint {
  ModelConfig config;
  ModelParams params;
  AdamState optimizer;  // moments empty if the file has none
};

inline TrainCheckpoint load_train_checkpoint(const std::string& path) {
  const Checkpoint raw = load_checkpoint(path);
  TrainCheckpoint out;
  out.config = raw.config;
  for (std::size_t i = 0; i < raw.params.names.size(); ++i) {
    const auto& name = raw.params.names[i];
    if (name.rfind("opt.", 0) == 0) continue;
    out.params.names.push_back(name);
    out.params.tensors.push_back(raw.params.tensors[i]);
  }
  bool any_opt = false;
  for (const auto& n : raw.params.names)
    if (n.rfind("opt.m.", 0) == 0) any_opt = true;
  if (any_opt) {
    out.optimizer.first_moment.resize(out.params.names.size());
    out.optimizer.second_moment.resize(out.params.names.size());
    for (std::size_t i = 0; i < out.params.names.size(); ++i) {
      out.optimizer.first_moment[i] =
          raw.params.at("opt.m." + out.params.names[i]).data();
      out.optimizer.second_moment[i] =
          raw.params.at("opt.v." + out.params.names[i]).data();
    }
  }
  for (std::size_t i = 0; i < raw.params.names.size(); ++i)
    if (raw.params.names[i] == "opt.step")
      out.optimizer.step =
          static_cast<std::size_t>(raw.params.tensors[i].data()[0]);
  return out;
}

struct TrainOptions {
  std::filesystem::path out_dir;  // empty: no checkpoints written
  std::vector<TrainingPair> val_pairs;
  std::size_t start_iteration = 0;
};

// The optimization loop. Batch membership is a pure function of
// (seed, iteration), so checkpoint-resume replays the same batches.
// Variable-size partials are handled by per-sample forwards with
// gradient averaging.
inline TrainResult train(const ModelConfig& mcfg, const TrainConfig& tcfg,
                         const std::vector<TrainingPair>& pairs,
                         ModelParams initial_params = {},
                         AdamState initial_opt = {},
                         const TrainOptions& opts = {}) {
  if (pairs.empty())
    throw std::invalid_argument("train: empty dataset");
  tcfg.validate();
  mcfg.validate();

  TrainResult result;
  result.params = initial_params.tensors.empty()
                      ? init_params(mcfg, tcfg.seed)
                      : std::move(initial_params);
  result.optimizer = std::move(initial_opt);
  result.optimizer.lr = tcfg.lr;
  result.optimizer.decay_factor = tcfg.lr_decay;
  result.optimizer.decay_every = tcfg.lr_decay_every;

  const std::size_t batches_per_epoch =
      (pairs.size() + tcfg.batch_size - 1) / tcfg.batch_size;
  const std::size_t total_iters =
      tcfg.max_iters ? tcfg.max_iters : tcfg.epochs * batches_per_epoch;
  const auto alpha_schedule = tcfg.effective_alpha_schedule(total_iters);

  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t it = opts.start_iteration; it < total_iters; ++it) {
    Rng batch_rng = Rng::derive(tcfg.seed ^ 0x62617463ULL, it);
    const Scalar alpha = alpha_at(alpha_schedule, it);
    const Scalar inv_batch = Scalar(1) / static_cast<Scalar>(tcfg.batch_size);

    result.params.zero_grad();
    double total = 0, d1_sum = 0, d2_sum = 0;
    for (std::size_t b = 0; b < tcfg.batch_size; ++b) {
      const TrainingPair& pair =
          pairs[batch_rng.uniform_index(pairs.size())];
      const auto out = forward(result.params, mcfg, pair.partial);
      Tensor d1, d2;
      if (mcfg.decoder == DecoderVariant::kMultistage) {
        d1 = mcfg.coarse_loss == CoarseLoss::kEmd
                 ? emd_loss(out.coarse, pair.complete_sub)
                 : chamfer_loss(out.coarse, pair.complete_sub);
        d2 = chamfer_loss(out.detail, pair.complete);
      } else {
        // Single-stage baselines: the whole output against the ground
        // truth, no coarse term.
        d1 = Tensor::scalar(0);
        d2 = chamfer_loss(out.detail, pair.complete);
      }
      Tensor loss = add(d1, scale(d2, alpha));
      Tensor scaled = scale(loss, inv_batch);
      backward(scaled);
      total += loss.value();
      d1_sum += d1.value();
      d2_sum += d2.value();
    }
    total /= static_cast<double>(tcfg.batch_size);
    d1_sum /= static_cast<double>(tcfg.batch_size);
    d2_sum /= static_cast<double>(tcfg.batch_size);

    if (std::isnan(total))
      throw std::runtime_error("train: NaN loss at iteration " +
                               std::to_string(it));

    adam_step(result.params.tensors, result.optimizer, result.params.names);
    result.report.rows.push_back(
        {it, total, d1_sum, d2_sum,
         static_cast<double>(result.optimizer.effective_lr())});

    if (tcfg.eval_every && (it + 1) % tcfg.eval_every == 0 &&
        !opts.val_pairs.empty())
      result.report.evals.emplace_back(
          it + 1, evaluate(result.params, mcfg, opts.val_pairs));

    if (!opts.out_dir.empty() && tcfg.checkpoint_every &&
        (it + 1) % tcfg.checkpoint_every == 0)
      save_train_checkpoint(
          result.params, mcfg, result.optimizer,
          (opts.out_dir / ("checkpoint_" + std::to_string(it + 1) + ".pcn"))
              .string());
  }
  if (!opts.out_dir.empty())
    save_train_checkpoint(result.params, mcfg, result.optimizer,
                          (opts.out_dir / "checkpoint_final.pcn").string());
  result.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return result;
}

struct RobustnessRow {
  double occlusion_p = 0;
  std::size_t partial_points = 0;
  double cd = -1;
  double emd_coarse = -1;
  bool failed = false;  // fully occluded input
};

// Completion quality as the source depth image degrades.
inline std::vector<RobustnessRow> robustness_sweep(
    const ModelParams& params, const ModelConfig& mcfg,
    const TriangleMesh& mesh, const PointCloud& gt_complete,
    const PointCloud& gt_sub, const DataGenConfig& dcfg, std::size_t shape_id,
    std::size_t view_id, const std::vector<double>& p_values,
    double noise_sigma_rel, double outlier_frac, float d_max,
    std::uint64_t seed) {
  for (double p : p_values)
    if (p < 0 || p > 0.8)
      throw std::invalid_argument(
          "robustness_sweep: occlusion levels must lie in [0, 0.8]");
  const DepthImage clean = render_view(mesh, dcfg, shape_id, view_id);
  std::vector<RobustnessRow> rows;
  for (double p : p_values) {
    RobustnessRow row;
    row.occlusion_p = p;
    const DepthImage noisy =
        perturb(clean, noise_sigma_rel, p, outlier_frac, d_max, seed);
    const PointCloud partial = backproject(noisy);
    row.partial_points = partial.size();
    if (partial.empty()) {
      row.failed = true;
      rows.push_back(row);
      continue;
    }
    const auto out = forward(params, mcfg, partial);
    row.cd = chamfer(tensor_to_cloud(out.detail), gt_complete);
    if (mcfg.decoder == DecoderVariant::kMultistage &&
        out.coarse.extent(0) == gt_sub.size())
      row.emd_coarse = emd_approx(tensor_to_cloud(out.coarse), gt_sub);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace pcn
