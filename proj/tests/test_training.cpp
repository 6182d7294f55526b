#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "helpers.hpp"
#include "pcn/train.hpp"

using namespace pcn;
namespace fs = std::filesystem;

namespace {

DataGenConfig tiny_datagen(std::uint64_t seed) {
  DataGenConfig cfg;
  cfg.n_complete = 256;
  cfg.coarse_size = 64;
  cfg.render_width = 64;
  cfg.render_height = 48;
  cfg.focal = 48.0f;
  cfg.seed = seed;
  return cfg;
}

std::vector<TrainingPair> one_pair_dataset(std::uint64_t seed) {
  const DataGenConfig cfg = tiny_datagen(seed);
  const TriangleMesh mesh = procedural_shape("table", seed);
  return {make_pair(mesh, 0, 0, cfg)};
}

TrainConfig quick_train(std::size_t iters, std::uint64_t seed) {
  TrainConfig t;
  t.batch_size = 1;
  t.max_iters = iters;
  t.lr = Scalar(1e-3);
  t.alpha_schedule = {{0, Scalar(1)}};
  t.seed = seed;
  return t;
}

}  // namespace

TEST_CASE("alpha schedule") {
  SECTION("piecewise-constant lookup") {
    const std::vector<AlphaPoint> sched{{0, Scalar(0.01)},
                                        {100, Scalar(0.1)},
                                        {300, Scalar(1)}};
    CHECK(alpha_at(sched, 0) == Scalar(0.01));
    CHECK(alpha_at(sched, 99) == Scalar(0.01));
    CHECK(alpha_at(sched, 100) == Scalar(0.1));
    CHECK(alpha_at(sched, 1000) == Scalar(1));
  }
  SECTION("default ramp sits at 10% and 30% of the run") {
    TrainConfig t;
    const auto sched = t.effective_alpha_schedule(1000);
    REQUIRE(sched.size() == 3);
    CHECK(sched[1].iteration == 100);
    CHECK(sched[2].iteration == 300);
    CHECK(sched[2].alpha == Scalar(1));
  }
  SECTION("validation rejects bad schedules") {
    TrainConfig t;
    t.alpha_schedule = {{0, Scalar(-1)}};
    CHECK_THROWS_AS(t.validate(), std::invalid_argument);
    t.alpha_schedule = {{10, Scalar(1)}, {10, Scalar(2)}};
    CHECK_THROWS_AS(t.validate(), std::invalid_argument);
  }
}

TEST_CASE("learning-rate decay") {
  AdamState opt;
  opt.lr = Scalar(1e-4);
  CHECK(opt.effective_lr() == Scalar(1e-4));
  opt.step = 49999;
  CHECK(opt.effective_lr() == Scalar(1e-4));
  opt.step = 50000;
  CHECK(opt.effective_lr() == Catch::Approx(7e-5));
  opt.step = 100000;
  CHECK(opt.effective_lr() == Catch::Approx(4.9e-5));
}

TEST_CASE("evaluation") {
  const auto mcfg = ModelConfig::preset("toy");
  const ModelParams params = init_params(mcfg, 2);
  auto pairs = one_pair_dataset(3);
  SECTION("an oracle-perfect output scores zero CD") {
    // Make the ground truth equal whatever the model emits.
    const auto out = forward(params, mcfg, pairs[0].partial);
    TrainingPair oracle = pairs[0];
    oracle.complete = tensor_to_cloud(out.detail);
    const EvalReport r = evaluate(params, mcfg, {oracle}, false);
    CHECK(r.rows.size() == 1);
    CHECK(r.mean_cd == 0.0);
  }
  SECTION("one row per pair, mean equals the loop mean") {
    auto more = pairs;
    const DataGenConfig dcfg = tiny_datagen(3);
    const TriangleMesh mesh = procedural_shape("table", 3);
    more.push_back(make_pair(mesh, 0, 1, dcfg));
    more.push_back(make_pair(mesh, 0, 2, dcfg));
    const EvalReport r = evaluate(params, mcfg, more);
    REQUIRE(r.rows.size() == 3);
    double sum = 0;
    for (const auto& row : r.rows) sum += row.cd;
    CHECK(r.mean_cd == Catch::Approx(sum / 3.0));
    for (const auto& row : r.rows) CHECK(row.emd_coarse >= 0);
  }
  SECTION("does not mutate the parameters") {
    std::vector<std::vector<Scalar>> before;
    for (const auto& t : params.tensors) before.push_back(t.data());
    evaluate(params, mcfg, pairs);
    for (std::size_t i = 0; i < params.tensors.size(); ++i)
      CHECK(params.tensors[i].data() == before[i]);
  }
  SECTION("empty split rejected") {
    CHECK_THROWS_AS(evaluate(params, mcfg, {}), std::invalid_argument);
  }
}

TEST_CASE("training loop") {
  const auto mcfg = ModelConfig::preset("toy");
  SECTION("two runs with equal seeds produce identical loss curves") {
    const auto pairs = one_pair_dataset(4);
    const TrainConfig tcfg = quick_train(8, 5);
    const TrainResult a = train(mcfg, tcfg, pairs);
    const TrainResult b = train(mcfg, tcfg, pairs);
    REQUIRE(a.report.rows.size() == b.report.rows.size());
    for (std::size_t i = 0; i < a.report.rows.size(); ++i)
      CHECK(a.report.rows[i].total == b.report.rows[i].total);
    for (std::size_t i = 0; i < a.params.tensors.size(); ++i)
      CHECK(a.params.tensors[i].data() == b.params.tensors[i].data());
  }
  SECTION("loss decreases over the first 50 overfit iterations") {
    int improved = 0;
    for (std::uint64_t seed : {11, 12, 13}) {
      const auto pairs = one_pair_dataset(seed);
      const TrainResult r = train(mcfg, quick_train(50, seed), pairs);
      double early = 0, late = 0;
      for (std::size_t i = 0; i < 10; ++i) {
        early += r.report.rows[i].total;
        late += r.report.rows[40 + i].total;
      }
      if (late < early) ++improved;
    }
    CHECK(improved == 3);
  }
  SECTION("NaN loss aborts with the iteration number") {
    auto pairs = one_pair_dataset(6);
    ModelParams params = init_params(mcfg, 6);
    // The final folding bias feeds the output directly, so the NaN cannot
    // be masked by a ReLU or a maxpool on the way out.
    params.at("dec.fold.l2.b").data()[0] =
        std::numeric_limits<Scalar>::quiet_NaN();
    try {
      train(mcfg, quick_train(3, 6), pairs, std::move(params));
      FAIL("expected NaN abort");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find("iteration 0") != std::string::npos);
    }
  }
  SECTION("checkpoint-resume reproduces the uninterrupted run") {
    const auto pairs = one_pair_dataset(7);
    const fs::path dir = "/tmp/pcn_train_ckpt";
    fs::remove_all(dir);
    fs::create_directories(dir);

    TrainConfig tcfg = quick_train(10, 8);
    const TrainResult full = train(mcfg, tcfg, pairs);

    TrainConfig half = tcfg;
    half.max_iters = 5;
    half.checkpoint_every = 5;
    TrainOptions opts;
    opts.out_dir = dir;
    train(mcfg, half, pairs, {}, {}, opts);

    TrainCheckpoint ckpt =
        load_train_checkpoint((dir / "checkpoint_5.pcn").string());
    CHECK(ckpt.optimizer.step == 5);
    TrainOptions resume_opts;
    resume_opts.start_iteration = 5;
    const TrainResult resumed =
        train(ckpt.config, tcfg, pairs, std::move(ckpt.params),
              std::move(ckpt.optimizer), resume_opts);

    REQUIRE(resumed.params.tensors.size() == full.params.tensors.size());
    for (std::size_t i = 0; i < full.params.tensors.size(); ++i)
      CHECK(resumed.params.tensors[i].data() ==
            full.params.tensors[i].data());
    fs::remove_all(dir);
  }
  SECTION("empty dataset rejected") {
    CHECK_THROWS_AS(train(mcfg, quick_train(1, 1), {}),
                    std::invalid_argument);
  }
}

TEST_CASE("overfit memorization") {
  const auto mcfg = ModelConfig::preset("toy");
  const auto pairs = one_pair_dataset(12);
  TrainConfig tcfg = quick_train(500, 12);
  tcfg.lr_decay = Scalar(0.5);
  tcfg.lr_decay_every = 150;
  const TrainResult r = train(mcfg, tcfg, pairs);
  const EvalReport eval = evaluate(r.params, mcfg, pairs, false);
  CHECK(eval.mean_cd < 0.05);
}

TEST_CASE("robustness sweep") {
  const auto mcfg = ModelConfig::preset("toy");
  const ModelParams params = init_params(mcfg, 10);
  const DataGenConfig dcfg = tiny_datagen(10);
  const TriangleMesh mesh = procedural_shape("box", 10);
  const TrainingPair pair = make_pair(mesh, 0, 0, dcfg);

  SECTION("one row per p; p=0 with no noise matches the baseline") {
    const auto rows =
        robustness_sweep(params, mcfg, mesh, pair.complete,
                         pair.complete_sub, dcfg, 0, 0, {0.0, 0.4, 0.8}, 0.0,
                         0.0, 1.6f, 21);
    REQUIRE(rows.size() == 3);
    const EvalReport base = evaluate(params, mcfg, {pair}, false);
    CHECK(rows[0].cd == Catch::Approx(base.mean_cd));
    for (const auto& row : rows) CHECK(!row.failed);
  }
  SECTION("out-of-range p rejected") {
    CHECK_THROWS_AS(
        robustness_sweep(params, mcfg, mesh, pair.complete,
                         pair.complete_sub, dcfg, 0, 0, {0.9}, 0, 0, 1.6f, 1),
        std::invalid_argument);
  }
  SECTION("an emptied view is flagged, not fatal") {
    // A render with almost no foreground: heavy occlusion removes all of it.
    DataGenConfig micro = dcfg;
    micro.render_width = 8;
    micro.render_height = 8;
    micro.focal = 2.0f;
    const auto rows =
        robustness_sweep(params, mcfg, mesh, pair.complete,
                         pair.complete_sub, micro, 0, 0, {0.8}, 0, 0, 1.6f,
                         22);
    REQUIRE(rows.size() == 1);
    if (rows[0].failed) {
      CHECK(rows[0].partial_points == 0);
      CHECK(rows[0].cd == -1);
    }
  }
}
