// Gradient checks in a double-precision build, where central finite
// differences with h = 1e-6 resolve the analytic gradient to ~1e-9 and the
// tolerances can be tight.
#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "pcn/model.hpp"

using namespace pcn;
using namespace pcn::test;

namespace {

constexpr double kH = 1e-6;
constexpr double kOpTol = 1e-6;
constexpr double kModelTol = 1e-6;

ModelConfig micro_config() {
  ModelConfig cfg;
  cfg.encoder_mlp1_widths = {16, 32};
  cfg.encoder_mlp2_widths = {32, 64};
  cfg.bottleneck = 64;
  cfg.coarse_size = 16;
  cfg.grid_size = 2;
  cfg.grid_scale = 0.1f;
  cfg.folding_mlp_widths = {16, 16, 3};
  cfg.coarse_fc_widths = {32, 32};
  cfg.validate();
  return cfg;
}

}  // namespace

TEST_CASE("op gradients match finite differences") {
  Rng rng(64);
  Tensor x = random_tensor({5, 3}, rng, true);
  Tensor w = random_tensor({3, 4}, rng, true);
  Tensor b = random_tensor({4}, rng, true);

  SECTION("linear, all three leaves") {
    auto loss_fn = [&]() { return linear(x, w, b); };
    CHECK(max_grad_rel_error(x, loss_fn, kH) < kOpTol);
    CHECK(max_grad_rel_error(w, loss_fn, kH) < kOpTol);
    CHECK(max_grad_rel_error(b, loss_fn, kH) < kOpTol);
  }
  SECTION("relu") {
    auto loss_fn = [&]() { return relu(linear(x, w, b)); };
    CHECK(max_grad_rel_error(x, loss_fn, kH) < kOpTol);
    CHECK(max_grad_rel_error(w, loss_fn, kH) < kOpTol);
  }
  SECTION("max pool over points") {
    auto loss_fn = [&]() { return max_pool_points(linear(x, w, b)).pooled; };
    CHECK(max_grad_rel_error(x, loss_fn, kH) < kOpTol);
  }
  SECTION("feature concatenation, both leaves") {
    Tensor g = random_tensor({4}, rng, true);
    Tensor w2 = random_tensor({7, 2}, rng, false);
    Tensor b2 = random_tensor({2}, rng, false);
    // Mix the concatenated columns so every entry matters.
    auto loss_fn = [&]() { return linear(concat_feature(x, g), w2, b2); };
    CHECK(max_grad_rel_error(x, loss_fn, kH) < kOpTol);
    CHECK(max_grad_rel_error(g, loss_fn, kH) < kOpTol);
  }
  SECTION("add, scale, reshape, sum") {
    Tensor y = random_tensor({5, 3}, rng, true);
    auto loss_fn = [&]() {
      return sum(reshape(add(scale(x, Scalar(1.7)), y), {15}));
    };
    CHECK(max_grad_rel_error(x, loss_fn, kH) < kOpTol);
    CHECK(max_grad_rel_error(y, loss_fn, kH) < kOpTol);
  }
  SECTION("shared mlp chain") {
    Tensor w2 = random_tensor({4, 3}, rng, true);
    Tensor b2 = random_tensor({3}, rng, true);
    auto loss_fn = [&]() { return shared_mlp(x, {{w, b}, {w2, b2}}); };
    CHECK(max_grad_rel_error(x, loss_fn, kH) < kOpTol);
    CHECK(max_grad_rel_error(w2, loss_fn, kH) < kOpTol);
  }
}

TEST_CASE("loss gradients match finite differences") {
  Rng rng(65);
  Tensor pred = random_tensor({12, 3}, rng, true);
  const PointCloud target = random_cloud(20, rng);
  const PointCloud target_eq = random_cloud(12, rng);

  SECTION("chamfer") {
    auto loss_fn = [&]() { return chamfer_loss(pred, target); };
    CHECK(max_grad_rel_error(pred, loss_fn, kH) < kOpTol);
  }
  SECTION("emd") {
    auto loss_fn = [&]() { return emd_loss(pred, target_eq); };
    CHECK(max_grad_rel_error(pred, loss_fn, kH) < kOpTol);
  }
  SECTION("combined two-term loss, both coarse metrics") {
    Tensor coarse = random_tensor({12, 3}, rng, true);
    Tensor fine = random_tensor({30, 3}, rng, true);
    const PointCloud gt = random_cloud(25, rng);
    for (const CoarseLoss metric : {CoarseLoss::kCd, CoarseLoss::kEmd}) {
      auto loss_fn = [&]() {
        return completion_loss(coarse, fine, gt, target_eq, Scalar(0.5),
                               metric);
      };
      CHECK(max_grad_rel_error(coarse, loss_fn, kH) < kOpTol);
      CHECK(max_grad_rel_error(fine, loss_fn, kH) < kOpTol);
    }
  }
}

TEST_CASE("end-to-end model gradients match finite differences") {
  const ModelConfig cfg = micro_config();
  Rng rng(66);
  const PointCloud input = random_cloud(24, rng);
  const PointCloud gt = random_cloud(48, rng);
  const PointCloud gt_sub = random_cloud(cfg.coarse_size, rng);

  ModelParams params = init_params(cfg, 66);
  auto loss_fn = [&]() {
    const auto out = forward(params, cfg, input);
    return completion_loss(out.coarse, out.detail, gt, gt_sub, Scalar(0.5),
                           cfg.coarse_loss);
  };
  for (auto& t : params.tensors)
    CHECK(max_grad_rel_error(t, loss_fn, kH) < kModelTol);
}
