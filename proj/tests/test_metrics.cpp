#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "pcn/assignment.hpp"
#include "pcn/metrics.hpp"

using namespace pcn;
using pcn::test::brute_force_chamfer;
using pcn::test::random_cloud;

TEST_CASE("chamfer distance follows the unsquared, per-cloud-mean form") {
  SECTION("identical clouds give zero") {
    Rng rng(1);
    const PointCloud c = random_cloud(50, rng);
    CHECK(chamfer(c, c) == 0.0);
  }
  SECTION("hand-enumerated two-vs-one example") {
    PointCloud s1, s2;
    s1.points = {{0, 0, 0}, {1, 0, 0}};
    s2.points = {{0, 0, 0}};
    CHECK(chamfer(s1, s2) == Catch::Approx(0.5));
  }
  SECTION("symmetric in its arguments") {
    Rng rng(2);
    const PointCloud a = random_cloud(40, rng);
    const PointCloud b = random_cloud(70, rng);
    CHECK(chamfer(a, b) == Catch::Approx(chamfer(b, a)));
  }
  SECTION("matches the brute-force oracle up to n=512") {
    Rng rng(3);
    for (std::size_t n : {5, 33, 128, 512}) {
      const PointCloud a = random_cloud(n, rng);
      const PointCloud b = random_cloud(n / 2 + 1, rng);
      CHECK(std::fabs(chamfer(a, b) - brute_force_chamfer(a, b)) < 1e-6);
    }
  }
  SECTION("nonnegative, zero only for equal sets") {
    Rng rng(4);
    const PointCloud a = random_cloud(20, rng);
    PointCloud b = a;
    b[0] = b[0] + Vec3{0.5f, 0, 0};
    CHECK(chamfer(a, b) > 0.0);
  }
  SECTION("empty cloud rejected") {
    PointCloud a, b;
    a.points = {{0, 0, 0}};
    CHECK_THROWS_AS(chamfer(a, b), std::invalid_argument);
  }
}

TEST_CASE("exact EMD by permutation search") {
  SECTION("identical clouds: zero cost") {
    Rng rng(5);
    const PointCloud c = random_cloud(6, rng);
    const auto r = emd_exact(c, c);
    CHECK(r.cost == Catch::Approx(0.0));
  }
  SECTION("two-point pair shifted by unit y") {
    PointCloud s1, s2;
    s1.points = {{0, 0, 0}, {1, 0, 0}};
    s2.points = {{0, 1, 0}, {1, 1, 0}};
    const auto r = emd_exact(s1, s2);
    CHECK(r.cost == Catch::Approx(1.0));
    CHECK(r.matching == std::vector<std::size_t>{0, 1});
  }
  SECTION("cost is symmetric under argument swap") {
    Rng rng(6);
    const PointCloud a = random_cloud(7, rng);
    const PointCloud b = random_cloud(7, rng);
    CHECK(emd_exact(a, b).cost == Catch::Approx(emd_exact(b, a).cost));
  }
  SECTION("size mismatch rejected") {
    PointCloud a, b;
    a.points = {{0, 0, 0}};
    b.points = {{0, 0, 0}, {1, 0, 0}};
    CHECK_THROWS_AS(emd_exact(a, b), std::invalid_argument);
  }
  SECTION("matching is a bijection") {
    Rng rng(7);
    const PointCloud a = random_cloud(8, rng);
    const PointCloud b = random_cloud(8, rng);
    auto m = emd_exact(a, b).matching;
    std::sort(m.begin(), m.end());
    for (std::size_t i = 0; i < m.size(); ++i) CHECK(m[i] == i);
  }
}

TEST_CASE("auction EMD approximation") {
  SECTION("identical clouds: cost below epsilon") {
    Rng rng(8);
    const PointCloud c = random_cloud(64, rng);
    CHECK(emd_approx(c, c, 1e-3) < 1e-3);
  }
  SECTION("within max(1%, epsilon) of the exact oracle for n <= 8") {
    Rng rng(9);
    for (int trial = 0; trial < 500; ++trial) {
      const std::size_t n = 2 + rng.uniform_index(7);
      const PointCloud a = random_cloud(n, rng);
      const PointCloud b = random_cloud(n, rng);
      const double eps = 1e-3;
      const double exact = emd_exact(a, b).cost;
      const double approx = emd_approx(a, b, eps);
      REQUIRE(approx >= exact - 1e-6);
      REQUIRE(approx <= exact * 1.01 + eps);
    }
  }
  SECTION("permuted self-pair recovers a near-perfect matching at n=1024") {
    Rng rng(10);
    const PointCloud a = random_cloud(1024, rng);
    PointCloud b = a;
    // Fisher-Yates shuffle.
    for (std::size_t i = b.size() - 1; i > 0; --i)
      std::swap(b.points[i], b.points[rng.uniform_index(i + 1)]);
    const double eps = 1e-3;
    CHECK(emd_approx(a, b, eps) < eps);
  }
  SECTION("matching is a bijection") {
    Rng rng(11);
    const PointCloud a = random_cloud(100, rng);
    const PointCloud b = random_cloud(100, rng);
    auto m = emd_approx_assignment(a, b).matching;
    std::sort(m.begin(), m.end());
    for (std::size_t i = 0; i < m.size(); ++i) REQUIRE(m[i] == i);
  }
  SECTION("deterministic for fixed inputs and epsilon") {
    Rng rng(12);
    const PointCloud a = random_cloud(50, rng);
    const PointCloud b = random_cloud(50, rng);
    CHECK(emd_approx(a, b, 1e-4) == emd_approx(a, b, 1e-4));
  }
  SECTION("size mismatch rejected") {
    PointCloud a, b;
    a.points = {{0, 0, 0}};
    b.points = {{0, 0, 0}, {1, 0, 0}};
    CHECK_THROWS_AS(emd_approx(a, b), std::invalid_argument);
  }
}

TEST_CASE("fidelity") {
  SECTION("input contained in output gives zero") {
    Rng rng(13);
    PointCloud out = random_cloud(30, rng);
    PointCloud in;
    in.points.assign(out.points.begin(), out.points.begin() + 10);
    CHECK(fidelity(in, out) == 0.0);
  }
  SECTION("single-point example") {
    PointCloud in, out;
    in.points = {{0, 0, 0}};
    out.points = {{1, 0, 0}};
    CHECK(fidelity(in, out) == Catch::Approx(1.0));
  }
  SECTION("not symmetric") {
    PointCloud a, b;
    a.points = {{0, 0, 0}};
    b.points = {{0, 0, 0}, {5, 0, 0}};
    CHECK(fidelity(a, b) == 0.0);
    CHECK(fidelity(b, a) == Catch::Approx(2.5));
  }
}

TEST_CASE("minimal matching distance") {
  Rng rng(14);
  std::vector<PointCloud> db;
  for (int i = 0; i < 5; ++i) db.push_back(random_cloud(40, rng));
  SECTION("exact database entry gives zero at its index") {
    const auto r = mmd(db[3], db);
    CHECK(r.distance == 0.0);
    CHECK(r.index == 3);
  }
  SECTION("database of one reduces to plain CD") {
    const PointCloud q = random_cloud(25, rng);
    const auto r = mmd(q, {db[0]});
    CHECK(r.distance == Catch::Approx(chamfer(q, db[0])));
    CHECK(r.index == 0);
  }
  SECTION("matches the exhaustive loop oracle and lower-bounds each entry") {
    const PointCloud q = random_cloud(25, rng);
    const auto r = mmd(q, db);
    double best = std::numeric_limits<double>::max();
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < db.size(); ++i) {
      const double d = chamfer(q, db[i]);
      CHECK(r.distance <= d + 1e-12);
      if (d < best) {
        best = d;
        best_i = i;
      }
    }
    CHECK(r.index == best_i);
    CHECK(r.distance == Catch::Approx(best));
  }
  SECTION("empty database rejected") {
    CHECK_THROWS_AS(mmd(db[0], {}), std::invalid_argument);
  }
}

TEST_CASE("consistency over frames") {
  Rng rng(15);
  const PointCloud f0 = random_cloud(30, rng);
  const PointCloud f1 = random_cloud(30, rng);
  const PointCloud f2 = random_cloud(30, rng);
  SECTION("identical frames give zero") {
    CHECK(consistency({f0, f0, f0}) == 0.0);
  }
  SECTION("two frames reduce to one CD") {
    CHECK(consistency({f0, f1}) == Catch::Approx(chamfer(f0, f1)));
  }
  SECTION("three frames: mean of the two pair CDs") {
    const double want = (chamfer(f0, f1) + chamfer(f1, f2)) / 2.0;
    CHECK(consistency({f0, f1, f2}) == Catch::Approx(want));
  }
  SECTION("fewer than two frames rejected") {
    CHECK_THROWS_AS(consistency({f0}), std::invalid_argument);
  }
}

TEST_CASE("distance fields") {
  SECTION("point at a voxel center zeroes that voxel") {
    PointCloud c;
    // Center of voxel (0,0,0) on a 2^3 grid over [-0.5, 0.5]^3.
    c.points = {{-0.25f, -0.25f, -0.25f}};
    const DistanceField df = to_distance_field(c, 2);
    CHECK(df.at(0, 0, 0) == 0.0f);
  }
  SECTION("2^3 grid around one point matches hand computation") {
    PointCloud c;
    c.points = {{0, 0, 0}};
    const DistanceField df = to_distance_field(c, 2);
    const float want = std::sqrt(3.0f) * 0.25f;
    for (float v : df.values) CHECK(v == Catch::Approx(want).margin(1e-6));
  }
  SECTION("values bounded by the bounds diameter") {
    Rng rng(16);
    const PointCloud c = random_cloud(10, rng, -0.5, 0.5);
    const DistanceField df = to_distance_field(c, 8);
    const float diam = std::sqrt(3.0f);
    for (float v : df.values) {
      CHECK(v >= 0.0f);
      CHECK(v <= diam);
    }
  }
  SECTION("empty cloud rejected") {
    CHECK_THROWS_AS(to_distance_field({}, 4), std::invalid_argument);
  }
}

TEST_CASE("distance-field L1") {
  Rng rng(17);
  const PointCloud a = random_cloud(20, rng, -0.5, 0.5);
  const PointCloud b = random_cloud(20, rng, -0.5, 0.5);
  const DistanceField da = to_distance_field(a, 4);
  const DistanceField db = to_distance_field(b, 4);
  SECTION("field vs itself is zero") { CHECK(l1_field(da, da) == 0.0); }
  SECTION("constant fields give the constant gap") {
    DistanceField c1 = da, c2 = da;
    std::fill(c1.values.begin(), c1.values.end(), 0.75f);
    std::fill(c2.values.begin(), c2.values.end(), 0.25f);
    CHECK(l1_field(c1, c2) == Catch::Approx(0.5));
  }
  SECTION("random pair matches the loop oracle") {
    double sum = 0;
    for (std::size_t i = 0; i < da.values.size(); ++i)
      sum += std::fabs(double(da.values[i]) - db.values[i]);
    CHECK(l1_field(da, db) ==
          Catch::Approx(sum / double(da.values.size())));
  }
  SECTION("mask restricts the average") {
    std::vector<bool> mask(da.values.size(), false);
    mask[0] = true;
    CHECK(l1_field(da, db, &mask) ==
          Catch::Approx(std::fabs(double(da.values[0]) - db.values[0])));
  }
  SECTION("geometry mismatch rejected") {
    const DistanceField other = to_distance_field(a, 5);
    CHECK_THROWS_AS(l1_field(da, other), std::invalid_argument);
  }
}

TEST_CASE("registration error formulas") {
  const std::array<float, 4> qi{1, 0, 0, 0};
  const float h = std::sqrt(0.5f);
  const std::array<float, 4> q90{h, 0, 0, h};  // 90 degrees about z
  SECTION("equal quaternions give zero") {
    CHECK(rotation_error(qi, qi) == Catch::Approx(0.0).margin(1e-6));
  }
  SECTION("sign flip is invisible (double cover)") {
    const std::array<float, 4> neg{-q90[0], -q90[1], -q90[2], -q90[3]};
    // acos near 1 amplifies float error by ~sqrt, hence the loose margin.
    CHECK(rotation_error(q90, neg) == Catch::Approx(0.0).margin(5e-3));
    CHECK(rotation_error(qi, q90) ==
          Catch::Approx(rotation_error(q90, qi)));
  }
  SECTION("identity vs 90 degrees about z evaluates to pi") {
    CHECK(rotation_error(qi, q90) == Catch::Approx(M_PI).margin(1e-5));
  }
  SECTION("non-unit quaternion rejected") {
    CHECK_THROWS_AS(rotation_error({2, 0, 0, 0}, qi), std::invalid_argument);
  }
  SECTION("translation error") {
    CHECK(translation_error({0, 0, 0}, {3, 4, 0}) == Catch::Approx(5.0));
    CHECK(translation_error({1, 1, 1}, {1, 1, 1}) == 0.0);
    CHECK(translation_error({0, 1, 0}, {2, 0, 0}) ==
          Catch::Approx(translation_error({2, 0, 0}, {0, 1, 0})));
  }
}
