#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "pcn/point_cloud.hpp"
#include "pcn/rng.hpp"
#include "pcn/tensor.hpp"

namespace pcn::test {

inline PointCloud random_cloud(std::size_t n, Rng& rng, double lo = -1.0,
                               double hi = 1.0) {
  PointCloud c;
  c.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    c.points.push_back({static_cast<float>(rng.uniform(lo, hi)),
                        static_cast<float>(rng.uniform(lo, hi)),
                        static_cast<float>(rng.uniform(lo, hi))});
  return c;
}

// O(n) scan oracle for nearest neighbor, lowest index on ties.
inline std::pair<std::size_t, float> brute_force_nn(const PointCloud& cloud,
                                                    const Vec3& query) {
  std::size_t best_i = 0;
  float best_d = std::numeric_limits<float>::max();
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const float d = squared_dist(cloud[i], query);
    if (d < best_d) {
      best_d = d;
      best_i = i;
    }
  }
  return {best_i, std::sqrt(best_d)};
}

// O(n^2) Chamfer oracle with unsquared norms.
inline double brute_force_chamfer(const PointCloud& a, const PointCloud& b) {
  double sum_ab = 0;
  for (const auto& p : a.points) sum_ab += brute_force_nn(b, p).second;
  double sum_ba = 0;
  for (const auto& p : b.points) sum_ba += brute_force_nn(a, p).second;
  return sum_ab / static_cast<double>(a.size()) +
         sum_ba / static_cast<double>(b.size());
}

// Central finite differences against the analytic gradient of sum(loss_fn()).
// loss_fn may return a non-scalar tensor; the numeric side reduces it in
// double and divides by the step actually realized at Scalar precision, so
// the oracle stays accurate even in 32-bit builds. Returns the max relative
// error over entries whose numeric gradient is not tiny.
inline double max_grad_rel_error(
    Tensor& leaf, const std::function<Tensor()>& loss_fn, double h) {
  auto eval = [&]() {
    Tensor t = loss_fn();
    double s = 0;
    for (Scalar v : t.data()) s += static_cast<double>(v);
    return s;
  };
  leaf.zero_grad();
  Tensor loss = sum(loss_fn());
  backward(loss);
  std::vector<Scalar> analytic = leaf.grad();

  double max_rel = 0;
  for (std::size_t i = 0; i < leaf.numel(); ++i) {
    const Scalar orig = leaf.data()[i];
    leaf.data()[i] = orig + static_cast<Scalar>(h);
    const double xp = static_cast<double>(leaf.data()[i]);
    const double fp = eval();
    leaf.data()[i] = orig - static_cast<Scalar>(h);
    const double xm = static_cast<double>(leaf.data()[i]);
    const double fm = eval();
    leaf.data()[i] = orig;
    const double numeric = (fp - fm) / (xp - xm);
    const double denom = std::max(std::abs(numeric), 1e-2);
    max_rel = std::max(
        max_rel, std::abs(static_cast<double>(analytic[i]) - numeric) / denom);
  }
  return max_rel;
}

inline Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng,
                            bool requires_grad, double lo = -1.0,
                            double hi = 1.0) {
  std::vector<Scalar> data(detail::shape_numel(shape));
  for (auto& v : data) v = static_cast<Scalar>(rng.uniform(lo, hi));
  return Tensor(std::move(shape), std::move(data), requires_grad);
}

}  // namespace pcn::test
