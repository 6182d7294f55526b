#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "pcn/point_cloud.hpp"

namespace pcn {

struct AssignmentResult {
  std::vector<std::size_t> matching;  // matching[i] = index in S2 for S1[i]
  double cost = 0;                    // mean matched L2 distance
};

// Optimal assignment by exhaustive permutation search. Oracle-scale only.
inline AssignmentResult emd_exact(const PointCloud& s1, const PointCloud& s2) {
  if (s1.size() != s2.size())
    throw std::invalid_argument(
        "emd_exact: clouds must be the same size, got " +
        std::to_string(s1.size()) + " and " + std::to_string(s2.size()));
  const std::size_t n = s1.size();
  if (n == 0) throw std::invalid_argument("emd_exact: empty clouds");
  if (n > 10)
    throw std::invalid_argument(
        "emd_exact: exhaustive search limited to n <= 10, got " +
        std::to_string(n));

  std::vector<std::vector<double>> cost(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      cost[i][j] = static_cast<double>(dist(s1[i], s2[j]));

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  AssignmentResult best;
  best.cost = std::numeric_limits<double>::max();
  do {
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) total += cost[i][perm[i]];
    if (total < best.cost * static_cast<double>(n)) {
      best.cost = total / static_cast<double>(n);
      best.matching = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Auction assignment with epsilon scaling (minimization form). The final
// matching is within n*eps_final of the optimal total cost, i.e. the mean
// matched distance is within eps_final (per point) of the optimum.
// Deterministic for a given input order and epsilon.
inline AssignmentResult emd_approx_assignment(const PointCloud& s1,
                                              const PointCloud& s2,
                                              double epsilon = -1.0) {
  if (s1.size() != s2.size())
    throw std::invalid_argument(
        "emd_approx: clouds must be the same size, got " +
        std::to_string(s1.size()) + " and " + std::to_string(s2.size()));
  const std::size_t n = s1.size();
  if (n == 0) throw std::invalid_argument("emd_approx: empty clouds");

  if (epsilon <= 0) {
    // Default: 1e-3 of the joint bounding-box diagonal.
    PointCloud all;
    all.points = s1.points;
    all.points.insert(all.points.end(), s2.points.begin(), s2.points.end());
    epsilon = 1e-3 * static_cast<double>(all.bbox_diagonal());
    if (epsilon <= 0) epsilon = 1e-9;
  }

  if (n == 1) {
    AssignmentResult r;
    r.matching = {0};
    r.cost = static_cast<double>(dist(s1[0], s2[0]));
    return r;
  }

  // Benefits for the auction are negated costs.
  auto benefit = [&](std::size_t i, std::size_t j) {
    return -static_cast<double>(dist(s1[i], s2[j]));
  };

  std::vector<double> price(n, 0.0);
  std::vector<std::ptrdiff_t> owner(n, -1);     // object -> person
  std::vector<std::ptrdiff_t> assigned(n, -1);  // person -> object

  // Coarse start, scale down by 4 until the target epsilon.
  double max_abs = 0;
  for (std::size_t i = 0; i < n; ++i)
    max_abs = std::max(max_abs, -benefit(i, i));
  for (std::size_t i = 0; i < n; ++i)
    max_abs = std::max(max_abs, -benefit(i, (i + 1) % n));
  double eps = std::max(epsilon, max_abs / 2.0);

  for (;;) {
    std::fill(owner.begin(), owner.end(), std::ptrdiff_t{-1});
    std::fill(assigned.begin(), assigned.end(), std::ptrdiff_t{-1});
    std::vector<std::size_t> unassigned(n);
    std::iota(unassigned.begin(), unassigned.end(), std::size_t{0});

    while (!unassigned.empty()) {
      const std::size_t i = unassigned.back();
      unassigned.pop_back();
      // Find best and second-best object values for person i.
      double best_v = -std::numeric_limits<double>::max();
      double second_v = -std::numeric_limits<double>::max();
      std::size_t best_j = 0;
      for (std::size_t j = 0; j < n; ++j) {
        const double v = benefit(i, j) - price[j];
        if (v > best_v) {
          second_v = best_v;
          best_v = v;
          best_j = j;
        } else if (v > second_v) {
          second_v = v;
        }
      }
      const double bid = best_v - second_v + eps;
      price[best_j] += bid;
      if (owner[best_j] >= 0) {
        assigned[owner[best_j]] = -1;
        unassigned.push_back(static_cast<std::size_t>(owner[best_j]));
      }
      owner[best_j] = static_cast<std::ptrdiff_t>(i);
      assigned[i] = static_cast<std::ptrdiff_t>(best_j);
    }

    if (eps <= epsilon) break;
    eps = std::max(epsilon, eps / 4.0);
  }

  AssignmentResult r;
  r.matching.resize(n);
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    r.matching[i] = static_cast<std::size_t>(assigned[i]);
    total += static_cast<double>(dist(s1[i], s2[r.matching[i]]));
  }
  r.cost = total / static_cast<double>(n);
  return r;
}

// Mean matched distance under the (1+eps)-approximate assignment.
inline double emd_approx(const PointCloud& s1, const PointCloud& s2,
                         double epsilon = -1.0) {
  return emd_approx_assignment(s1, s2, epsilon).cost;
}

}  // namespace pcn
