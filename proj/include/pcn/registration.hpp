#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "pcn/kdtree.hpp"
#include "pcn/metrics.hpp"
#include "pcn/point_cloud.hpp"

namespace pcn {

// Least-squares rigid transform mapping src[i] onto dst[corr[i]] via the
// cross-covariance SVD, reflection-corrected to det(R) = +1.
inline RigidTransform best_rigid_transform(
    const PointCloud& src, const PointCloud& dst,
    const std::vector<std::size_t>& correspondences) {
  const std::size_t n = correspondences.size();
  if (n < 3 || src.size() < 3)
    throw std::invalid_argument(
        "best_rigid_transform: need at least 3 correspondences");
  if (correspondences.size() != src.size())
    throw std::invalid_argument(
        "best_rigid_transform: one correspondence per source point required");

  Eigen::Vector3d src_mean = Eigen::Vector3d::Zero();
  Eigen::Vector3d dst_mean = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    src_mean += Eigen::Vector3d(src[i][0], src[i][1], src[i][2]);
    const auto& d = dst[correspondences[i]];
    dst_mean += Eigen::Vector3d(d[0], d[1], d[2]);
  }
  src_mean /= static_cast<double>(n);
  dst_mean /= static_cast<double>(n);

  Eigen::Matrix3d H = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d a =
        Eigen::Vector3d(src[i][0], src[i][1], src[i][2]) - src_mean;
    const auto& d = dst[correspondences[i]];
    const Eigen::Vector3d b = Eigen::Vector3d(d[0], d[1], d[2]) - dst_mean;
    H += a * b.transpose();
  }

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(
      H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  // Degenerate correspondence sets (collinear or coincident) leave the
  // cross-covariance rank-deficient in more than one direction.
  if (svd.singularValues()(1) < 1e-12 * (svd.singularValues()(0) + 1e-300))
    throw std::invalid_argument(
        "best_rigid_transform: degenerate (collinear or coincident) "
        "correspondences");

  Eigen::Matrix3d R = svd.matrixV() * svd.matrixU().transpose();
  if (R.determinant() < 0) {
    Eigen::Matrix3d V = svd.matrixV();
    V.col(2) *= -1.0;
    R = V * svd.matrixU().transpose();
  }
  const Eigen::Vector3d t = dst_mean - R * src_mean;

  const Eigen::Quaterniond q(R);
  RigidTransform T;
  const double sign = q.w() < 0 ? -1.0 : 1.0;
  T.rotation = {static_cast<float>(sign * q.w()),
                static_cast<float>(sign * q.x()),
                static_cast<float>(sign * q.y()),
                static_cast<float>(sign * q.z())};
  const float qn = T.quat_norm();
  for (auto& c : T.rotation) c /= qn;
  T.translation = {static_cast<float>(t.x()), static_cast<float>(t.y()),
                   static_cast<float>(t.z())};
  return T;
}

struct IcpResult {
  RigidTransform transform;
  std::size_t iterations = 0;
  double final_mean_nn_distance = 0;
  bool converged = false;
  std::vector<double> objective_history;  // mean NN distance per iteration
};

struct IcpOptions {
  std::size_t max_iters = 50;
  double tol_rel = 1e-6;  // of the dst bounding-box diagonal
  bool trim = false;      // drop the worst-quartile correspondences
};

// Point-to-point ICP: alternate NN correspondence on dst with the
// closed-form rigid update. The mean NN distance never increases; the
// accepted transform at each step is the best one seen.
inline IcpResult icp(const PointCloud& src, const PointCloud& dst,
                     const IcpOptions& opts = {}) {
  if (src.size() < 3 || dst.size() < 3)
    throw std::invalid_argument("icp: both clouds need at least 3 points");
  const KdTree tree(dst);
  const double tol =
      opts.tol_rel * std::max(1e-12, static_cast<double>(dst.bbox_diagonal()));

  IcpResult result;
  result.transform = RigidTransform::identity();
  PointCloud current = src;
  double prev_obj = std::numeric_limits<double>::max();

  for (std::size_t it = 0; it < opts.max_iters; ++it) {
    std::vector<std::size_t> corr(current.size());
    std::vector<double> dists(current.size());
    double mean_nn = 0;
    for (std::size_t i = 0; i < current.size(); ++i) {
      const auto r = tree.nearest(current[i]);
      corr[i] = r.index;
      dists[i] = r.distance;
      mean_nn += r.distance;
    }
    mean_nn /= static_cast<double>(current.size());
    result.objective_history.push_back(mean_nn);
    result.final_mean_nn_distance = mean_nn;
    result.iterations = it + 1;

    if (prev_obj - mean_nn < tol) {
      result.converged = true;
      break;
    }
    prev_obj = mean_nn;

    PointCloud step_src = current;
    std::vector<std::size_t> step_corr = corr;
    if (opts.trim && current.size() >= 8) {
      std::vector<std::size_t> order(current.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dists[a] < dists[b];
      });
      const std::size_t keep = (current.size() * 3) / 4;
      step_src.points.clear();
      step_corr.clear();
      for (std::size_t i = 0; i < keep; ++i) {
        step_src.points.push_back(current[order[i]]);
        step_corr.push_back(corr[order[i]]);
      }
    }

    const RigidTransform delta = best_rigid_transform(step_src, dst, step_corr);
    const PointCloud moved = apply_transform(current, delta);

    // Reject a step that would raise the objective; keep the best pose.
    double moved_obj = 0;
    for (const auto& p : moved.points) moved_obj += tree.nearest(p).distance;
    moved_obj /= static_cast<double>(moved.size());
    if (moved_obj > mean_nn) {
      result.converged = true;
      break;
    }
    current = moved;
    result.transform = delta.compose(result.transform);
    // Renormalize against quaternion drift from repeated composition.
    const float qn = result.transform.quat_norm();
    for (auto& c : result.transform.rotation) c /= qn;
  }
  if (result.iterations == opts.max_iters && !result.converged)
    result.converged = false;
  return result;
}

struct RegistrationRow {
  std::size_t pair_id = 0;
  std::string input_kind;  // "partial" or "complete"
  double rotation_error = 0;
  double translation_error = 0;
  std::size_t iterations = 0;
  bool failed = false;
};

// Registers consecutive frames with ICP for both input kinds and scores
// each result against the known relative transform.
inline std::vector<RegistrationRow> registration_experiment(
    const std::vector<PointCloud>& partial_frames,
    const std::vector<PointCloud>& completed_frames,
    const std::vector<RigidTransform>& true_relative,
    const IcpOptions& opts = {}) {
  if (partial_frames.size() < 2)
    throw std::invalid_argument(
        "registration_experiment: need at least 2 frames");
  if (completed_frames.size() != partial_frames.size() ||
      true_relative.size() != partial_frames.size() - 1)
    throw std::invalid_argument(
        "registration_experiment: frame/transform count mismatch");

  std::vector<RegistrationRow> rows;
  for (std::size_t i = 0; i + 1 < partial_frames.size(); ++i) {
    const RigidTransform& truth = true_relative[i];
    auto run = [&](const PointCloud& src, const PointCloud& dst,
                   const char* kind) {
      RegistrationRow row;
      row.pair_id = i;
      row.input_kind = kind;
      if (src.size() < 3 || dst.size() < 3) {
        row.failed = true;
        rows.push_back(row);
        return;
      }
      const IcpResult r = icp(src, dst, opts);
      row.rotation_error = rotation_error(r.transform.rotation, truth.rotation);
      row.translation_error =
          translation_error(r.transform.translation, truth.translation);
      row.iterations = r.iterations;
      rows.push_back(row);
    };
    run(partial_frames[i], partial_frames[i + 1], "partial");
    run(completed_frames[i], completed_frames[i + 1], "complete");
  }
  return rows;
}

}  // namespace pcn
