#pragma once

// Translation ATE after similarity alignment, baseline-normalised
// percentages and trajectory-level bootstrap.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "xrmimo/rng.hpp"
#include "xrmimo/trajectory.hpp"

namespace xrmimo::metrics {

struct Similarity {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  double scale = 1.0;

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return scale * (rotation * p) + translation; }
};

/// Least-squares s, R, t minimising sum |gt_i - (s R est_i + t)|^2.
/// Throws MetricError for fewer than 3 points, unequal lengths or
/// (near-)collinear point sets.
Similarity umeyama_align(std::span<const Eigen::Vector3d> estimated,
                         std::span<const Eigen::Vector3d> ground_truth, bool with_scale = true);

struct AteOptions {
  bool with_scale = true;
  /// Association tolerance in seconds; <= 0 means half the median
  /// ground-truth frame period.
  double max_time_diff = 0.0;
};

struct AteResult {
  double rmse = 0.0;
  std::size_t n_poses = 0;
  std::size_t n_unassociated = 0;
  Similarity alignment;
};

AteResult ate_translation(std::span<const StampedPose> estimate, std::span<const StampedPose> ground_truth,
                          const AteOptions& options = {});

/// Uses solved frames only.
AteResult ate_translation(const TrajectoryEstimate& estimate, const GroundTruthTrajectory& ground_truth,
                          const AteOptions& options = {});

/// 100 (e - e_base) / e_base. Throws MetricError when e_base <= 0.
double percent_change(double error, double baseline);

struct TrajectoryRuns {
  double baseline = 0.0;
  std::vector<double> errors;
};

/// Mean percentage change per trajectory.
std::vector<double> per_trajectory_percent(std::span<const TrajectoryRuns> trajectories);

/// Per-trajectory means averaged (unweighted) over trajectories.
double normalize_vs_baseline(std::span<const TrajectoryRuns> trajectories);

struct BootstrapResult {
  double mean = 0.0;
  double std = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// Resamples `values` with replacement `n_draws` times; reports the mean and
/// standard deviation of the resample means and a percentile interval.
BootstrapResult bootstrap_stats(std::span<const double> values, std::uint32_t n_draws, double ci, Rng& rng);

}  // namespace xrmimo::metrics
