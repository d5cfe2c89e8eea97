#include "xrmimo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/SVD>

#include "xrmimo/errors.hpp"

namespace xrmimo::metrics {

Similarity umeyama_align(std::span<const Eigen::Vector3d> estimated,
                         std::span<const Eigen::Vector3d> ground_truth, bool with_scale) {
  if (estimated.size() != ground_truth.size()) throw MetricError("alignment needs equal-length point sets");
  const std::size_t n = estimated.size();
  if (n < 3) throw MetricError("alignment needs at least 3 points");

  Eigen::Vector3d mean_est = Eigen::Vector3d::Zero();
  Eigen::Vector3d mean_gt = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    mean_est += estimated[i];
    mean_gt += ground_truth[i];
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  mean_est *= inv_n;
  mean_gt *= inv_n;

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d scatter_est = Eigen::Matrix3d::Zero();
  double var_est = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d de = estimated[i] - mean_est;
    const Eigen::Vector3d dg = ground_truth[i] - mean_gt;
    cov += dg * de.transpose();
    scatter_est += de * de.transpose();
    var_est += de.squaredNorm();
  }
  cov *= inv_n;
  var_est *= inv_n;

  // Rank < 2 leaves the rotation about the point line undetermined.
  const Eigen::JacobiSVD<Eigen::Matrix3d> spread(scatter_est);
  const auto sv = spread.singularValues();
  if (!(sv(0) > 0.0) || sv(1) <= 1e-12 * sv(0)) throw MetricError("degenerate (collinear) point configuration");

  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d& u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  Eigen::Vector3d s = Eigen::Vector3d::Ones();
  if (u.determinant() * v.determinant() < 0.0) s(2) = -1.0;

  Similarity out;
  out.rotation = u * s.asDiagonal() * v.transpose();
  out.scale = with_scale ? svd.singularValues().dot(s) / var_est : 1.0;
  out.translation = mean_gt - out.scale * (out.rotation * mean_est);
  return out;
}

namespace {

double median_period(std::span<const StampedPose> gt) {
  std::vector<double> dt;
  for (std::size_t i = 1; i < gt.size(); ++i) dt.push_back(gt[i].timestamp - gt[i - 1].timestamp);
  if (dt.empty()) return 0.0;
  std::nth_element(dt.begin(), dt.begin() + static_cast<std::ptrdiff_t>(dt.size() / 2), dt.end());
  return dt[dt.size() / 2];
}

}  // namespace

AteResult ate_translation(std::span<const StampedPose> estimate, std::span<const StampedPose> ground_truth,
                          const AteOptions& options) {
  if (ground_truth.empty()) throw MetricError("empty ground truth");
  const double tol = options.max_time_diff > 0.0 ? options.max_time_diff : 0.5 * median_period(ground_truth);

  std::vector<Eigen::Vector3d> est, gt;
  AteResult result;
  for (const auto& e : estimate) {
    const auto it = std::lower_bound(ground_truth.begin(), ground_truth.end(), e.timestamp,
                                     [](const StampedPose& p, double t) { return p.timestamp < t; });
    const StampedPose* best = nullptr;
    if (it != ground_truth.end()) best = &*it;
    if (it != ground_truth.begin()) {
      const StampedPose* prev = &*std::prev(it);
      if (!best || std::abs(prev->timestamp - e.timestamp) < std::abs(best->timestamp - e.timestamp)) best = prev;
    }
    if (best && std::abs(best->timestamp - e.timestamp) <= tol) {
      est.push_back(e.position);
      gt.push_back(best->position);
    } else {
      ++result.n_unassociated;
    }
  }
  if (est.size() < 3) throw MetricError("ATE needs at least 3 associated poses, got " + std::to_string(est.size()));

  result.alignment = umeyama_align(est, gt, options.with_scale);
  double sum = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) sum += (gt[i] - result.alignment.apply(est[i])).squaredNorm();
  result.rmse = std::sqrt(sum / static_cast<double>(est.size()));
  result.n_poses = est.size();
  return result;
}

AteResult ate_translation(const TrajectoryEstimate& estimate, const GroundTruthTrajectory& ground_truth,
                          const AteOptions& options) {
  const auto solved = estimate.solved_poses();
  return ate_translation(solved, ground_truth.frames, options);
}

double percent_change(double error, double baseline) {
  if (!(baseline > 0.0)) throw MetricError("baseline error must be > 0 for normalisation");
  return 100.0 * (error - baseline) / baseline;
}

std::vector<double> per_trajectory_percent(std::span<const TrajectoryRuns> trajectories) {
  std::vector<double> out;
  out.reserve(trajectories.size());
  for (const auto& t : trajectories) {
    if (t.errors.empty()) throw MetricError("trajectory has no runs");
    double sum = 0.0;
    for (double e : t.errors) sum += percent_change(e, t.baseline);
    out.push_back(sum / static_cast<double>(t.errors.size()));
  }
  return out;
}

double normalize_vs_baseline(std::span<const TrajectoryRuns> trajectories) {
  if (trajectories.empty()) throw MetricError("no trajectories to normalise");
  const auto per = per_trajectory_percent(trajectories);
  return std::accumulate(per.begin(), per.end(), 0.0) / static_cast<double>(per.size());
}

BootstrapResult bootstrap_stats(std::span<const double> values, std::uint32_t n_draws, double ci, Rng& rng) {
  if (values.empty()) throw MetricError("bootstrap of an empty sample");
  if (n_draws < 1) throw MetricError("bootstrap needs at least one draw");
  if (!(ci > 0.0 && ci < 1.0)) throw MetricError("confidence level must lie in (0, 1)");

  const auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());
  if (*min_it == *max_it) return {*min_it, 0.0, *min_it, *min_it};

  const std::size_t n = values.size();
  std::vector<double> means(n_draws);
  for (auto& m : means) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += values[uniform_below(rng, n)];
    m = sum / static_cast<double>(n);
  }

  BootstrapResult r;
  r.mean = std::accumulate(means.begin(), means.end(), 0.0) / n_draws;
  double ss = 0.0;
  for (double m : means) ss += (m - r.mean) * (m - r.mean);
  r.std = n_draws > 1 ? std::sqrt(ss / (n_draws - 1)) : 0.0;

  std::sort(means.begin(), means.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(n_draws - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min<std::size_t>(lo + 1, n_draws - 1);
    return means[lo] + (pos - static_cast<double>(lo)) * (means[hi] - means[lo]);
  };
  const double tail = 0.5 * (1.0 - ci);
  r.ci_low = quantile(tail);
  r.ci_high = quantile(1.0 - tail);
  return r;
}

}  // namespace xrmimo::metrics
