#include <cmath>
#include <filesystem>
#include <numbers>

#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include "xrmimo/errors.hpp"
#include "xrmimo/metrics.hpp"
#include "xrmimo/trajectory.hpp"

using namespace xrmimo;
using namespace xrmimo::metrics;

namespace {

std::vector<Eigen::Vector3d> random_points(std::size_t n, Rng& rng) {
  std::vector<Eigen::Vector3d> p(n);
  for (auto& v : p) v = Eigen::Vector3d(standard_normal(rng), standard_normal(rng), standard_normal(rng));
  return p;
}

std::vector<StampedPose> stamped(const std::vector<Eigen::Vector3d>& pts, double dt = 1.0 / 30.0) {
  std::vector<StampedPose> out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    out[i].timestamp = i * dt;
    out[i].position = pts[i];
  }
  return out;
}

Eigen::Matrix3d random_rotation(Rng& rng) {
  Eigen::Quaterniond q(standard_normal(rng), standard_normal(rng), standard_normal(rng), standard_normal(rng));
  return q.normalized().toRotationMatrix();
}

}  // namespace

TEST(Umeyama, IdenticalSetsGiveIdentity) {
  Rng rng(1);
  const auto p = random_points(10, rng);
  const auto s = umeyama_align(p, p);
  EXPECT_LT((s.rotation - Eigen::Matrix3d::Identity()).norm(), 1e-12);
  EXPECT_LT(s.translation.norm(), 1e-12);
  EXPECT_NEAR(s.scale, 1.0, 1e-12);
}

TEST(Umeyama, RecoversConstructedSimilarity) {
  Rng rng(2);
  const auto est = random_points(12, rng);
  const Eigen::Matrix3d r = Eigen::AngleAxisd(std::numbers::pi / 2, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  const Eigen::Vector3d t(1, 2, 3);
  std::vector<Eigen::Vector3d> gt;
  for (const auto& p : est) gt.push_back(2.0 * r * p + t);
  const auto s = umeyama_align(est, gt);
  EXPECT_LT((s.rotation - r).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((s.translation - t).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_NEAR(s.scale, 2.0, 1e-9);
}

TEST(Umeyama, AgreesWithEigenReference) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto est = random_points(8 + trial, rng);
    std::vector<Eigen::Vector3d> gt;
    const Eigen::Matrix3d r = random_rotation(rng);
    for (const auto& p : est)
      gt.push_back(0.7 * r * p + Eigen::Vector3d(0.3, -1, 2) + 0.05 * Eigen::Vector3d(standard_normal(rng), 0, 0));
    Eigen::Matrix3Xd src(3, est.size()), dst(3, est.size());
    for (std::size_t i = 0; i < est.size(); ++i) {
      src.col(i) = est[i];
      dst.col(i) = gt[i];
    }
    for (bool with_scale : {true, false}) {
      const Eigen::Matrix4d ref = Eigen::umeyama(src, dst, with_scale);
      const auto s = umeyama_align(est, gt, with_scale);
      Eigen::Matrix4d got = Eigen::Matrix4d::Identity();
      got.topLeftCorner<3, 3>() = s.scale * s.rotation;
      got.topRightCorner<3, 1>() = s.translation;
      EXPECT_LT((got - ref).cwiseAbs().maxCoeff(), 1e-9);
      if (!with_scale) EXPECT_EQ(s.scale, 1.0);
    }
  }
}

TEST(Umeyama, ReflectionNeverReturned) {
  Rng rng(4);
  const auto est = random_points(10, rng);
  std::vector<Eigen::Vector3d> gt;
  for (const auto& p : est) gt.emplace_back(-p.x(), p.y(), p.z());
  const auto s = umeyama_align(est, gt);
  EXPECT_NEAR(s.rotation.determinant(), 1.0, 1e-12);
}

TEST(Umeyama, DegenerateInputsRejected) {
  std::vector<Eigen::Vector3d> line{{0, 0, 0}, {1, 1, 1}, {2, 2, 2}, {3, 3, 3}};
  EXPECT_THROW(umeyama_align(line, line), MetricError);
  std::vector<Eigen::Vector3d> two{{0, 0, 0}, {1, 0, 0}};
  EXPECT_THROW(umeyama_align(two, two), MetricError);
  std::vector<Eigen::Vector3d> three{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  EXPECT_THROW(umeyama_align(three, two), MetricError);
}

TEST(Ate, IdenticalAndOffsetGiveZero) {
  Rng rng(5);
  const auto gt = stamped(random_points(30, rng));
  EXPECT_NEAR(ate_translation(gt, gt).rmse, 0.0, 1e-12);
  auto shifted = gt;
  for (auto& p : shifted) p.position += Eigen::Vector3d(5, -2, 1);
  const auto r = ate_translation(shifted, gt);
  EXPECT_NEAR(r.rmse, 0.0, 1e-12);
  EXPECT_EQ(r.n_poses, 30u);
  EXPECT_EQ(r.n_unassociated, 0u);
}

TEST(Ate, SingleDisplacedPoseMatchesDirectEvaluation) {
  const std::vector<Eigen::Vector3d> pts{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 1}};
  auto est = pts;
  est[2] += Eigen::Vector3d(0.01, -0.02, 0.005);
  for (bool with_scale : {true, false}) {
    Eigen::Matrix3Xd src(3, 5), dst(3, 5);
    for (int i = 0; i < 5; ++i) {
      src.col(i) = est[i];
      dst.col(i) = pts[i];
    }
    const Eigen::Matrix4d t = Eigen::umeyama(src, dst, with_scale);
    double sum = 0.0;
    for (int i = 0; i < 5; ++i) sum += (dst.col(i) - (t.topLeftCorner<3, 3>() * src.col(i) + t.topRightCorner<3, 1>())).squaredNorm();
    const double expected = std::sqrt(sum / 5.0);
    EXPECT_NEAR(ate_translation(stamped(est), stamped(pts), {with_scale, 0.0}).rmse, expected, 1e-12);
    EXPECT_GT(expected, 0.0);
  }
}

TEST(Ate, InvariantUnderGlobalSimilarity) {
  Rng rng(6);
  const auto gt_pts = random_points(100, rng);
  auto est_pts = gt_pts;
  for (auto& p : est_pts) p += 0.01 * Eigen::Vector3d(standard_normal(rng), standard_normal(rng), standard_normal(rng));
  const double base = ate_translation(stamped(est_pts), stamped(gt_pts)).rmse;
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Matrix3d r = random_rotation(rng);
    const double s = 0.1 + 5.0 * uniform01(rng);
    const Eigen::Vector3d t(10 * standard_normal(rng), 10 * standard_normal(rng), 10 * standard_normal(rng));
    auto moved = est_pts;
    for (auto& p : moved) p = s * r * p + t;
    EXPECT_NEAR(ate_translation(stamped(moved), stamped(gt_pts)).rmse, base, 1e-9);
  }
}

TEST(Ate, UnsynchronisedPosesDroppedAndCounted) {
  Rng rng(7);
  const auto gt = stamped(random_points(20, rng));
  auto est = gt;
  est[4].timestamp += 0.4 / 30.0;   // within half a period: kept
  est[9].timestamp = -1.0;          // before the first frame: dropped
  est.push_back(gt.back());
  est.back().timestamp += 1.0;      // far past the end
  const auto r = ate_translation(est, gt);
  EXPECT_EQ(r.n_unassociated, 2u);
  EXPECT_EQ(r.n_poses, 19u);
}

TEST(Ate, UsesOnlySolvedFramesAndFailsWhenNoneSolved) {
  Rng rng(8);
  GroundTruthTrajectory gt{stamped(random_points(10, rng))};
  TrajectoryEstimate est;
  for (const auto& p : gt.frames) est.frames.push_back({p, 10, true});
  est.frames[3].solved = false;
  est.frames[3].pose.position += Eigen::Vector3d(100, 0, 0);
  EXPECT_NEAR(ate_translation(est, gt).rmse, 0.0, 1e-12);
  EXPECT_EQ(est.solved_count(), 9u);
  for (auto& f : est.frames) f.solved = false;
  EXPECT_THROW(ate_translation(est, gt), MetricError);
}

TEST(Normalisation, PercentChange) {
  EXPECT_EQ(percent_change(1.0, 1.0), 0.0);
  EXPECT_NEAR(percent_change(1.2, 1.0), 20.0, 1e-12);
  EXPECT_THROW(percent_change(1.0, 0.0), MetricError);
  // Exactly linear in e for a fixed baseline.
  const double b = 0.37;
  for (double e : {0.1, 0.5, 2.0}) EXPECT_NEAR(percent_change(2 * e, b) + 100.0, 2 * (percent_change(e, b) + 100.0), 1e-9);
}

TEST(Normalisation, TwoLevelAverageIsExact) {
  const std::vector<TrajectoryRuns> runs{{10.0, {11.0, 13.0}}, {10.0, {10.0}}};
  const auto per = per_trajectory_percent(runs);
  ASSERT_EQ(per.size(), 2u);
  EXPECT_EQ(per[0], 20.0);
  EXPECT_EQ(per[1], 0.0);
  EXPECT_EQ(normalize_vs_baseline(runs), 10.0);
  EXPECT_THROW(normalize_vs_baseline(std::vector<TrajectoryRuns>{}), MetricError);
}

TEST(Bootstrap, ConstantIsDegenerate) {
  Rng rng(9);
  const std::vector<double> c(7, 3.25);
  const auto r = bootstrap_stats(c, 10000, 0.95, rng);
  EXPECT_EQ(r.mean, 3.25);
  EXPECT_EQ(r.std, 0.0);
  EXPECT_EQ(r.ci_low, 3.25);
  EXPECT_EQ(r.ci_high, 3.25);
  const std::vector<double> one{-1.5};
  const auto s = bootstrap_stats(one, 100, 0.95, rng);
  EXPECT_EQ(s.ci_low, -1.5);
  EXPECT_EQ(s.ci_high, -1.5);
}

TEST(Bootstrap, ZeroOneMeanIsHalf) {
  Rng rng(10);
  const std::vector<double> v{0.0, 1.0};
  const auto r = bootstrap_stats(v, 100000, 0.95, rng);
  EXPECT_NEAR(r.mean, 0.5, 0.02);
  EXPECT_NEAR(r.std, 0.5 / std::sqrt(2.0), 0.01);
  EXPECT_EQ(r.ci_low, 0.0);
  EXPECT_EQ(r.ci_high, 1.0);
}

TEST(Bootstrap, CiContainsMeanForSymmetricData) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v;
    const std::size_t half = 1 + uniform_below(rng, 10);
    for (std::size_t i = 0; i < half; ++i) {
      const double x = standard_normal(rng);
      v.push_back(x);
      v.push_back(-x);
    }
    const auto r = bootstrap_stats(v, 2000, 0.95, rng);
    EXPECT_LE(r.ci_low, r.mean);
    EXPECT_GE(r.ci_high, r.mean);
  }
}

TEST(Bootstrap, DeterministicAndValidated) {
  const std::vector<double> v{1, 4, 2, 8, 5};
  Rng a(12), b(12);
  const auto ra = bootstrap_stats(v, 1000, 0.9, a);
  const auto rb = bootstrap_stats(v, 1000, 0.9, b);
  EXPECT_EQ(ra.mean, rb.mean);
  EXPECT_EQ(ra.ci_low, rb.ci_low);
  EXPECT_THROW(bootstrap_stats(std::vector<double>{}, 10, 0.95, a), MetricError);
  EXPECT_THROW(bootstrap_stats(v, 0, 0.95, a), MetricError);
  EXPECT_THROW(bootstrap_stats(v, 10, 1.0, a), MetricError);
}

TEST(TrajectoryIo, RoundTripIsExact) {
  Rng rng(13);
  std::vector<StampedPose> poses(25);
  for (std::size_t i = 0; i < poses.size(); ++i) {
    poses[i].timestamp = i / 30.0;
    poses[i].position = Eigen::Vector3d(standard_normal(rng), standard_normal(rng), standard_normal(rng));
    poses[i].orientation = Eigen::Quaterniond(random_rotation(rng));
  }
  const auto path = std::filesystem::temp_directory_path() / "xrmimo_traj_roundtrip.txt";
  write_trajectory(path, poses);
  const auto back = read_trajectory(path);
  std::filesystem::remove(path);
  ASSERT_EQ(back.size(), poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    EXPECT_EQ(back[i].timestamp, poses[i].timestamp);
    EXPECT_EQ(back[i].position, poses[i].position);
    EXPECT_EQ(back[i].orientation.coeffs(), poses[i].orientation.coeffs());
  }
}
