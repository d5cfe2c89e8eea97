#include <bit>
#include <cmath>

#include <gtest/gtest.h>

#include "xrmimo/errors.hpp"
#include "xrmimo/metrics.hpp"
#include "xrmimo/slam_sandbox.hpp"

using namespace xrmimo;
using namespace xrmimo::sandbox;

namespace {

const Scene& default_scene() {
  static const Scene scene = [] {
    Rng rng(derive_seed(1, "scene"));
    return generate_scene(2000, SceneBounds{}, rng);
  }();
  return scene;
}

GroundTruthTrajectory default_trajectory(std::size_t n, std::uint64_t seed = 1) {
  Rng rng(derive_seed(seed, "trajectory"));
  return generate_trajectory(n, SceneBounds{}, rng);
}

StampedPose looking_along_z(const Eigen::Vector3d& position) {
  StampedPose p;
  p.position = position;
  return p;
}

std::vector<Feature> random_features(std::size_t n, Rng& rng, bool mm_depth) {
  std::vector<Feature> out;
  for (std::size_t i = 0; i < n; ++i) {
    Feature f;
    // Distinct integer pixel centres keep depth-map lookups collision free.
    const std::size_t px = i * 7919 % (639 * 479);
    f.u = static_cast<float>(px % 639 + 0.25 * uniform01(rng));
    f.v = static_cast<float>(px / 639 + 0.25 * uniform01(rng));
    f.depth = mm_depth ? (300 + uniform_below(rng, 9700)) / 1000.0 : 0.3 + 9.7 * uniform01(rng);
    for (auto& w : f.descriptor) w = rng();
    f.intensity = static_cast<std::uint8_t>(rng());
    f.score = static_cast<float>(uniform_below(rng, 65536) / 65535.0);
    out.push_back(f);
  }
  return out;
}

}  // namespace

TEST(Scene, LandmarksInsideBoundsWithSeparatedDescriptors) {
  const Scene& s = default_scene();
  ASSERT_EQ(s.landmarks.size(), 2000u);
  ASSERT_EQ(s.descriptor_block.size(), 8000u);
  for (const auto& l : s.landmarks) EXPECT_TRUE(s.bounds.contains(l.position));
  std::uint32_t min_d = 256;
  for (std::size_t i = 0; i < 300; ++i)
    for (std::size_t j = i + 1; j < s.landmarks.size(); ++j) {
      std::uint32_t d = 0;
      for (int w = 0; w < 4; ++w) d += std::popcount(s.landmarks[i].descriptor[w] ^ s.landmarks[j].descriptor[w]);
      min_d = std::min(min_d, d);
    }
  EXPECT_GE(min_d, kMinDescriptorSeparation);
}

TEST(Scene, Deterministic) {
  Rng a(5), b(5);
  const auto s1 = generate_scene(50, SceneBounds{}, a);
  const auto s2 = generate_scene(50, SceneBounds{}, b);
  EXPECT_EQ(s1.descriptor_block, s2.descriptor_block);
  EXPECT_EQ(s1.landmarks[17].position, s2.landmarks[17].position);
}

TEST(Camera, PinholeIdentities) {
  const CameraModel cam;
  EXPECT_EQ(cam.project({0, 0, 1}), Eigen::Vector2d(320, 240));
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d p(standard_normal(rng), standard_normal(rng), 0.5 + 5 * uniform01(rng));
    const Eigen::Vector2d uv = cam.project(p);
    EXPECT_LT((cam.back_project(uv.x(), uv.y(), p.z()) - p).norm(), 1e-9);
  }
  CameraModel bad;
  bad.fx = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Observe, AxisLandmarkAndBehindCamera) {
  Scene s;
  s.bounds = SceneBounds{};
  s.landmarks.push_back({{1.0, 1.0, 2.0}, {1, 2, 3, 4}, 9});   // on the axis, 1 m ahead
  s.landmarks.push_back({{1.0, 1.0, 0.0}, {5, 6, 7, 8}, 9});   // behind
  for (int i = 0; i < 4; ++i) s.landmarks.push_back({{1.5 + 0.1 * i, 1.2, 3.0}, {9ull + i, 0, 0, 0}, 1});
  s.reindex();
  const CameraModel cam;
  const auto obs = observe(s, cam, looking_along_z({1.0, 1.0, 1.0}));
  EXPECT_FALSE(obs.degenerate);
  ASSERT_EQ(obs.features.size(), 5u);
  EXPECT_EQ(obs.features[0].landmark_id, 0);
  EXPECT_DOUBLE_EQ(obs.features[0].u, 320.0);
  EXPECT_DOUBLE_EQ(obs.features[0].v, 240.0);
  EXPECT_DOUBLE_EQ(obs.features[0].depth, 1.0);
  for (const auto& f : obs.features) EXPECT_NE(f.landmark_id, 1);
  for (std::size_t i = 1; i < obs.features.size(); ++i) {
    const auto r = [](const Feature& f) { return std::hypot(f.u - 320.0, f.v - 240.0); };
    EXPECT_LE(r(obs.features[i - 1]), r(obs.features[i]));
  }
}

TEST(Observe, FeatureBudgetAndDegenerateFlag) {
  const auto traj = default_trajectory(30);
  for (const auto& pose : traj.frames) {
    const auto obs = observe(default_scene(), CameraModel{}, pose);
    EXPECT_LE(obs.features.size(), kMaxFeatures);
    EXPECT_FALSE(obs.degenerate);
    EXPECT_GE(obs.features.size(), 50u);
  }
  Scene empty;
  empty.reindex();
  EXPECT_TRUE(observe(empty, CameraModel{}, traj.frames[0]).degenerate);
}

TEST(Trajectory, ValidAndInsideRoom) {
  const auto traj = default_trajectory(100);
  EXPECT_NO_THROW(traj.validate());
  ASSERT_EQ(traj.frames.size(), 100u);
  EXPECT_NEAR(traj.frames[1].timestamp - traj.frames[0].timestamp, 1.0 / 30.0, 1e-12);
  for (const auto& f : traj.frames) EXPECT_TRUE(SceneBounds{}.contains(f.position));
}

TEST(Payload, SizesAreExact) {
  Rng rng(3);
  const auto f = random_features(kMaxFeatures, rng, true);
  const CameraModel cam;
  EXPECT_EQ(encode_payload(f, ScenarioId::Raw, cam).bytes.size(), 921'600u);
  EXPECT_EQ(encode_payload(f, ScenarioId::FeaturesDepthMap, cam).bytes.size(), 688'128u);
  EXPECT_EQ(encode_payload(f, ScenarioId::FeaturesWithDepth, cam).bytes.size(), 86'016u);
  EXPECT_EQ(encode_payload({}, ScenarioId::FeaturesWithDepth, cam).bit_count(), 688'128u);
}

TEST(Payload, RoundTripAllScenarios) {
  const CameraModel cam;
  for (auto s : kAllScenarios) {
    Rng rng(10 + scenario_number(s));
    for (std::size_t n : {0u, 1u, 37u, 1536u}) {
      const auto f = random_features(n, rng, s != ScenarioId::FeaturesWithDepth);
      const auto back = decode_payload(encode_payload(f, s, cam).bytes, s, cam);
      ASSERT_EQ(back.size(), f.size()) << "scenario " << scenario_number(s);
      for (std::size_t i = 0; i < n; ++i) {
        auto expected = f[i];
        if (s == ScenarioId::Raw) expected.score = static_cast<float>(std::lround(expected.score * 65535.0f) / 65535.0);
        EXPECT_EQ(back[i], expected) << "scenario " << scenario_number(s) << " feature " << i;
      }
    }
  }
}

TEST(Payload, FramingErrors) {
  const CameraModel cam;
  Rng rng(4);
  const auto f = random_features(kMaxFeatures + 1, rng, true);
  EXPECT_THROW(encode_payload(f, ScenarioId::FeaturesWithDepth, cam), FramingError);
  std::vector<std::uint8_t> short_payload(100);
  EXPECT_THROW(decode_payload(short_payload, ScenarioId::Raw, cam), FramingError);
}

TEST(Payload, CorruptedFieldsAreSanitised) {
  const CameraModel cam;
  Rng rng(5);
  const auto f = random_features(200, rng, true);
  for (auto s : kAllScenarios) {
    auto bytes = encode_payload(f, s, cam).bytes;
    Rng bit_rng(6);
    bitstorm::corrupt(bytes, 0.05, bit_rng);
    for (const auto& d : decode_payload(bytes, s, cam)) {
      EXPECT_GE(d.u, 0.0);
      EXPECT_LE(d.u, 639.0);
      EXPECT_GE(d.v, 0.0);
      EXPECT_LE(d.v, 479.0);
      EXPECT_GE(d.depth, cam.depth_min);
      EXPECT_LE(d.depth, cam.depth_max);
      EXPECT_TRUE(std::isfinite(d.score));
    }
  }
}

TEST(DepthMap, RoomDepthAndFeatureStamps) {
  const CameraModel cam;
  const auto pose = looking_along_z({2.1, 1.25, 0.5});
  const auto depth = render_depth_map(cam, SceneBounds{}, pose, {});
  // Principal ray hits the far wall at z = 2.5.
  EXPECT_EQ(depth[240 * 640 + 320], 2000);
  Feature f;
  f.u = 100.2;
  f.v = 50.7;
  f.depth = 1.2344;
  const auto stamped = render_depth_map(cam, SceneBounds{}, pose, std::span<const Feature>(&f, 1));
  EXPECT_EQ(stamped[51 * 640 + 100], 1234);
}

TEST(Matching, AcceptsCleanRejectsAmbiguous) {
  const Scene& s = default_scene();
  const auto obs = observe(s, CameraModel{}, default_trajectory(2).frames[0]);
  const auto m = match_features(obs.features, s);
  ASSERT_EQ(m.size(), obs.features.size());
  for (const auto& c : m) {
    EXPECT_EQ(static_cast<std::int32_t>(c.landmark), obs.features[c.feature].landmark_id);
    EXPECT_EQ(c.distance, 0u);
  }
  Feature junk;
  junk.descriptor = {~0ull, ~0ull, ~0ull, ~0ull};
  EXPECT_TRUE(match_features(std::span<const Feature>(&junk, 1), s).empty());
}

TEST(Jacobian, MatchesCentralDifferences) {
  Rng rng(7);
  const CameraModel cam;
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    StampedPose pose;
    pose.position = Eigen::Vector3d(uniform01(rng), uniform01(rng), uniform01(rng));
    pose.orientation = Eigen::Quaterniond(standard_normal(rng), standard_normal(rng), standard_normal(rng),
                                          standard_normal(rng)).normalized();
    const auto t = CameraFromWorld::from_pose(pose);
    const Eigen::Vector3d p_cam(standard_normal(rng), standard_normal(rng), 1.0 + 4.0 * uniform01(rng));
    const Eigen::Vector3d x = t.rotation.transpose() * (p_cam - t.translation);
    const Eigen::Vector2d obs(300, 200);
    Eigen::Vector2d r;
    Eigen::Matrix<double, 2, 6> j;
    ASSERT_TRUE(reprojection_residual(t, cam, x, obs, r, &j));
    Eigen::Matrix<double, 2, 6> num;
    const double h = 1e-6;
    for (int k = 0; k < 6; ++k) {
      Eigen::Matrix<double, 6, 1> d = Eigen::Matrix<double, 6, 1>::Zero();
      d(k) = h;
      Eigen::Vector2d rp, rm;
      ASSERT_TRUE(reprojection_residual(t.retract(d), cam, x, obs, rp));
      ASSERT_TRUE(reprojection_residual(t.retract(-d), cam, x, obs, rm));
      num.col(k) = (rp - rm) / (2 * h);
    }
    EXPECT_LT((num - j).norm() / j.norm(), 1e-5);
    ++checked;
  }
  EXPECT_EQ(checked, 200);
}

TEST(Jacobian, PointBehindCameraRejected) {
  const CameraModel cam;
  Eigen::Vector2d r;
  EXPECT_FALSE(reprojection_residual(CameraFromWorld{}, cam, {0, 0, -1}, {0, 0}, r));
}

TEST(CameraFromWorld, PoseRoundTrip) {
  StampedPose p;
  p.position = {1, 2, 3};
  p.orientation = Eigen::Quaterniond(Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()));
  const auto back = CameraFromWorld::from_pose(p).to_pose(4.5);
  EXPECT_EQ(back.timestamp, 4.5);
  EXPECT_LT((back.position - p.position).norm(), 1e-12);
  EXPECT_LT(back.orientation.angularDistance(p.orientation), 1e-12);
}

namespace {

double rotation_error(const StampedPose& a, const StampedPose& b) { return a.orientation.angularDistance(b.orientation); }

}  // namespace

TEST(SolvePose, NoiseFreeRecoversGroundTruth) {
  const Scene& s = default_scene();
  const CameraModel cam;
  for (const auto& gt : default_trajectory(10).frames) {
    const auto obs = observe(s, cam, gt);
    const auto sol = solve_pose(obs.features, match_features(obs.features, s), s, cam);
    ASSERT_TRUE(sol.solved);
    EXPECT_LT((sol.pose.position - gt.position).norm(), 1e-6);
    EXPECT_LT(rotation_error(sol.pose, gt), 1e-6);
    EXPECT_EQ(sol.inliers, obs.features.size());
  }
}

TEST(SolvePose, TrimsPlantedDepthOutliers) {
  const Scene& s = default_scene();
  const CameraModel cam;
  for (const auto& gt : default_trajectory(10, 3).frames) {
    auto obs = observe(s, cam, gt);
    for (std::size_t i = 0; i < obs.features.size(); i += 5) obs.features[i].depth = cam.depth_max;
    const auto sol = solve_pose(obs.features, match_features(obs.features, s), s, cam);
    ASSERT_TRUE(sol.solved);
    EXPECT_LT((sol.pose.position - gt.position).norm(), 1e-3);
  }
}

TEST(SolvePose, ThreeCorrespondencesUnsolved) {
  const Scene& s = default_scene();
  const CameraModel cam;
  const auto obs = observe(s, cam, default_trajectory(2).frames[0]);
  auto m = match_features(obs.features, s);
  m.resize(3);
  EXPECT_FALSE(solve_pose(obs.features, m, s, cam).solved);
}

TEST(Pipeline, NoiseFreeAteBelowTenMicrometres) {
  const auto traj = default_trajectory(100);
  for (auto sc : kAllScenarios) {
    const auto est = run_pipeline(default_scene(), CameraModel{}, traj, sc, 0.0, 1);
    EXPECT_EQ(est.solved_count(), 100u);
    EXPECT_LT(metrics::ate_translation(est, traj).rmse, 1e-5) << "scenario " << scenario_number(sc);
  }
}

TEST(Pipeline, HeavyCorruptionIncreasesError) {
  const auto traj = default_trajectory(40);
  PipelineOptions opts;
  opts.noise = {0.5, 0.005};
  const auto clean = run_pipeline(default_scene(), CameraModel{}, traj, ScenarioId::Raw, 0.0, 9, opts);
  const auto noisy = run_pipeline(default_scene(), CameraModel{}, traj, ScenarioId::Raw, 1e-2, 9, opts);
  EXPECT_GT(metrics::ate_translation(noisy, traj).rmse, metrics::ate_translation(clean, traj).rmse);
}

TEST(Pipeline, EmptySceneLeavesEveryFrameUnsolved) {
  Scene empty;
  empty.reindex();
  const auto traj = default_trajectory(10);
  const auto est = run_pipeline(empty, CameraModel{}, traj, ScenarioId::FeaturesWithDepth, 0.0, 1);
  EXPECT_EQ(est.frames.size(), 10u);
  EXPECT_EQ(est.solved_count(), 0u);
  EXPECT_THROW(metrics::ate_translation(est, traj), MetricError);
}

TEST(Pipeline, Deterministic) {
  const auto traj = default_trajectory(10);
  PipelineOptions opts;
  opts.noise = {0.5, 0.005};
  const auto a = run_pipeline(default_scene(), CameraModel{}, traj, ScenarioId::FeaturesDepthMap, 1e-3, 4, opts);
  const auto b = run_pipeline(default_scene(), CameraModel{}, traj, ScenarioId::FeaturesDepthMap, 1e-3, 4, opts);
  for (std::size_t i = 0; i < a.frames.size(); ++i) {
    EXPECT_EQ(a.frames[i].solved, b.frames[i].solved);
    EXPECT_EQ(a.frames[i].pose.position, b.frames[i].pose.position);
  }
}

TEST(CorruptionSurface, ExpectedFlipsOrderByScenario) {
  const double b1 = static_cast<double>(uplink_payload_bytes(ScenarioId::Raw)) * 8;
  const double b2 = static_cast<double>(uplink_payload_bytes(ScenarioId::FeaturesDepthMap)) * 8;
  const double b3 = static_cast<double>(uplink_payload_bytes(ScenarioId::FeaturesWithDepth)) * 8;
  for (double ber : {1e-5, 1e-4, 1e-3, 1e-2}) {
    EXPECT_GT(ber * b1, ber * b2);
    EXPECT_GT(ber * b2, ber * b3);
  }
}
