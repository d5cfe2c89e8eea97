#pragma once

// Known-map landmark localisation standing in for a full visual SLAM
// pipeline. The base station holds the map; each frame's observations are
// serialised into a scenario payload, optionally corrupted, decoded with
// range sanitisation, matched by descriptor and solved for the camera pose.
// There is no mapping, loop closure or bundle adjustment.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "xrmimo/bitstorm.hpp"
#include "xrmimo/rng.hpp"
#include "xrmimo/scenario.hpp"
#include "xrmimo/trajectory.hpp"

namespace xrmimo::sandbox {

/// 256-bit binary descriptor as four little-endian words.
using Descriptor = std::array<std::uint64_t, 4>;

inline constexpr std::uint32_t kMinDescriptorSeparation = 80;
inline constexpr std::uint32_t kMaxMatchDistance = 64;
inline constexpr std::uint32_t kMatchRatioMargin = 32;

struct SceneBounds {
  Eigen::Vector3d min{0.0, 0.0, 0.0};
  Eigen::Vector3d max{4.2, 2.5, 2.5};

  Eigen::Vector3d size() const { return max - min; }
  Eigen::Vector3d center() const { return 0.5 * (min + max); }
  bool contains(const Eigen::Vector3d& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
};

struct Landmark {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Descriptor descriptor{};
  std::uint8_t intensity = 0;
};

struct Scene {
  std::vector<Landmark> landmarks;
  SceneBounds bounds;
  /// Descriptors packed contiguously (4 words per landmark) for the
  /// Hamming kernel. Kept in sync by `reindex()`.
  std::vector<std::uint64_t> descriptor_block;

  void reindex();
};

/// Uniform landmark positions in `bounds`; descriptors drawn by rejection so
/// every pair differs in at least 80 bits. Throws GenerationError if the
/// rejection budget runs out.
Scene generate_scene(std::size_t n_landmarks, const SceneBounds& bounds, Rng& rng);

/// Pinhole camera, x right, y down, z forward. Pixel (u, v) = (fx x/z + cx, fy y/z + cy).
struct CameraModel {
  std::uint32_t width = kImageWidth;
  std::uint32_t height = kImageHeight;
  double fx = 380.0;
  double fy = 380.0;
  double cx = 320.0;
  double cy = 240.0;
  double depth_min = 0.3;
  double depth_max = 10.0;

  void validate() const;
  Eigen::Vector2d project(const Eigen::Vector3d& p_cam) const {
    return {fx * p_cam.x() / p_cam.z() + cx, fy * p_cam.y() / p_cam.z() + cy};
  }
  Eigen::Vector3d back_project(double u, double v, double depth) const {
    return {(u - cx) / fx * depth, (v - cy) / fy * depth, depth};
  }
};

struct TrajectoryParams {
  double rate_hz = 30.0;
  double period_s = 12.0;  // one loop of the closed path
};

/// Smooth closed loop inside `bounds`: ellipse in x/y with a small height
/// oscillation, heading towards the room centre plus a slow yaw sway.
/// Orientation is camera-to-world.
GroundTruthTrajectory generate_trajectory(std::size_t n_frames, const SceneBounds& bounds, Rng& rng,
                                          const TrajectoryParams& params = {});

struct Feature {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
  Descriptor descriptor{};
  std::uint8_t intensity = 0;
  float score = 0.0f;
  /// Source landmark; test oracle only, never serialised (-1 after decode).
  std::int32_t landmark_id = -1;

  bool operator==(const Feature&) const = default;
};

struct ObservationNoise {
  double pixel_sigma = 0.0;
  double depth_sigma = 0.0;
};

struct Observation {
  std::vector<Feature> features;
  bool degenerate = false;  // fewer than 4 visible landmarks
};

/// Landmarks inside the image with depth in [depth_min, depth_max], ordered
/// by distance to the principal point, at most kMaxFeatures kept.
Observation observe(const Scene& scene, const CameraModel& camera, const StampedPose& pose);
Observation observe(const Scene& scene, const CameraModel& camera, const StampedPose& pose,
                    const ObservationNoise& noise, Rng& rng);

/// Dense 16-bit depth in millimetres, row-major.
using DepthImage = std::vector<std::uint16_t>;

/// Depth of the room walls (ray / bounds intersection) with each feature's
/// depth stamped at its rounded pixel. Features earlier in the list win
/// pixel collisions.
DepthImage render_depth_map(const CameraModel& camera, const SceneBounds& room, const StampedPose& pose,
                            std::span<const Feature> features);

struct ScenarioPayload {
  ScenarioId scenario = ScenarioId::FeaturesWithDepth;
  std::vector<std::uint8_t> bytes;

  std::uint64_t bit_count() const noexcept { return std::uint64_t{bytes.size()} * 8; }
};

/// Scenarios 1 and 2 carry a depth map; when `depth` is null the map is
/// filled with depth_max and stamped with the feature depths.
/// Throws FramingError for more than kMaxFeatures features.
ScenarioPayload encode_payload(std::span<const Feature> features, ScenarioId scenario,
                               const CameraModel& camera, const DepthImage* depth = nullptr);

/// Every decoded field is range-sanitised. Throws FramingError when the
/// byte count does not match the scenario.
std::vector<Feature> decode_payload(std::span<const std::uint8_t> bytes, ScenarioId scenario,
                                    const CameraModel& camera);

struct Correspondence {
  std::uint32_t feature = 0;
  std::uint32_t landmark = 0;
  std::uint32_t distance = 0;
};

/// Nearest scene descriptor per feature; accepted iff the best distance is
/// <= 64 and the second best is at least 32 further away.
std::vector<Correspondence> match_features(std::span<const Feature> features, const Scene& scene);

struct PoseSolution {
  StampedPose pose;  // camera-to-world; timestamp untouched
  std::uint32_t inliers = 0;
  bool solved = false;
};

struct SolverOptions {
  double trim_mad_factor = 3.0;
  double trim_floor_m = 5e-3;  // below depth quantisation noise nothing is trimmed
  int trim_rounds = 5;
  double huber_delta_px = 2.0;
  int max_iterations = 10;
  double step_tolerance = 1e-8;
};

/// Closed-form 3D-3D rigid alignment with MAD trimming, then Gauss-Newton
/// on pixel reprojection error with a Huber loss.
PoseSolution solve_pose(std::span<const Feature> features, std::span<const Correspondence> matches,
                        const Scene& scene, const CameraModel& camera, const SolverOptions& options = {});

/// World-to-camera rigid transform used by the refinement.
struct CameraFromWorld {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static CameraFromWorld from_pose(const StampedPose& pose);
  StampedPose to_pose(double timestamp) const;
  /// Left update: p' = Exp(omega) p + rho, xi = (rho, omega).
  CameraFromWorld retract(const Eigen::Matrix<double, 6, 1>& xi) const;
};

/// Pixel residual projected(X) - observed and its 2x6 Jacobian w.r.t. xi at 0.
/// Returns false when the point is not in front of the camera.
bool reprojection_residual(const CameraFromWorld& t, const CameraModel& camera, const Eigen::Vector3d& landmark,
                           const Eigen::Vector2d& observed, Eigen::Vector2d& residual,
                           Eigen::Matrix<double, 2, 6>* jacobian = nullptr);

/// Decode -> match -> solve for one received payload.
PoseSolution localise(std::span<const std::uint8_t> payload, ScenarioId scenario, const Scene& scene,
                      const CameraModel& camera, const SolverOptions& options = {});

struct PipelineOptions {
  ObservationNoise noise;
  SolverOptions solver;
};

/// Per frame: observe, encode, corrupt, decode + sanitise, match, solve.
/// Frame i draws observation noise from derive_seed(seed, "observe", i) and
/// bit errors from derive_seed(seed, "corrupt", i).
TrajectoryEstimate run_pipeline(const Scene& scene, const CameraModel& camera,
                                const GroundTruthTrajectory& trajectory, ScenarioId scenario, double ber,
                                std::uint64_t seed, const PipelineOptions& options = {});

}  // namespace xrmimo::sandbox
