#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Geometry>

namespace xrmimo {

/// Camera-to-world pose at a timestamp.
struct StampedPose {
  double timestamp = 0.0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Quaterniond orientation = Eigen::Quaterniond::Identity();
};

struct GroundTruthTrajectory {
  std::vector<StampedPose> frames;

  /// Strictly increasing timestamps, unit quaternions (1e-9). Throws ConfigError.
  void validate() const;
};

struct EstimatedFrame {
  StampedPose pose;
  std::uint32_t inliers = 0;
  bool solved = false;
};

/// One entry per input frame; unsolved frames stay in place, flagged.
struct TrajectoryEstimate {
  std::vector<EstimatedFrame> frames;

  std::size_t solved_count() const noexcept;
  std::vector<StampedPose> solved_poses() const;
};

// Text format shared by ground truth and estimates, one frame per line:
//   timestamp tx ty tz qx qy qz qw
// Lines starting with '#' and blank lines are skipped.
std::vector<StampedPose> read_trajectory(const std::filesystem::path& path);
void write_trajectory(const std::filesystem::path& path, const std::vector<StampedPose>& poses);

}  // namespace xrmimo
