#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "xrmimo/errors.hpp"
#include "xrmimo/trajectory.hpp"

namespace xrmimo {

void GroundTruthTrajectory::validate() const {
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (i > 0 && !(frames[i].timestamp > frames[i - 1].timestamp))
      throw ConfigError("trajectory timestamps must be strictly increasing (frame " + std::to_string(i) + ")");
    if (std::abs(frames[i].orientation.norm() - 1.0) > 1e-9)
      throw ConfigError("trajectory quaternion is not unit norm (frame " + std::to_string(i) + ")");
  }
}

std::size_t TrajectoryEstimate::solved_count() const noexcept {
  std::size_t n = 0;
  for (const auto& f : frames) n += f.solved ? 1 : 0;
  return n;
}

std::vector<StampedPose> TrajectoryEstimate::solved_poses() const {
  std::vector<StampedPose> out;
  out.reserve(frames.size());
  for (const auto& f : frames)
    if (f.solved) out.push_back(f.pose);
  return out;
}

std::vector<StampedPose> read_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trajectory file '" + path.string() + "'");
  std::vector<StampedPose> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    double t, x, y, z, qx, qy, qz, qw;
    if (!(ss >> t >> x >> y >> z >> qx >> qy >> qz >> qw))
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected 8 numbers");
    StampedPose p;
    p.timestamp = t;
    p.position = {x, y, z};
    p.orientation = Eigen::Quaterniond(qw, qx, qy, qz);
    out.push_back(p);
  }
  return out;
}

void write_trajectory(const std::filesystem::path& path, const std::vector<StampedPose>& poses) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write trajectory file '" + path.string() + "'");
  out << std::setprecision(17);
  for (const auto& p : poses) {
    const auto& q = p.orientation;
    out << p.timestamp << ' ' << p.position.x() << ' ' << p.position.y() << ' ' << p.position.z() << ' '
        << q.x() << ' ' << q.y() << ' ' << q.z() << ' ' << q.w() << '\n';
  }
}

}  // namespace xrmimo
