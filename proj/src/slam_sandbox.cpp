#include "xrmimo/slam_sandbox.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>

#include <Eigen/Cholesky>

#include "xrmimo/errors.hpp"
#include "xrmimo/metrics.hpp"
#include "xrmimo/simd/dispatch.hpp"

namespace xrmimo::sandbox {

void Scene::reindex() {
  descriptor_block.resize(landmarks.size() * 4);
  for (std::size_t i = 0; i < landmarks.size(); ++i)
    std::copy(landmarks[i].descriptor.begin(), landmarks[i].descriptor.end(), descriptor_block.begin() + 4 * i);
}

Scene generate_scene(std::size_t n_landmarks, const SceneBounds& bounds, Rng& rng) {
  if (n_landmarks < 4) throw ConfigError("a scene needs at least 4 landmarks");
  if (!((bounds.max.array() > bounds.min.array()).all())) throw ConfigError("scene bounds are empty");

  Scene scene;
  scene.bounds = bounds;
  scene.landmarks.reserve(n_landmarks);
  scene.descriptor_block.reserve(n_landmarks * 4);

  const auto& kern = simd::kernels();
  std::vector<std::uint32_t> dist(n_landmarks);
  const std::size_t budget = 64 * n_landmarks + 1024;
  std::size_t attempts = 0;
  const Eigen::Vector3d size = bounds.size();

  while (scene.landmarks.size() < n_landmarks) {
    Landmark lm;
    for (int a = 0; a < 3; ++a) lm.position[a] = bounds.min[a] + size[a] * uniform01(rng);
    lm.intensity = static_cast<std::uint8_t>(rng() >> 56);

    for (;;) {
      if (++attempts > budget) throw GenerationError("descriptor rejection budget exhausted");
      for (auto& w : lm.descriptor) w = rng();
      const std::size_t have = scene.landmarks.size();
      kern.hamming256(lm.descriptor.data(), scene.descriptor_block.data(), have, dist.data());
      if (std::all_of(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(have),
                      [](std::uint32_t d) { return d >= kMinDescriptorSeparation; }))
        break;
    }
    scene.descriptor_block.insert(scene.descriptor_block.end(), lm.descriptor.begin(), lm.descriptor.end());
    scene.landmarks.push_back(lm);
  }
  return scene;
}

void CameraModel::validate() const {
  if (width == 0 || height == 0) throw ConfigError("camera resolution must be non-zero");
  if (!(fx > 0.0) || !(fy > 0.0)) throw ConfigError("camera focal lengths must be > 0");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height))
    throw ConfigError("camera principal point must lie inside the image");
  if (!(depth_min > 0.0) || !(depth_min < depth_max)) throw ConfigError("camera depth range must satisfy 0 < min < max");
}

namespace {

Eigen::Matrix3d camera_to_world(double yaw, double pitch) {
  // Camera looking along +x_w with y_c down: x_c -> -y_w, y_c -> -z_w, z_c -> +x_w.
  Eigen::Matrix3d base;
  base << 0, 0, 1, -1, 0, 0, 0, -1, 0;
  return (Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) * Eigen::AngleAxisd(-pitch, Eigen::Vector3d::UnitY()))
             .toRotationMatrix() *
         base;
}

}  // namespace

GroundTruthTrajectory generate_trajectory(std::size_t n_frames, const SceneBounds& bounds, Rng& rng,
                                          const TrajectoryParams& params) {
  if (n_frames < 2) throw ConfigError("a trajectory needs at least 2 frames");
  if (!(params.rate_hz > 0.0) || !(params.period_s > 0.0)) throw ConfigError("trajectory rate and period must be > 0");

  const Eigen::Vector3d c = bounds.center();
  const Eigen::Vector3d size = bounds.size();
  const double ax = size.x() * (0.22 + 0.06 * uniform01(rng));
  const double ay = size.y() * (0.22 + 0.06 * uniform01(rng));
  const double phase = 2.0 * std::numbers::pi * uniform01(rng);
  const double dir = uniform01(rng) < 0.5 ? 1.0 : -1.0;
  const double z0 = c.z() + (uniform01(rng) - 0.5) * 0.2 * size.z();
  const double hz = (0.02 + 0.02 * uniform01(rng)) * size.z();
  const double sway_phase = 2.0 * std::numbers::pi * uniform01(rng);
  const double pitch_phase = 2.0 * std::numbers::pi * uniform01(rng);
  const double omega = 2.0 * std::numbers::pi / params.period_s;

  GroundTruthTrajectory traj;
  traj.frames.reserve(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    const double t = static_cast<double>(i) / params.rate_hz;
    const double theta = phase + dir * omega * t;
    StampedPose p;
    p.timestamp = t;
    p.position = {c.x() + ax * std::cos(theta), c.y() + ay * std::sin(theta), z0 + hz * std::sin(2.0 * theta)};
    const double yaw = std::atan2(c.y() - p.position.y(), c.x() - p.position.x()) +
                       0.35 * std::sin(1.5 * omega * t + sway_phase);
    const double pitch = 0.08 * std::sin(omega * t + pitch_phase);
    p.orientation = Eigen::Quaterniond(camera_to_world(yaw, pitch)).normalized();
    traj.frames.push_back(p);
  }
  return traj;
}

Observation observe(const Scene& scene, const CameraModel& camera, const StampedPose& pose) {
  Rng unused(0);
  return observe(scene, camera, pose, ObservationNoise{}, unused);
}

Observation observe(const Scene& scene, const CameraModel& camera, const StampedPose& pose,
                    const ObservationNoise& noise, Rng& rng) {
  const Eigen::Matrix3d r_cw = pose.orientation.toRotationMatrix().transpose();
  struct Candidate {
    double radius2;
    std::uint32_t id;
    Eigen::Vector2d uv;
    double depth;
  };
  std::vector<Candidate> visible;
  for (std::size_t i = 0; i < scene.landmarks.size(); ++i) {
    const Eigen::Vector3d pc = r_cw * (scene.landmarks[i].position - pose.position);
    if (!(pc.z() >= camera.depth_min && pc.z() <= camera.depth_max)) continue;
    const Eigen::Vector2d uv = camera.project(pc);
    if (uv.x() < 0.0 || uv.y() < 0.0 || uv.x() > camera.width - 1.0 || uv.y() > camera.height - 1.0) continue;
    const double du = uv.x() - camera.cx;
    const double dv = uv.y() - camera.cy;
    visible.push_back({du * du + dv * dv, static_cast<std::uint32_t>(i), uv, pc.z()});
  }
  std::sort(visible.begin(), visible.end(), [](const Candidate& a, const Candidate& b) {
    return a.radius2 != b.radius2 ? a.radius2 < b.radius2 : a.id < b.id;
  });
  if (visible.size() > kMaxFeatures) visible.resize(kMaxFeatures);

  Observation obs;
  obs.features.reserve(visible.size());
  const bool noisy = noise.pixel_sigma > 0.0 || noise.depth_sigma > 0.0;
  for (const auto& c : visible) {
    const Landmark& lm = scene.landmarks[c.id];
    Feature f;
    f.u = c.uv.x();
    f.v = c.uv.y();
    f.depth = c.depth;
    if (noisy) {
      f.u += noise.pixel_sigma * standard_normal(rng);
      f.v += noise.pixel_sigma * standard_normal(rng);
      f.depth += noise.depth_sigma * standard_normal(rng);
    }
    f.descriptor = lm.descriptor;
    f.intensity = lm.intensity;
    f.score = static_cast<float>(1.0 / (1.0 + std::sqrt(c.radius2) / 100.0));
    f.landmark_id = static_cast<std::int32_t>(c.id);
    obs.features.push_back(f);
  }
  obs.degenerate = obs.features.size() < 4;
  return obs;
}

namespace {

std::uint16_t depth_to_mm(double depth, const CameraModel& camera) {
  const double d = std::clamp(depth, camera.depth_min, camera.depth_max);
  return static_cast<std::uint16_t>(std::lround(d * 1000.0));
}

std::size_t pixel_index(double u, double v, const CameraModel& camera) {
  const auto x = static_cast<std::size_t>(std::clamp(std::lround(u), 0L, static_cast<long>(camera.width) - 1));
  const auto y = static_cast<std::size_t>(std::clamp(std::lround(v), 0L, static_cast<long>(camera.height) - 1));
  return y * camera.width + x;
}

void stamp_features(DepthImage& depth, std::span<const Feature> features, const CameraModel& camera) {
  for (auto it = features.rbegin(); it != features.rend(); ++it)
    depth[pixel_index(it->u, it->v, camera)] = depth_to_mm(it->depth, camera);
}

}  // namespace

DepthImage render_depth_map(const CameraModel& camera, const SceneBounds& room, const StampedPose& pose,
                            std::span<const Feature> features) {
  const Eigen::Matrix3d r_wc = pose.orientation.toRotationMatrix();
  const Eigen::Vector3d& o = pose.position;
  DepthImage depth(std::size_t{camera.width} * camera.height);
  for (std::uint32_t y = 0; y < camera.height; ++y) {
    for (std::uint32_t x = 0; x < camera.width; ++x) {
      // Ray with unit z in the camera frame, so the exit distance is depth.
      const Eigen::Vector3d d = r_wc * Eigen::Vector3d((x - camera.cx) / camera.fx, (y - camera.cy) / camera.fy, 1.0);
      double t = camera.depth_max;
      for (int a = 0; a < 3; ++a) {
        if (d[a] > 1e-12) t = std::min(t, (room.max[a] - o[a]) / d[a]);
        else if (d[a] < -1e-12) t = std::min(t, (room.min[a] - o[a]) / d[a]);
      }
      depth[std::size_t{y} * camera.width + x] = depth_to_mm(t, camera);
    }
  }
  stamp_features(depth, features, camera);
  return depth;
}

// ---------------------------------------------------------------------------
// Wire format

namespace {

constexpr std::uint32_t kPatchSide = 8;
constexpr std::uint32_t kPatchesPerRow = kImageWidth / kPatchSide;
constexpr std::uint8_t kPatchMarker = 0xA5;
constexpr std::uint32_t kValidBit = 1u << 31;

static_assert(kPatchesPerRow * (kImageHeight / kPatchSide) >= kMaxFeatures);

void put_u16(std::uint8_t* p, std::uint16_t v) {
  p[0] = static_cast<std::uint8_t>(v);
  p[1] = static_cast<std::uint8_t>(v >> 8);
}
void put_u32(std::uint8_t* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
void put_u64(std::uint8_t* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}
std::uint16_t get_u16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}
std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}
void put_f32(std::uint8_t* p, double v) { put_u32(p, std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
double get_f32(const std::uint8_t* p) { return std::bit_cast<float>(get_u32(p)); }

void put_descriptor(std::uint8_t* p, const Descriptor& d) {
  for (int w = 0; w < 4; ++w) put_u64(p + 8 * w, d[w]);
}
Descriptor get_descriptor(const std::uint8_t* p) {
  Descriptor d;
  for (int w = 0; w < 4; ++w) d[w] = get_u64(p + 8 * w);
  return d;
}

// Grey-image patch: descriptor[32] u:f32 v:f32 intensity:u8 marker:u8 score:u16,
// remaining 20 pixels keep the background texture.
constexpr std::uint32_t kPatchBytes = kPatchSide * kPatchSide;

std::uint8_t background_texture(std::uint32_t x, std::uint32_t y) {
  return static_cast<std::uint8_t>(16 + (x * 3 + y * 5) % 128);  // never equals kPatchMarker
}

std::size_t patch_pixel(std::uint32_t patch, std::uint32_t byte) {
  const std::uint32_t px = (patch % kPatchesPerRow) * kPatchSide + byte % kPatchSide;
  const std::uint32_t py = (patch / kPatchesPerRow) * kPatchSide + byte / kPatchSide;
  return std::size_t{py} * kImageWidth + px;
}

void write_depth_map(std::uint8_t* out, const DepthImage& depth) {
  for (std::size_t i = 0; i < depth.size(); ++i) put_u16(out + 2 * i, depth[i]);
}

void write_record(std::uint8_t* p, const Feature& f, bool with_depth) {
  put_descriptor(p, f.descriptor);
  put_f32(p + 32, f.u);
  put_f32(p + 36, f.v);
  put_u32(p + 40, std::bit_cast<std::uint32_t>(f.score));
  put_u32(p + 44, kValidBit | f.intensity);
  if (with_depth) put_u64(p + 48, std::bit_cast<std::uint64_t>(f.depth));
}

struct Ranges {
  bitstorm::FieldSpec u, v, score, depth;
  std::uint16_t depth_mm_min, depth_mm_max;

  explicit Ranges(const CameraModel& cam)
      : u{0.0, cam.width - 1.0},
        v{0.0, cam.height - 1.0},
        score{0.0, 1.0},
        depth{cam.depth_min, cam.depth_max},
        depth_mm_min(depth_to_mm(cam.depth_min, cam)),
        depth_mm_max(depth_to_mm(cam.depth_max, cam)) {}
};

double depth_from_map(const std::uint8_t* map, double u, double v, const CameraModel& cam, const Ranges& r) {
  const std::uint16_t mm =
      bitstorm::sanitize_int(get_u16(map + 2 * pixel_index(u, v, cam)), r.depth_mm_min, r.depth_mm_max);
  return mm / 1000.0;
}

}  // namespace

ScenarioPayload encode_payload(std::span<const Feature> features, ScenarioId scenario, const CameraModel& camera,
                               const DepthImage* depth) {
  if (features.size() > kMaxFeatures)
    throw FramingError("at most " + std::to_string(kMaxFeatures) + " features fit a payload, got " +
                       std::to_string(features.size()));
  if (camera.width != kImageWidth || camera.height != kImageHeight)
    throw FramingError("payload layouts are defined for 640x480 images");

  ScenarioPayload out;
  out.scenario = scenario;
  out.bytes.assign(uplink_payload_bytes(scenario), 0);
  std::uint8_t* p = out.bytes.data();

  DepthImage fallback;
  if (scenario != ScenarioId::FeaturesWithDepth && depth == nullptr) {
    fallback.assign(kPixels, depth_to_mm(camera.depth_max, camera));
    stamp_features(fallback, features, camera);
    depth = &fallback;
  }
  if (depth != nullptr && depth->size() != kPixels) throw FramingError("depth map must have 640x480 pixels");

  switch (scenario) {
    case ScenarioId::Raw: {
      for (std::uint32_t y = 0; y < kImageHeight; ++y)
        for (std::uint32_t x = 0; x < kImageWidth; ++x) p[std::size_t{y} * kImageWidth + x] = background_texture(x, y);
      std::uint8_t patch[kPatchBytes];
      for (std::uint32_t i = 0; i < features.size(); ++i) {
        for (std::uint32_t b = 0; b < kPatchBytes; ++b) patch[b] = p[patch_pixel(i, b)];
        const Feature& f = features[i];
        put_descriptor(patch, f.descriptor);
        put_f32(patch + 32, f.u);
        put_f32(patch + 36, f.v);
        patch[40] = f.intensity;
        patch[41] = kPatchMarker;
        put_u16(patch + 42, static_cast<std::uint16_t>(std::lround(std::clamp(f.score, 0.0f, 1.0f) * 65535.0f)));
        for (std::uint32_t b = 0; b < kPatchBytes; ++b) p[patch_pixel(i, b)] = patch[b];
      }
      write_depth_map(p + kGreyImageBytes, *depth);
      break;
    }
    case ScenarioId::FeaturesDepthMap:
      for (std::size_t i = 0; i < features.size(); ++i) write_record(p + i * kFeatureRecordBytes, features[i], false);
      write_depth_map(p + std::size_t{kMaxFeatures} * kFeatureRecordBytes, *depth);
      break;
    case ScenarioId::FeaturesWithDepth:
      for (std::size_t i = 0; i < features.size(); ++i)
        write_record(p + i * kFeatureDepthRecordBytes, features[i], true);
      break;
  }
  return out;
}

std::vector<Feature> decode_payload(std::span<const std::uint8_t> bytes, ScenarioId scenario,
                                    const CameraModel& camera) {
  if (bytes.size() != uplink_payload_bytes(scenario))
    throw FramingError("scenario " + std::to_string(scenario_number(scenario)) + " payload must be " +
                       std::to_string(uplink_payload_bytes(scenario)) + " bytes, got " +
                       std::to_string(bytes.size()));
  if (camera.width != kImageWidth || camera.height != kImageHeight)
    throw FramingError("payload layouts are defined for 640x480 images");

  const Ranges r(camera);
  const std::uint8_t* p = bytes.data();
  std::vector<Feature> out;

  auto read_record = [&](const std::uint8_t* rec, bool with_depth, const std::uint8_t* depth_map) {
    const std::uint32_t meta = get_u32(rec + 44);
    if ((meta & kValidBit) == 0) return;
    Feature f;
    f.descriptor = get_descriptor(rec);
    f.u = bitstorm::sanitize_field(get_f32(rec + 32), r.u);
    f.v = bitstorm::sanitize_field(get_f32(rec + 36), r.v);
    f.score = static_cast<float>(bitstorm::sanitize_field(get_f32(rec + 40), r.score));
    f.intensity = static_cast<std::uint8_t>(meta & 0xffu);
    f.depth = with_depth ? bitstorm::sanitize_field(std::bit_cast<double>(get_u64(rec + 48)), r.depth)
                         : depth_from_map(depth_map, f.u, f.v, camera, r);
    out.push_back(f);
  };

  switch (scenario) {
    case ScenarioId::Raw: {
      const std::uint8_t* depth_map = p + kGreyImageBytes;
      std::uint8_t patch[kPatchBytes];
      for (std::uint32_t i = 0; i < kMaxFeatures; ++i) {
        if (p[patch_pixel(i, 41)] != kPatchMarker) continue;
        for (std::uint32_t b = 0; b < kPatchBytes; ++b) patch[b] = p[patch_pixel(i, b)];
        Feature f;
        f.descriptor = get_descriptor(patch);
        f.u = bitstorm::sanitize_field(get_f32(patch + 32), r.u);
        f.v = bitstorm::sanitize_field(get_f32(patch + 36), r.v);
        f.intensity = patch[40];
        f.score = static_cast<float>(get_u16(patch + 42) / 65535.0);
        f.depth = depth_from_map(depth_map, f.u, f.v, camera, r);
        out.push_back(f);
      }
      break;
    }
    case ScenarioId::FeaturesDepthMap: {
      const std::uint8_t* depth_map = p + std::size_t{kMaxFeatures} * kFeatureRecordBytes;
      for (std::size_t i = 0; i < kMaxFeatures; ++i) read_record(p + i * kFeatureRecordBytes, false, depth_map);
      break;
    }
    case ScenarioId::FeaturesWithDepth:
      for (std::size_t i = 0; i < kMaxFeatures; ++i) read_record(p + i * kFeatureDepthRecordBytes, true, nullptr);
      break;
  }
  return out;
}

std::vector<Correspondence> match_features(std::span<const Feature> features, const Scene& scene) {
  std::vector<Correspondence> out;
  const std::size_t n = scene.landmarks.size();
  if (features.empty() || n == 0) return out;
  if (scene.descriptor_block.size() != 4 * n) throw ConfigError("scene descriptor index is stale; call reindex()");

  const auto& kern = simd::kernels();
  std::vector<std::uint32_t> dist(n);
  for (std::size_t i = 0; i < features.size(); ++i) {
    kern.hamming256(features[i].descriptor.data(), scene.descriptor_block.data(), n, dist.data());
    std::uint32_t best = UINT32_MAX, second = UINT32_MAX, best_idx = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (dist[j] < best) {
        second = best;
        best = dist[j];
        best_idx = static_cast<std::uint32_t>(j);
      } else if (dist[j] < second) {
        second = dist[j];
      }
    }
    if (best <= kMaxMatchDistance && (second == UINT32_MAX || second >= best + kMatchRatioMargin))
      out.push_back({static_cast<std::uint32_t>(i), best_idx, best});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pose solver

CameraFromWorld CameraFromWorld::from_pose(const StampedPose& pose) {
  CameraFromWorld t;
  t.rotation = pose.orientation.toRotationMatrix().transpose();
  t.translation = -t.rotation * pose.position;
  return t;
}

StampedPose CameraFromWorld::to_pose(double timestamp) const {
  StampedPose p;
  p.timestamp = timestamp;
  const Eigen::Matrix3d r_wc = rotation.transpose();
  p.position = -r_wc * translation;
  p.orientation = Eigen::Quaterniond(r_wc).normalized();
  return p;
}

namespace {

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& omega) {
  const double theta = omega.norm();
  if (theta < 1e-12) {
    Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
    r(0, 1) = -omega.z(); r(0, 2) = omega.y();
    r(1, 0) = omega.z();  r(1, 2) = -omega.x();
    r(2, 0) = -omega.y(); r(2, 1) = omega.x();
    return r;
  }
  return Eigen::AngleAxisd(theta, omega / theta).toRotationMatrix();
}

double median_of(std::vector<double> v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

}  // namespace

CameraFromWorld CameraFromWorld::retract(const Eigen::Matrix<double, 6, 1>& xi) const {
  const Eigen::Matrix3d r = so3_exp(xi.tail<3>());
  CameraFromWorld out;
  out.rotation = r * rotation;
  out.translation = r * translation + xi.head<3>();
  return out;
}

bool reprojection_residual(const CameraFromWorld& t, const CameraModel& camera, const Eigen::Vector3d& landmark,
                           const Eigen::Vector2d& observed, Eigen::Vector2d& residual,
                           Eigen::Matrix<double, 2, 6>* jacobian) {
  const Eigen::Vector3d p = t.rotation * landmark + t.translation;
  if (!(p.z() > 1e-6)) return false;
  residual = camera.project(p) - observed;
  if (jacobian != nullptr) {
    const double iz = 1.0 / p.z();
    const double iz2 = iz * iz;
    Eigen::Matrix<double, 2, 3> dproj;
    dproj << camera.fx * iz, 0.0, -camera.fx * p.x() * iz2, 0.0, camera.fy * iz, -camera.fy * p.y() * iz2;
    Eigen::Matrix<double, 3, 6> dp;
    dp.leftCols<3>().setIdentity();
    dp.rightCols<3>() << 0.0, p.z(), -p.y(), -p.z(), 0.0, p.x(), p.y(), -p.x(), 0.0;
    *jacobian = dproj * dp;
  }
  return true;
}

PoseSolution solve_pose(std::span<const Feature> features, std::span<const Correspondence> matches,
                        const Scene& scene, const CameraModel& camera, const SolverOptions& options) {
  PoseSolution out;
  if (matches.size() < 4) return out;

  std::vector<Eigen::Vector3d> cam_pts, map_pts;
  std::vector<Eigen::Vector2d> pixels;
  for (const auto& m : matches) {
    const Feature& f = features[m.feature];
    cam_pts.push_back(camera.back_project(f.u, f.v, f.depth));
    map_pts.push_back(scene.landmarks[m.landmark].position);
    pixels.emplace_back(f.u, f.v);
  }

  std::vector<std::size_t> active(matches.size());
  for (std::size_t i = 0; i < active.size(); ++i) active[i] = i;

  metrics::Similarity world_from_cam;
  for (int round = 0;; ++round) {
    std::vector<Eigen::Vector3d> src, dst;
    for (std::size_t i : active) {
      src.push_back(cam_pts[i]);
      dst.push_back(map_pts[i]);
    }
    try {
      world_from_cam = metrics::umeyama_align(src, dst, false);
    } catch (const MetricError&) {
      return out;
    }
    if (round == options.trim_rounds) break;

    std::vector<double> res(active.size());
    for (std::size_t j = 0; j < active.size(); ++j)
      res[j] = (world_from_cam.apply(cam_pts[active[j]]) - map_pts[active[j]]).norm();
    const double med = median_of(res);
    std::vector<double> dev(res.size());
    for (std::size_t j = 0; j < res.size(); ++j) dev[j] = std::abs(res[j] - med);
    const double mad = median_of(dev);
    const double limit = med + options.trim_mad_factor * std::max(mad, options.trim_floor_m);

    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < active.size(); ++j)
      if (res[j] <= limit) keep.push_back(active[j]);
    if (keep.size() == active.size()) break;
    if (keep.size() < 4) return out;
    active = std::move(keep);
  }

  CameraFromWorld t;
  t.rotation = world_from_cam.rotation.transpose();
  t.translation = -t.rotation * world_from_cam.translation;

  for (int it = 0; it < options.max_iterations; ++it) {
    Eigen::Matrix<double, 6, 6> h = Eigen::Matrix<double, 6, 6>::Zero();
    Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
    int used = 0;
    for (std::size_t i : active) {
      Eigen::Vector2d r;
      Eigen::Matrix<double, 2, 6> j;
      if (!reprojection_residual(t, camera, map_pts[i], pixels[i], r, &j)) continue;
      const double e = r.norm();
      const double w = e <= options.huber_delta_px ? 1.0 : options.huber_delta_px / e;
      h.noalias() += w * j.transpose() * j;
      g.noalias() += w * j.transpose() * r;
      ++used;
    }
    if (used < 4) return out;
    const Eigen::Matrix<double, 6, 1> xi = h.ldlt().solve(-g);
    if (!xi.allFinite()) return out;
    t = t.retract(xi);
    if (xi.norm() < options.step_tolerance) break;
  }

  out.pose = t.to_pose(0.0);
  if (!out.pose.position.allFinite() || !out.pose.orientation.coeffs().allFinite()) return PoseSolution{};
  out.inliers = static_cast<std::uint32_t>(active.size());
  out.solved = true;
  return out;
}

PoseSolution localise(std::span<const std::uint8_t> payload, ScenarioId scenario, const Scene& scene,
                      const CameraModel& camera, const SolverOptions& options) {
  const auto features = decode_payload(payload, scenario, camera);
  const auto matches = match_features(features, scene);
  return solve_pose(features, matches, scene, camera, options);
}

TrajectoryEstimate run_pipeline(const Scene& scene, const CameraModel& camera,
                                const GroundTruthTrajectory& trajectory, ScenarioId scenario, double ber,
                                std::uint64_t seed, const PipelineOptions& options) {
  camera.validate();
  if (!(ber >= 0.0 && ber <= 1.0)) throw ConfigError("ber must lie in [0, 1]");

  TrajectoryEstimate est;
  est.frames.reserve(trajectory.frames.size());
  for (std::size_t i = 0; i < trajectory.frames.size(); ++i) {
    const StampedPose& gt = trajectory.frames[i];
    EstimatedFrame frame;
    frame.pose.timestamp = gt.timestamp;

    Rng obs_rng(derive_seed(seed, "observe", i));
    const Observation obs = observe(scene, camera, gt, options.noise, obs_rng);
    if (!obs.degenerate) {
      DepthImage depth;
      if (scenario != ScenarioId::FeaturesWithDepth) depth = render_depth_map(camera, scene.bounds, gt, obs.features);
      ScenarioPayload payload = encode_payload(obs.features, scenario, camera, depth.empty() ? nullptr : &depth);
      Rng bit_rng(derive_seed(seed, "corrupt", i));
      bitstorm::corrupt(payload.bytes, ber, bit_rng);
      const PoseSolution sol = localise(payload.bytes, scenario, scene, camera, options.solver);
      if (sol.solved) {
        frame.pose = sol.pose;
        frame.pose.timestamp = gt.timestamp;
        frame.inliers = sol.inliers;
        frame.solved = true;
      }
    }
    est.frames.push_back(frame);
  }
  return est;
}

}  // namespace xrmimo::sandbox
