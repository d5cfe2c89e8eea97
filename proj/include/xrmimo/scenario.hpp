#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace xrmimo {

/// Offloading split between device and base station.
///   1: greyscale + depth images uplinked
///   2: features + depth image
///   3: features with depths
enum class ScenarioId : std::uint8_t { Raw = 1, FeaturesDepthMap = 2, FeaturesWithDepth = 3 };

inline constexpr std::array<ScenarioId, 3> kAllScenarios{
    ScenarioId::Raw, ScenarioId::FeaturesDepthMap, ScenarioId::FeaturesWithDepth};

inline constexpr int scenario_number(ScenarioId s) noexcept { return static_cast<int>(s); }

/// Throws ConfigError for anything outside 1..3.
ScenarioId scenario_from_number(long n);

// Wire sizes. These are fixed by the payload layouts in slam_sandbox.
inline constexpr std::uint32_t kImageWidth = 640;
inline constexpr std::uint32_t kImageHeight = 480;
inline constexpr std::uint32_t kPixels = kImageWidth * kImageHeight;
inline constexpr std::uint32_t kMaxFeatures = 1536;
inline constexpr std::uint32_t kDepthMapBytes = kPixels * 2;
inline constexpr std::uint32_t kGreyImageBytes = kPixels;
inline constexpr std::uint32_t kFeatureRecordBytes = 48;
inline constexpr std::uint32_t kFeatureDepthRecordBytes = 56;
inline constexpr std::uint32_t kPoseRecordBytes = 40;

inline constexpr std::uint64_t uplink_payload_bytes(ScenarioId s) noexcept {
  switch (s) {
    case ScenarioId::Raw: return kGreyImageBytes + kDepthMapBytes;
    case ScenarioId::FeaturesDepthMap: return std::uint64_t{kMaxFeatures} * kFeatureRecordBytes + kDepthMapBytes;
    case ScenarioId::FeaturesWithDepth: return std::uint64_t{kMaxFeatures} * kFeatureDepthRecordBytes;
  }
  return 0;
}

inline constexpr std::uint64_t downlink_payload_bytes(ScenarioId) noexcept { return kPoseRecordBytes; }

static_assert(uplink_payload_bytes(ScenarioId::Raw) == 900 * 1024);
static_assert(uplink_payload_bytes(ScenarioId::FeaturesDepthMap) == 672 * 1024);
static_assert(uplink_payload_bytes(ScenarioId::FeaturesWithDepth) == 84 * 1024);

}  // namespace xrmimo
