#pragma once

// Experiment configuration: a JSON document with a fixed schema. Unknown
// keys are rejected with their key path.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "xrmimo/frame_latency.hpp"
#include "xrmimo/linkbudget.hpp"
#include "xrmimo/scenario.hpp"

namespace xrmimo {

struct LatencyStudyConfig {
  std::vector<ScenarioId> scenarios{kAllScenarios.begin(), kAllScenarios.end()};
  std::vector<std::string> structures{"A", "B"};
  std::uint32_t samples = 1000;
  LatencyConstants constants;
};

struct SensitivityStudyConfig {
  std::vector<ScenarioId> scenarios{kAllScenarios.begin(), kAllScenarios.end()};
  std::vector<double> ber_grid{1e-5, 1e-4, 1e-3, 1e-2};
  std::uint32_t trajectories = 10;
  std::uint32_t frames = 100;
  std::uint32_t trials = 1;
  std::uint32_t landmarks = 2000;
  double pixel_noise = 0.5;
  double depth_noise = 0.005;
  std::uint32_t bootstrap_draws = 10000;
  double confidence = 0.95;
};

struct ChannelSourceConfig {
  enum class Kind { Synthetic, Files };
  Kind kind = Kind::Synthetic;
  std::uint32_t antennas = 100;
  std::uint32_t users = 10;
  std::uint32_t subcarriers = 1200;
  std::vector<std::filesystem::path> paths;
};

struct BerStudyConfig {
  std::vector<double> snr_db{0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 26};
  std::uint64_t bits_per_point = 1'000'000;
  std::uint32_t qam_order = 64;
  ChannelSourceConfig channel;
};

struct PowerStudyConfig {
  std::vector<double> ber_targets{1e-4, 1e-5};
  enum class SnrMode { Analytic, Simulated };
  SnrMode snr_mode = SnrMode::Analytic;
  linkbudget::LinkBudgetConfig link_budget;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "results";
  std::vector<FrameStructure> frame_structures{FrameStructure::preset_a(), FrameStructure::preset_b()};
  ExecTimeTable exec_times = default_exec_times();
  LatencyStudyConfig latency;
  SensitivityStudyConfig sensitivity;
  BerStudyConfig ber;
  PowerStudyConfig power;

  const FrameStructure& structure(const std::string& name) const;
  /// Cross-field checks (names resolve, counts >= 1, grids in range).
  void validate() const;
};

/// Throws ConfigError("<key.path>: ...") on schema violations.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig default_config();

/// Serialises the effective configuration back to the schema.
nlohmann::json to_json(const ExperimentConfig& cfg);

/// FNV-1a of the canonical JSON of the effective configuration, output_dir excluded.
std::uint64_t config_hash(const ExperimentConfig& cfg);

}  // namespace xrmimo
