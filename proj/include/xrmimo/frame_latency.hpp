#pragma once

// Pose-correction latency over TDD frame structures.
//
//   tau_pose = tau_device + tau_ul + tau_bs + tau_offloaded + tau_dl
//   tau_dir  = tau_symb * (wait + symbols + slots * (N_symb - N_dir))
//
// Device RF/baseband latency, propagation delay and queueing are zero.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "xrmimo/rng.hpp"
#include "xrmimo/scenario.hpp"

namespace xrmimo {

enum class SymbolRole : std::uint8_t { Pilot, UplinkData, DownlinkData, Guard };
enum class Direction : std::uint8_t { Uplink, Downlink };

std::string_view direction_name(Direction d) noexcept;

struct FrameStructure {
  std::string name;
  std::vector<SymbolRole> layout;
  std::uint32_t n_subcarriers = 1200;
  std::uint32_t bits_per_qam_symbol = 6;
  double tau_symb = 71.4e-6;

  /// Throws ConfigError when an invariant does not hold.
  void validate() const;

  std::uint32_t n_symb() const noexcept { return static_cast<std::uint32_t>(layout.size()); }
  std::uint32_t data_symbols(Direction d) const noexcept;
  std::uint64_t bits_per_ofdm_symbol() const noexcept {
    return std::uint64_t{n_subcarriers} * bits_per_qam_symbol;
  }

  /// Balanced: P U U U U P D D D D
  static FrameStructure preset_a();
  /// Uplink-heavy: P U U U U U U U U D
  static FrameStructure preset_b();
};

/// One character per symbol: P pilot, U uplink, D downlink, G guard.
/// Whitespace is ignored. Throws ConfigError on any other character.
std::vector<SymbolRole> parse_layout(std::string_view text);
std::string format_layout(const std::vector<SymbolRole>& layout);

std::uint64_t symbols_per_pose(std::uint64_t payload_bits, const FrameStructure& fs);

/// Inter-slot overheads crossed: ceil(n / N_dir) - 1.
std::uint64_t slots_per_pose(std::uint64_t n_symb_pose, const FrameStructure& fs, Direction dir);

/// Largest cyclic gap between consecutive starts of `dir` data symbols, in
/// whole symbols. An arrival is assumed just after a symbol boundary.
std::uint32_t worst_case_wait(const FrameStructure& fs, Direction dir);

double transmission_latency(std::uint64_t payload_bits, const FrameStructure& fs, Direction dir);

/// Execution-time distribution for tau_device / tau_offloaded.
struct ExecTimeModel {
  enum class Kind : std::uint8_t { Constant, Empirical, TruncatedNormal };

  Kind kind = Kind::Constant;
  double value = 0.0;            // Constant
  std::vector<double> samples;   // Empirical, seconds
  double mean = 0.0;             // TruncatedNormal
  double stddev = 0.0;

  static ExecTimeModel constant(double seconds);
  static ExecTimeModel empirical(std::vector<double> seconds);
  static ExecTimeModel truncated_normal(double mean, double stddev);

  void validate() const;
  double sample(Rng& rng) const;
  /// Analytic mean where cheap (constant, empirical); otherwise the untruncated mean.
  double nominal_mean() const;
};

struct ScenarioExecModel {
  ExecTimeModel device;
  ExecTimeModel offloaded;
};

using ExecTimeTable = std::map<ScenarioId, ScenarioExecModel>;

/// Placeholder exec-time defaults. These are not measured values; the only
/// property they are built to satisfy is that feature extraction on the
/// device (scenarios 2 and 3) more than doubles tau_device.
ExecTimeTable default_exec_times();

struct LatencyConstants {
  double tau_bs = 132e-6;
  double deadline = 0.200;
};

struct LatencyBreakdown {
  double tau_device = 0.0;
  double tau_ul = 0.0;
  double tau_bs = 0.0;
  double tau_offloaded = 0.0;
  double tau_dl = 0.0;
  double tau_pose = 0.0;
  bool meets_deadline = false;

  /// Sum in the fixed order device, ul, bs, offloaded, dl.
  static double sum(double device, double ul, double bs, double offloaded, double dl) noexcept {
    return (((device + ul) + bs) + offloaded) + dl;
  }
};

LatencyBreakdown pose_latency(ScenarioId scenario, const FrameStructure& fs,
                              const ExecTimeTable& exec, Rng& rng,
                              const LatencyConstants& constants = {});

inline LatencyBreakdown pose_latency(ScenarioId scenario, const FrameStructure& fs,
                                     const ExecTimeTable& exec, std::uint64_t seed,
                                     const LatencyConstants& constants = {}) {
  Rng rng(seed);
  return pose_latency(scenario, fs, exec, rng, constants);
}

}  // namespace xrmimo
