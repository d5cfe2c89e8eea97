#pragma once

// Study drivers. Each study returns its rows; `to_csv` renders them with a
// provenance comment line followed by a header.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "xrmimo/config.hpp"
#include "xrmimo/phy_mimo.hpp"
#include "xrmimo/scenario.hpp"

namespace xrmimo {

using ProgressFn = std::function<void(const std::string&)>;

struct LatencyRow {
  ScenarioId scenario = ScenarioId::Raw;
  std::string structure;
  std::string term;  // tau_device, tau_ul, tau_bs, tau_offloaded, tau_dl, tau_pose
  double mean_s = 0.0;
  double std_s = 0.0;
  double worst_s = 0.0;
  bool meets_deadline = false;  // mean tau_pose within the deadline; same on every row of a pair
};

struct LatencyStudyResult {
  std::vector<LatencyRow> rows;
  const LatencyRow& find(ScenarioId s, const std::string& structure, const std::string& term) const;
};

struct SensitivityRow {
  ScenarioId scenario = ScenarioId::Raw;
  double ber = 0.0;
  double boot_mean_pct = 0.0;
  double boot_std_pct = 0.0;
  double ci_lo_pct = 0.0;
  double ci_hi_pct = 0.0;
  std::uint64_t n_unsolved = 0;          // unsolved frames over all runs
  std::uint32_t n_excluded = 0;          // trajectories dropped from the bootstrap
  std::vector<double> trajectory_pct;    // per-trajectory mean change
};

struct SensitivityStudyResult {
  std::vector<SensitivityRow> rows;  // BER 0 baseline row first per scenario
  const SensitivityRow& find(ScenarioId s, double ber) const;
};

struct BerStudyResult {
  BerCurveResult curve;
};

struct PowerRow {
  double ber_target = 0.0;
  double snr_db = 0.0;
  double power_dbm = 0.0;
  double power_mw = 0.0;
};

struct PowerStudyResult {
  std::vector<PowerRow> rows;
};

LatencyStudyResult run_latency_study(const ExperimentConfig& cfg, const ProgressFn& progress = {});
SensitivityStudyResult run_sensitivity_study(const ExperimentConfig& cfg, const ProgressFn& progress = {});
BerStudyResult run_ber_study(const ExperimentConfig& cfg, const ProgressFn& progress = {});
PowerStudyResult run_power_study(const ExperimentConfig& cfg, const ProgressFn& progress = {});

std::string provenance_line(const ExperimentConfig& cfg, const std::string& study);

std::string to_csv(const LatencyStudyResult& r, const ExperimentConfig& cfg);
std::string to_csv(const SensitivityStudyResult& r, const ExperimentConfig& cfg);
std::string to_csv(const BerStudyResult& r, const ExperimentConfig& cfg);
std::string to_csv(const PowerStudyResult& r, const ExperimentConfig& cfg);

}  // namespace xrmimo
