#pragma once

// First-order uplink power budget from a target post-equalisation SNR.

#include <cstdint>
#include <span>
#include <utility>

#include "xrmimo/phy_mimo.hpp"

namespace xrmimo::linkbudget {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s
inline constexpr double kBoltzmann = 1.380649e-23;      // J/K

enum class ArrayGainModel { ZeroForcing, Fixed };

struct LinkBudgetConfig {
  double carrier_hz = 3.7e9;
  double bandwidth_hz = 20e6;
  double distance_m = 100.0;
  double temperature_k = 300.0;
  double noise_figure_db = 8.0;
  double fading_margin_db = 2.5;
  std::uint32_t antennas = 100;
  std::uint32_t users = 10;
  ArrayGainModel gain_model = ArrayGainModel::ZeroForcing;
  double fixed_gain_db = 0.0;

  void validate() const;
  /// 10 log10(M - K + 1) for zero-forcing, else fixed_gain_db.
  double array_gain_db() const;
};

double fspl_db(double frequency_hz, double distance_m);
double noise_floor_dbm(double bandwidth_hz, double temperature_k);

struct TxPower {
  double dbm = 0.0;
  double mw = 0.0;
};

TxPower required_tx_power(double target_snr_db, const LinkBudgetConfig& cfg);

/// Inverts awgn_ber_oracle by bisection over [lo_db, hi_db] to 1e-4 dB.
/// Throws ConfigError when the target is not bracketed.
double snr_target_for_ber(double ber_target, std::uint32_t qam_order = 64, double lo_db = -20.0,
                          double hi_db = 50.0);

/// Simulation-backed variant: log-BER linear interpolation along a
/// Monte-Carlo curve sorted by SNR. Points with zero errors are ignored.
double snr_target_from_curve(double ber_target, std::span<const BerPoint> curve);

}  // namespace xrmimo::linkbudget
