#include "xrmimo/linkbudget.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "xrmimo/errors.hpp"

namespace xrmimo::linkbudget {

void LinkBudgetConfig::validate() const {
  auto positive = [](double v, const char* key) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string("link_budget.") + key + " must be > 0");
  };
  positive(carrier_hz, "carrier_hz");
  positive(bandwidth_hz, "bandwidth_hz");
  positive(distance_m, "distance_m");
  positive(temperature_k, "temperature_k");
  if (!std::isfinite(noise_figure_db) || noise_figure_db < 0.0)
    throw ConfigError("link_budget.noise_figure_db must be >= 0");
  if (!std::isfinite(fading_margin_db) || fading_margin_db < 0.0)
    throw ConfigError("link_budget.fading_margin_db must be >= 0");
  if (users < 1 || antennas <= users) throw ConfigError("link_budget requires antennas > users >= 1");
}

double LinkBudgetConfig::array_gain_db() const {
  if (gain_model == ArrayGainModel::Fixed) return fixed_gain_db;
  return 10.0 * std::log10(static_cast<double>(antennas) - users + 1.0);
}

double fspl_db(double frequency_hz, double distance_m) {
  if (!(frequency_hz > 0.0) || !(distance_m > 0.0)) throw ConfigError("FSPL needs positive frequency and distance");
  return 20.0 * std::log10(4.0 * std::numbers::pi * distance_m * frequency_hz / kSpeedOfLight);
}

double noise_floor_dbm(double bandwidth_hz, double temperature_k) {
  if (!(bandwidth_hz > 0.0) || !(temperature_k > 0.0))
    throw ConfigError("noise floor needs positive bandwidth and temperature");
  return 10.0 * std::log10(kBoltzmann * temperature_k * bandwidth_hz / 1e-3);
}

TxPower required_tx_power(double target_snr_db, const LinkBudgetConfig& cfg) {
  cfg.validate();
  TxPower p;
  p.dbm = target_snr_db + noise_floor_dbm(cfg.bandwidth_hz, cfg.temperature_k) + cfg.noise_figure_db +
          cfg.fading_margin_db + fspl_db(cfg.carrier_hz, cfg.distance_m) - cfg.array_gain_db();
  p.mw = std::pow(10.0, p.dbm / 10.0);
  return p;
}

double snr_target_for_ber(double ber_target, std::uint32_t qam_order, double lo_db, double hi_db) {
  if (!(ber_target > 0.0 && ber_target < 0.5)) throw ConfigError("BER target must lie in (0, 0.5)");
  auto ber_at = [&](double db) { return awgn_ber_oracle(db_to_linear(db), qam_order); };
  // BER falls with SNR: the target must sit between ber(hi) and ber(lo).
  if (!(ber_at(lo_db) >= ber_target && ber_at(hi_db) <= ber_target))
    throw ConfigError("BER target " + std::to_string(ber_target) + " is not bracketed by [" +
                      std::to_string(lo_db) + ", " + std::to_string(hi_db) + "] dB");
  while (hi_db - lo_db > 1e-4) {
    const double mid = 0.5 * (lo_db + hi_db);
    (ber_at(mid) > ber_target ? lo_db : hi_db) = mid;
  }
  return 0.5 * (lo_db + hi_db);
}

double snr_target_from_curve(double ber_target, std::span<const BerPoint> curve) {
  if (!(ber_target > 0.0 && ber_target < 0.5)) throw ConfigError("BER target must lie in (0, 0.5)");
  std::vector<const BerPoint*> pts;
  for (const auto& p : curve)
    if (p.n_errors > 0) pts.push_back(&p);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const BerPoint& a = *pts[i - 1];
    const BerPoint& b = *pts[i];
    if (a.ber >= ber_target && b.ber <= ber_target) {
      if (a.ber == b.ber) return a.snr_db;
      const double w = (std::log(a.ber) - std::log(ber_target)) / (std::log(a.ber) - std::log(b.ber));
      return a.snr_db + w * (b.snr_db - a.snr_db);
    }
  }
  throw ConfigError("BER target " + std::to_string(ber_target) + " is outside the simulated curve");
}

}  // namespace xrmimo::linkbudget
