#pragma once

// Multi-user Massive MIMO uplink: channel source, zero-forcing, power
// control, Gray QAM and Monte-Carlo BER against post-equalisation SNR.

#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace xrmimo {

using cplx = std::complex<double>;
using CMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic>;
using CRowMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Complex gains indexed [subcarrier][antenna][user], stored in that order
/// (user fastest), which is also the on-disk order.
struct ChannelMatrix {
  std::uint32_t antennas = 0;     // M
  std::uint32_t users = 0;        // K
  std::uint32_t subcarriers = 0;  // F
  std::vector<cplx> gains;

  cplx& at(std::uint32_t f, std::uint32_t m, std::uint32_t k) {
    return gains[(std::size_t{f} * antennas + m) * users + k];
  }
  const cplx& at(std::uint32_t f, std::uint32_t m, std::uint32_t k) const {
    return gains[(std::size_t{f} * antennas + m) * users + k];
  }

  /// M x K matrix of one subcarrier.
  CMatrix subcarrier(std::uint32_t f) const;

  /// Throws ConfigError on shape problems or non-finite gains.
  void validate() const;
};

enum class ChannelModel { IidRayleigh };

ChannelMatrix generate_channel(std::uint32_t antennas, std::uint32_t users, std::uint32_t subcarriers,
                               std::uint64_t seed, ChannelModel model = ChannelModel::IidRayleigh);

/// Reads one "XMCH" file. Throws LoadError with the failing byte offset.
ChannelMatrix load_channel(const std::filesystem::path& path);

/// Reads several files and stacks their users (identical M and F required).
ChannelMatrix load_channels(std::span<const std::filesystem::path> paths);

/// Stacks users of channels with identical M and F.
ChannelMatrix concat_users(std::span<const ChannelMatrix> parts);

void save_channel(const ChannelMatrix& h, const std::filesystem::path& path);

/// Above this 2-norm condition number a channel is treated as singular.
inline constexpr double kMaxConditionNumber = 1e12;

/// Throws SingularChannelError for rank-deficient or ill-conditioned H (M x K).
double condition_number(const CMatrix& h);

/// (H^H H)^-1, after the conditioning check.
CMatrix gram_inverse(const CMatrix& h);

/// W = (H^H H)^-1 H^H, K x M.
CMatrix zf_equalizer(const CMatrix& h);

/// SNR_k = p_k / (noise_var * [(H^H H)^-1]_kk)
std::vector<double> post_eq_snr(const CMatrix& h, double noise_var, std::span<const double> powers);

struct PowerControlSolution {
  std::vector<double> powers;
  double snr = 0.0;
};

/// Per-user powers giving every user the same post-equalisation SNR.
PowerControlSolution power_control(const CMatrix& h, double noise_var, double target_snr);

/// Square Gray-mapped QAM with unit average energy. Labels are the
/// log2(order) bits of a symbol, first bit most significant; the upper half
/// of the label selects the in-phase level, the lower half the quadrature.
class QamConstellation {
 public:
  explicit QamConstellation(std::uint32_t order = 64);

  std::uint32_t order() const noexcept { return order_; }
  std::uint32_t bits_per_symbol() const noexcept { return bits_; }
  double min_distance() const noexcept { return 2.0 * scale_; }

  cplx point(std::uint32_t label) const noexcept { return points_[label]; }
  std::span<const cplx> points() const noexcept { return points_; }

  /// Minimum-distance hard decision.
  std::uint32_t decide(cplx y) const noexcept;

  /// One bit per element (0/1). Throws FramingError if the count is not a
  /// multiple of bits_per_symbol().
  std::vector<cplx> modulate(std::span<const std::uint8_t> bits) const;
  std::vector<std::uint8_t> demodulate(std::span<const cplx> symbols) const;

 private:
  std::uint32_t order_;
  std::uint32_t bits_;
  std::uint32_t side_;  // levels per dimension
  double scale_;        // half the minimum distance
  std::vector<cplx> points_;
};

/// Q(x) = P(N(0,1) > x)
double q_function(double x);

/// Nearest-neighbour approximation (4/log2 M)(1 - 1/sqrt M) Q(sqrt(3 snr/(M-1))).
double awgn_ber_oracle(double snr_linear, std::uint32_t order = 64);

/// Exact BER of Gray square QAM in AWGN (sum over per-bit PAM error terms).
double awgn_ber_exact(double snr_linear, std::uint32_t order = 64);

struct BerPoint {
  double snr_db = 0.0;
  double ber = 0.0;
  std::uint64_t n_bits = 0;
  std::uint64_t n_errors = 0;
  /// Standard error of `ber` from the per-symbol error-count variance.
  double std_error = 0.0;
};

struct BerCurveConfig {
  std::vector<double> snr_db;
  std::uint64_t bits_per_point = 10'000'000;
  std::uint32_t qam_order = 64;
  double noise_var = 1.0;
  std::uint64_t seed = 1;
};

struct BerCurveResult {
  std::vector<BerPoint> points;
  std::uint64_t singular_skipped = 0;  // subcarriers skipped (counted once)
};

/// Power-controlled ZF uplink Monte-Carlo. Channel uses are spread
/// round-robin over usable subcarriers; each (point, subcarrier) pair draws
/// from its own derived RNG stream, so the result is order independent.
BerCurveResult ber_curve(const ChannelMatrix& channel, const BerCurveConfig& cfg);

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

}  // namespace xrmimo
