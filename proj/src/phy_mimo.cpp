#include "xrmimo/phy_mimo.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "xrmimo/errors.hpp"
#include "xrmimo/rng.hpp"
#include "xrmimo/simd/dispatch.hpp"

namespace xrmimo {

CMatrix ChannelMatrix::subcarrier(std::uint32_t f) const {
  CMatrix h(antennas, users);
  for (std::uint32_t m = 0; m < antennas; ++m)
    for (std::uint32_t k = 0; k < users; ++k) h(m, k) = at(f, m, k);
  return h;
}

void ChannelMatrix::validate() const {
  if (users < 1) throw ConfigError("channel needs at least one user");
  if (antennas <= users)
    throw ConfigError("channel needs more antennas than users (M=" + std::to_string(antennas) +
                      ", K=" + std::to_string(users) + ")");
  if (subcarriers < 1) throw ConfigError("channel needs at least one subcarrier");
  if (gains.size() != std::size_t{antennas} * users * subcarriers)
    throw ConfigError("channel gain count does not match M*K*F");
  for (const cplx& g : gains)
    if (!std::isfinite(g.real()) || !std::isfinite(g.imag())) throw ConfigError("channel has non-finite gain");
}

ChannelMatrix generate_channel(std::uint32_t antennas, std::uint32_t users, std::uint32_t subcarriers,
                               std::uint64_t seed, ChannelModel model) {
  if (users < 1 || antennas <= users)
    throw ConfigError("generate_channel requires M > K >= 1 (M=" + std::to_string(antennas) +
                      ", K=" + std::to_string(users) + ")");
  if (subcarriers < 1) throw ConfigError("generate_channel requires F >= 1");

  ChannelMatrix h{antennas, users, subcarriers, {}};
  h.gains.resize(std::size_t{antennas} * users * subcarriers);
  switch (model) {
    case ChannelModel::IidRayleigh: {
      Rng rng(derive_seed(seed, "channel"));
      for (cplx& g : h.gains) g = complex_normal(rng, 1.0);
      break;
    }
  }
  return h;
}

namespace {

constexpr char kMagic[4] = {'X', 'M', 'C', 'H'};
constexpr std::size_t kHeaderBytes = 16;

std::uint32_t read_u32le(const unsigned char* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}

float read_f32le(const unsigned char* p) { return std::bit_cast<float>(read_u32le(p)); }

void write_u32le(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

}  // namespace

ChannelMatrix load_channel(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open channel file '" + path.string() + "'", 0);
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = "channel file '" + path.string() + "': ";

  if (bytes.size() < 4) throw LoadError(where + "truncated magic", bytes.size());
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw LoadError(where + "bad magic (expected XMCH)", 0);
  if (bytes.size() < kHeaderBytes) throw LoadError(where + "truncated header", bytes.size());

  ChannelMatrix h;
  h.antennas = read_u32le(bytes.data() + 4);
  h.users = read_u32le(bytes.data() + 8);
  h.subcarriers = read_u32le(bytes.data() + 12);
  if (h.antennas == 0) throw LoadError(where + "M is zero", 4);
  if (h.users == 0) throw LoadError(where + "K is zero", 8);
  if (h.subcarriers == 0) throw LoadError(where + "F is zero", 12);

  const std::uint64_t entries = std::uint64_t{h.antennas} * h.users * h.subcarriers;
  const std::uint64_t expected = kHeaderBytes + entries * 8;
  if (bytes.size() < expected)
    throw LoadError(where + "truncated payload, expected " + std::to_string(expected) + " bytes", bytes.size());
  if (bytes.size() > expected) throw LoadError(where + "trailing bytes after payload", expected);

  h.gains.resize(entries);
  for (std::uint64_t i = 0; i < entries; ++i) {
    const std::size_t off = kHeaderBytes + i * 8;
    const float re = read_f32le(bytes.data() + off);
    const float im = read_f32le(bytes.data() + off + 4);
    if (!std::isfinite(re)) throw LoadError(where + "non-finite gain", off);
    if (!std::isfinite(im)) throw LoadError(where + "non-finite gain", off + 4);
    h.gains[i] = {re, im};
  }
  return h;
}

ChannelMatrix concat_users(std::span<const ChannelMatrix> parts) {
  if (parts.empty()) throw ConfigError("no channels to concatenate");
  ChannelMatrix out;
  out.antennas = parts.front().antennas;
  out.subcarriers = parts.front().subcarriers;
  for (const auto& p : parts) {
    if (p.antennas != out.antennas || p.subcarriers != out.subcarriers)
      throw ConfigError("cannot concatenate channels with different M or F");
    out.users += p.users;
  }
  out.gains.resize(std::size_t{out.antennas} * out.users * out.subcarriers);
  for (std::uint32_t f = 0; f < out.subcarriers; ++f)
    for (std::uint32_t m = 0; m < out.antennas; ++m) {
      std::uint32_t k0 = 0;
      for (const auto& p : parts) {
        for (std::uint32_t k = 0; k < p.users; ++k) out.at(f, m, k0 + k) = p.at(f, m, k);
        k0 += p.users;
      }
    }
  return out;
}

ChannelMatrix load_channels(std::span<const std::filesystem::path> paths) {
  std::vector<ChannelMatrix> parts;
  parts.reserve(paths.size());
  for (const auto& p : paths) {
    parts.push_back(load_channel(p));
    const auto& first = parts.front();
    const auto& last = parts.back();
    if (last.antennas != first.antennas)
      throw LoadError("channel file '" + p.string() + "': M differs from first file", 4);
    if (last.subcarriers != first.subcarriers)
      throw LoadError("channel file '" + p.string() + "': F differs from first file", 12);
  }
  return concat_users(parts);
}

void save_channel(const ChannelMatrix& h, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write channel file '" + path.string() + "'");
  out.write(kMagic, 4);
  write_u32le(out, h.antennas);
  write_u32le(out, h.users);
  write_u32le(out, h.subcarriers);
  for (const cplx& g : h.gains) {
    write_u32le(out, std::bit_cast<std::uint32_t>(static_cast<float>(g.real())));
    write_u32le(out, std::bit_cast<std::uint32_t>(static_cast<float>(g.imag())));
  }
}

double condition_number(const CMatrix& h) {
  if (h.cols() < 1 || h.rows() < h.cols()) throw SingularChannelError("channel is not tall (M >= K required)");
  const Eigen::JacobiSVD<CMatrix> svd(h);
  const auto& s = svd.singularValues();
  const double smax = s(0);
  const double smin = s(s.size() - 1);
  if (!(smin > 0.0) || !std::isfinite(smax)) throw SingularChannelError("channel is rank deficient");
  const double cond = smax / smin;
  if (cond > kMaxConditionNumber)
    throw SingularChannelError("channel condition number " + std::to_string(cond) + " exceeds 1e12");
  return cond;
}

CMatrix gram_inverse(const CMatrix& h) {
  condition_number(h);
  const CMatrix gram = h.adjoint() * h;
  const auto k = gram.rows();
  return gram.llt().solve(CMatrix::Identity(k, k));
}

CMatrix zf_equalizer(const CMatrix& h) { return gram_inverse(h) * h.adjoint(); }

std::vector<double> post_eq_snr(const CMatrix& h, double noise_var, std::span<const double> powers) {
  if (!(noise_var > 0.0)) throw ConfigError("noise variance must be > 0");
  if (powers.size() != static_cast<std::size_t>(h.cols())) throw ConfigError("one power per user required");
  const CMatrix ginv = gram_inverse(h);
  std::vector<double> snr(powers.size());
  for (std::size_t k = 0; k < powers.size(); ++k) {
    if (!(powers[k] > 0.0)) throw ConfigError("user powers must be > 0");
    const auto kk = static_cast<Eigen::Index>(k);
    snr[k] = powers[k] / (noise_var * ginv(kk, kk).real());
  }
  return snr;
}

PowerControlSolution power_control(const CMatrix& h, double noise_var, double target_snr) {
  if (!(target_snr > 0.0)) throw ConfigError("target SNR must be > 0");
  if (!(noise_var > 0.0)) throw ConfigError("noise variance must be > 0");
  const CMatrix ginv = gram_inverse(h);
  PowerControlSolution sol;
  sol.snr = target_snr;
  sol.powers.resize(static_cast<std::size_t>(h.cols()));
  for (Eigen::Index k = 0; k < h.cols(); ++k)
    sol.powers[static_cast<std::size_t>(k)] = target_snr * noise_var * ginv(k, k).real();
  return sol;
}

// ---------------------------------------------------------------------------
// QAM

namespace {

std::uint32_t gray_encode(std::uint32_t i) { return i ^ (i >> 1); }

std::uint32_t gray_decode(std::uint32_t g) {
  std::uint32_t i = g;
  for (std::uint32_t s = g >> 1; s != 0; s >>= 1) i ^= s;
  return i;
}

}  // namespace

QamConstellation::QamConstellation(std::uint32_t order) : order_(order) {
  if (order != 4 && order != 16 && order != 64) throw ConfigError("QAM order must be 4, 16 or 64");
  bits_ = static_cast<std::uint32_t>(std::countr_zero(order));
  side_ = 1u << (bits_ / 2);
  scale_ = std::sqrt(3.0 / (2.0 * (order - 1.0)));
  points_.resize(order);
  const std::uint32_t half = bits_ / 2;
  for (std::uint32_t label = 0; label < order; ++label) {
    const std::uint32_t gi = label >> half;
    const std::uint32_t gq = label & (side_ - 1);
    const double li = 2.0 * gray_decode(gi) - (side_ - 1.0);
    const double lq = 2.0 * gray_decode(gq) - (side_ - 1.0);
    points_[label] = {li * scale_, lq * scale_};
  }
}

std::uint32_t QamConstellation::decide(cplx y) const noexcept {
  const double top = static_cast<double>(side_ - 1);
  auto level = [&](double v) {
    const double idx = std::nearbyint((v / scale_ + top) * 0.5);
    return static_cast<std::uint32_t>(std::clamp(idx, 0.0, top));
  };
  return (gray_encode(level(y.real())) << (bits_ / 2)) | gray_encode(level(y.imag()));
}

std::vector<cplx> QamConstellation::modulate(std::span<const std::uint8_t> bits) const {
  if (bits.size() % bits_ != 0)
    throw FramingError("bit count " + std::to_string(bits.size()) + " is not a multiple of " +
                       std::to_string(bits_));
  std::vector<cplx> out(bits.size() / bits_);
  for (std::size_t s = 0; s < out.size(); ++s) {
    std::uint32_t label = 0;
    for (std::uint32_t b = 0; b < bits_; ++b) label = (label << 1) | (bits[s * bits_ + b] & 1u);
    out[s] = points_[label];
  }
  return out;
}

std::vector<std::uint8_t> QamConstellation::demodulate(std::span<const cplx> symbols) const {
  std::vector<std::uint8_t> out(symbols.size() * bits_);
  for (std::size_t s = 0; s < symbols.size(); ++s) {
    const std::uint32_t label = decide(symbols[s]);
    for (std::uint32_t b = 0; b < bits_; ++b)
      out[s * bits_ + b] = static_cast<std::uint8_t>((label >> (bits_ - 1 - b)) & 1u);
  }
  return out;
}

double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double awgn_ber_oracle(double snr_linear, std::uint32_t order) {
  const double m = order;
  return (4.0 / std::log2(m)) * (1.0 - 1.0 / std::sqrt(m)) *
         q_function(std::sqrt(3.0 * snr_linear / (m - 1.0)));
}

double awgn_ber_exact(double snr_linear, std::uint32_t order) {
  const auto side = static_cast<std::uint32_t>(std::lround(std::sqrt(static_cast<double>(order))));
  const auto bits_per_dim = static_cast<std::uint32_t>(std::countr_zero(side));
  const double arg = std::sqrt(3.0 * snr_linear / (order - 1.0));
  double total = 0.0;
  for (std::uint32_t k = 1; k <= bits_per_dim; ++k) {
    const std::uint32_t weight_base = 1u << (k - 1);
    const std::uint32_t terms = side - (side >> k);  // (1 - 2^-k) * side
    double pk = 0.0;
    for (std::uint32_t i = 0; i < terms; ++i) {
      const std::uint32_t q = (i * weight_base) / side;
      const double sign = (q % 2 == 0) ? 1.0 : -1.0;
      const double w = static_cast<double>(weight_base) -
                       std::floor(static_cast<double>(i * weight_base) / side + 0.5);
      pk += sign * w * 2.0 * q_function((2.0 * i + 1.0) * arg);
    }
    total += pk / side;
  }
  return total / bits_per_dim;
}

// ---------------------------------------------------------------------------
// Monte-Carlo BER

namespace {

struct UsableSubcarrier {
  std::uint32_t index;
  CMatrix h;
  CMatrix ginv;
};

}  // namespace

BerCurveResult ber_curve(const ChannelMatrix& channel, const BerCurveConfig& cfg) {
  channel.validate();
  if (cfg.snr_db.empty()) throw ConfigError("ber_curve needs at least one SNR point");
  if (cfg.bits_per_point < 1) throw ConfigError("bits_per_point must be >= 1");
  if (!(cfg.noise_var > 0.0)) throw ConfigError("noise variance must be > 0");

  const QamConstellation qam(cfg.qam_order);
  const std::uint32_t bits = qam.bits_per_symbol();
  const std::uint32_t M = channel.antennas;
  const std::uint32_t K = channel.users;

  BerCurveResult result;
  std::vector<UsableSubcarrier> usable;
  for (std::uint32_t f = 0; f < channel.subcarriers; ++f) {
    CMatrix h = channel.subcarrier(f);
    try {
      CMatrix ginv = gram_inverse(h);
      usable.push_back({f, std::move(h), std::move(ginv)});
    } catch (const SingularChannelError&) {
      ++result.singular_skipped;
    }
  }
  if (usable.empty()) throw SingularChannelError("every subcarrier of the channel is singular");

  const auto& kern = simd::kernels();
  const std::uint64_t bits_per_use = std::uint64_t{K} * bits;
  const std::uint64_t total_uses = (cfg.bits_per_point + bits_per_use - 1) / bits_per_use;
  const std::uint64_t label_mask = (std::uint64_t{1} << bits) - 1;

  CRowMatrix hs(M, K);
  CRowMatrix ws(K, M);
  std::vector<cplx> tx(K), rx(M), eq(K);
  std::vector<std::uint32_t> labels(K);

  for (std::size_t p = 0; p < cfg.snr_db.size(); ++p) {
    const double gamma = db_to_linear(cfg.snr_db[p]);
    std::uint64_t errors = 0;
    std::uint64_t sq_errors = 0;
    std::uint64_t symbols = 0;

    for (std::size_t u = 0; u < usable.size(); ++u) {
      const std::uint64_t uses = total_uses / usable.size() + (u < total_uses % usable.size() ? 1 : 0);
      if (uses == 0) continue;
      const auto& sc = usable[u];

      // Fold power control into the matrices: rx = H diag(sqrt p) s + n and
      // eq = diag(1/sqrt p) W rx, so eq estimates s directly.
      const CMatrix w = sc.ginv * sc.h.adjoint();
      for (std::uint32_t k = 0; k < K; ++k) {
        const double amp = std::sqrt(gamma * cfg.noise_var * sc.ginv(k, k).real());
        hs.col(k) = sc.h.col(k) * amp;
        ws.row(k) = w.row(k) / amp;
      }

      Rng rng(derive_seed(cfg.seed, "ber", p, sc.index));
      std::uint64_t pool = 0;
      std::uint32_t pool_bits = 0;
      for (std::uint64_t n = 0; n < uses; ++n) {
        for (std::uint32_t k = 0; k < K; ++k) {
          if (pool_bits < bits) {
            pool = rng();
            pool_bits = 64;
          }
          labels[k] = static_cast<std::uint32_t>(pool & label_mask);
          pool >>= bits;
          pool_bits -= bits;
          tx[k] = qam.point(labels[k]);
        }
        kern.cmatvec(hs.data(), M, K, tx.data(), rx.data());
        for (std::uint32_t m = 0; m < M; ++m) rx[m] += complex_normal(rng, cfg.noise_var);
        kern.cmatvec(ws.data(), K, M, rx.data(), eq.data());
        for (std::uint32_t k = 0; k < K; ++k) {
          const auto e = static_cast<std::uint64_t>(std::popcount(labels[k] ^ qam.decide(eq[k])));
          errors += e;
          sq_errors += e * e;
        }
        symbols += K;
      }
    }

    BerPoint pt;
    pt.snr_db = cfg.snr_db[p];
    pt.n_bits = symbols * bits;
    pt.n_errors = errors;
    pt.ber = static_cast<double>(errors) / static_cast<double>(pt.n_bits);
    const double ns = static_cast<double>(symbols);
    const double mean = static_cast<double>(errors) / ns;
    const double var = std::max(0.0, static_cast<double>(sq_errors) / ns - mean * mean);
    pt.std_error = std::sqrt(var / ns) / bits;
    result.points.push_back(pt);
  }
  return result;
}

}  // namespace xrmimo
