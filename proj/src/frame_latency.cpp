#include "xrmimo/frame_latency.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "xrmimo/errors.hpp"

namespace xrmimo {

ScenarioId scenario_from_number(long n) {
  if (n < 1 || n > 3) throw ConfigError("scenario must be 1, 2 or 3, got " + std::to_string(n));
  return static_cast<ScenarioId>(n);
}

std::string_view direction_name(Direction d) noexcept {
  return d == Direction::Uplink ? "UL" : "DL";
}

namespace {

SymbolRole data_role(Direction d) noexcept {
  return d == Direction::Uplink ? SymbolRole::UplinkData : SymbolRole::DownlinkData;
}

}  // namespace

std::uint32_t FrameStructure::data_symbols(Direction d) const noexcept {
  return static_cast<std::uint32_t>(std::count(layout.begin(), layout.end(), data_role(d)));
}

void FrameStructure::validate() const {
  const std::string where = "frame structure '" + name + "': ";
  if (layout.size() < 2) throw ConfigError(where + "layout needs at least 2 symbols");
  if (data_symbols(Direction::Uplink) == 0) throw ConfigError(where + "no uplink data symbol");
  if (data_symbols(Direction::Downlink) == 0) throw ConfigError(where + "no downlink data symbol");
  if (n_subcarriers == 0) throw ConfigError(where + "n_subcarriers must be >= 1");
  if (bits_per_qam_symbol != 2 && bits_per_qam_symbol != 4 && bits_per_qam_symbol != 6)
    throw ConfigError(where + "bits_per_qam_symbol must be 2, 4 or 6");
  if (!(tau_symb > 0.0) || !std::isfinite(tau_symb)) throw ConfigError(where + "tau_symb must be > 0");
}

FrameStructure FrameStructure::preset_a() {
  return FrameStructure{"A", parse_layout("PUUUUPDDDD")};
}

FrameStructure FrameStructure::preset_b() {
  return FrameStructure{"B", parse_layout("PUUUUUUUUD")};
}

std::vector<SymbolRole> parse_layout(std::string_view text) {
  std::vector<SymbolRole> out;
  for (char c : text) {
    switch (std::toupper(static_cast<unsigned char>(c))) {
      case 'P': out.push_back(SymbolRole::Pilot); break;
      case 'U': out.push_back(SymbolRole::UplinkData); break;
      case 'D': out.push_back(SymbolRole::DownlinkData); break;
      case 'G': out.push_back(SymbolRole::Guard); break;
      default:
        if (std::isspace(static_cast<unsigned char>(c))) break;
        throw ConfigError(std::string("unknown symbol role '") + c + "' in layout");
    }
  }
  return out;
}

std::string format_layout(const std::vector<SymbolRole>& layout) {
  std::string s;
  for (SymbolRole r : layout) {
    switch (r) {
      case SymbolRole::Pilot: s += 'P'; break;
      case SymbolRole::UplinkData: s += 'U'; break;
      case SymbolRole::DownlinkData: s += 'D'; break;
      case SymbolRole::Guard: s += 'G'; break;
    }
  }
  return s;
}

std::uint64_t symbols_per_pose(std::uint64_t payload_bits, const FrameStructure& fs) {
  const std::uint64_t capacity = fs.bits_per_ofdm_symbol();
  if (capacity == 0) throw ConfigError("frame structure '" + fs.name + "' has zero capacity per symbol");
  if (payload_bits == 0) throw ConfigError("payload must be at least one bit");
  return (payload_bits + capacity - 1) / capacity;
}

std::uint64_t slots_per_pose(std::uint64_t n_symb_pose, const FrameStructure& fs, Direction dir) {
  const std::uint64_t per_slot = fs.data_symbols(dir);
  if (per_slot == 0)
    throw ConfigError("frame structure '" + fs.name + "' has no " +
                      std::string(direction_name(dir)) + " data symbols");
  if (n_symb_pose == 0) throw ConfigError("symbol count must be at least one");
  return (n_symb_pose + per_slot - 1) / per_slot - 1;
}

std::uint32_t worst_case_wait(const FrameStructure& fs, Direction dir) {
  const SymbolRole role = data_role(dir);
  std::vector<std::uint32_t> starts;
  for (std::uint32_t i = 0; i < fs.n_symb(); ++i)
    if (fs.layout[i] == role) starts.push_back(i);
  if (starts.empty())
    throw ConfigError("frame structure '" + fs.name + "' has no " +
                      std::string(direction_name(dir)) + " data symbols");

  std::uint32_t worst = starts.front() + fs.n_symb() - starts.back();
  for (std::size_t i = 1; i < starts.size(); ++i) worst = std::max(worst, starts[i] - starts[i - 1]);
  return worst;
}

double transmission_latency(std::uint64_t payload_bits, const FrameStructure& fs, Direction dir) {
  const std::uint64_t symbols = symbols_per_pose(payload_bits, fs);
  const std::uint64_t slots = slots_per_pose(symbols, fs, dir);
  const std::uint64_t overhead = fs.n_symb() - fs.data_symbols(dir);
  const std::uint64_t total = worst_case_wait(fs, dir) + symbols + slots * overhead;
  return fs.tau_symb * static_cast<double>(total);
}

ExecTimeModel ExecTimeModel::constant(double seconds) {
  ExecTimeModel m;
  m.kind = Kind::Constant;
  m.value = seconds;
  return m;
}

ExecTimeModel ExecTimeModel::empirical(std::vector<double> seconds) {
  ExecTimeModel m;
  m.kind = Kind::Empirical;
  m.samples = std::move(seconds);
  return m;
}

ExecTimeModel ExecTimeModel::truncated_normal(double mean, double stddev) {
  ExecTimeModel m;
  m.kind = Kind::TruncatedNormal;
  m.mean = mean;
  m.stddev = stddev;
  return m;
}

void ExecTimeModel::validate() const {
  switch (kind) {
    case Kind::Constant:
      if (!(value >= 0.0) || !std::isfinite(value)) throw ConfigError("constant exec time must be finite and >= 0");
      break;
    case Kind::Empirical:
      if (samples.empty()) throw ConfigError("empirical exec-time list is empty");
      for (double s : samples)
        if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("empirical exec times must be finite and >= 0");
      break;
    case Kind::TruncatedNormal:
      // A non-negative mean keeps the rejection rate at or below one half.
      if (!(mean >= 0.0) || !std::isfinite(mean)) throw ConfigError("normal exec-time mean must be finite and >= 0");
      if (!(stddev >= 0.0) || !std::isfinite(stddev)) throw ConfigError("normal exec-time stddev must be finite and >= 0");
      break;
  }
}

double ExecTimeModel::sample(Rng& rng) const {
  switch (kind) {
    case Kind::Constant:
      return value;
    case Kind::Empirical: {
      const auto idx = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(samples.size()));
      return samples[std::min(idx, samples.size() - 1)];
    }
    case Kind::TruncatedNormal:
      for (;;) {
        const double x = mean + stddev * standard_normal(rng);
        if (x >= 0.0) return x;
      }
  }
  return 0.0;
}

double ExecTimeModel::nominal_mean() const {
  switch (kind) {
    case Kind::Constant: return value;
    case Kind::Empirical:
      return std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
    case Kind::TruncatedNormal: return mean;
  }
  return 0.0;
}

ExecTimeTable default_exec_times() {
  ExecTimeTable t;
  t[ScenarioId::Raw] = {ExecTimeModel::truncated_normal(15e-3, 3e-3), ExecTimeModel::truncated_normal(25e-3, 4e-3)};
  t[ScenarioId::FeaturesDepthMap] = {ExecTimeModel::truncated_normal(35e-3, 6e-3), ExecTimeModel::truncated_normal(18e-3, 3e-3)};
  t[ScenarioId::FeaturesWithDepth] = {ExecTimeModel::truncated_normal(35e-3, 6e-3), ExecTimeModel::truncated_normal(15e-3, 3e-3)};
  return t;
}

LatencyBreakdown pose_latency(ScenarioId scenario, const FrameStructure& fs,
                              const ExecTimeTable& exec, Rng& rng,
                              const LatencyConstants& constants) {
  const auto it = exec.find(scenario);
  if (it == exec.end())
    throw ConfigError("no exec-time model for scenario " + std::to_string(scenario_number(scenario)));
  if (!(constants.tau_bs >= 0.0)) throw ConfigError("tau_bs must be >= 0");

  LatencyBreakdown b;
  b.tau_device = it->second.device.sample(rng);
  b.tau_offloaded = it->second.offloaded.sample(rng);
  b.tau_ul = transmission_latency(uplink_payload_bytes(scenario) * 8, fs, Direction::Uplink);
  b.tau_dl = transmission_latency(downlink_payload_bytes(scenario) * 8, fs, Direction::Downlink);
  b.tau_bs = constants.tau_bs;
  b.tau_pose = LatencyBreakdown::sum(b.tau_device, b.tau_ul, b.tau_bs, b.tau_offloaded, b.tau_dl);
  b.meets_deadline = b.tau_pose <= constants.deadline;
  return b;
}

}  // namespace xrmimo
