#include "xrmimo/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "xrmimo/errors.hpp"
#include "xrmimo/rng.hpp"

namespace xrmimo {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) { throw ConfigError(path + ": " + msg); }

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

void expect_object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items())
    if (!ok.count(key)) fail(join(path, key), "unknown key");
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "must be finite");
  return v;
}

std::uint64_t get_uint(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) {
    if (j.get<std::int64_t>() < 0) fail(path, "must be >= 0");
    return static_cast<std::uint64_t>(j.get<std::int64_t>());
  }
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (v >= 0.0 && v == std::floor(v) && v < 1.8e19) return static_cast<std::uint64_t>(v);
  }
  fail(path, "expected a non-negative integer");
}

std::uint32_t get_u32(const json& j, const std::string& path) {
  const std::uint64_t v = get_uint(j, path);
  if (v > UINT32_MAX) fail(path, "too large");
  return static_cast<std::uint32_t>(v);
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

template <typename F>
void for_each_item(const json& j, const std::string& path, F&& f) {
  if (!j.is_array()) fail(path, "expected an array");
  for (std::size_t i = 0; i < j.size(); ++i) f(j[i], index(path, i));
}

std::vector<double> get_number_list(const json& j, const std::string& path) {
  std::vector<double> out;
  for_each_item(j, path, [&](const json& v, const std::string& p) { out.push_back(get_number(v, p)); });
  return out;
}

std::vector<ScenarioId> get_scenarios(const json& j, const std::string& path) {
  std::vector<ScenarioId> out;
  for_each_item(j, path, [&](const json& v, const std::string& p) {
    const auto n = get_uint(v, p);
    if (n < 1 || n > 3) fail(p, "scenario must be 1, 2 or 3");
    out.push_back(static_cast<ScenarioId>(n));
  });
  return out;
}

ExecTimeModel parse_exec_model(const json& j, const std::string& path) {
  if (!j.is_object() || !j.contains("kind")) fail(path, "expected an object with a 'kind'");
  const std::string kind = get_string(j["kind"], join(path, "kind"));
  ExecTimeModel m;
  if (kind == "constant") {
    expect_object(j, path, {"kind", "value"});
    if (!j.contains("value")) fail(join(path, "value"), "missing");
    m = ExecTimeModel::constant(get_number(j["value"], join(path, "value")));
  } else if (kind == "empirical") {
    expect_object(j, path, {"kind", "samples"});
    if (!j.contains("samples")) fail(join(path, "samples"), "missing");
    m = ExecTimeModel::empirical(get_number_list(j["samples"], join(path, "samples")));
  } else if (kind == "normal") {
    expect_object(j, path, {"kind", "mean", "stddev"});
    if (!j.contains("mean") || !j.contains("stddev")) fail(path, "normal model needs 'mean' and 'stddev'");
    m = ExecTimeModel::truncated_normal(get_number(j["mean"], join(path, "mean")),
                                        get_number(j["stddev"], join(path, "stddev")));
  } else {
    fail(join(path, "kind"), "must be constant, empirical or normal");
  }
  try {
    m.validate();
  } catch (const ConfigError& e) {
    fail(path, e.what());
  }
  return m;
}

json exec_model_json(const ExecTimeModel& m) {
  switch (m.kind) {
    case ExecTimeModel::Kind::Constant: return {{"kind", "constant"}, {"value", m.value}};
    case ExecTimeModel::Kind::Empirical: return {{"kind", "empirical"}, {"samples", m.samples}};
    case ExecTimeModel::Kind::TruncatedNormal: return {{"kind", "normal"}, {"mean", m.mean}, {"stddev", m.stddev}};
  }
  return {};
}

json scenarios_json(const std::vector<ScenarioId>& s) {
  json out = json::array();
  for (auto id : s) out.push_back(scenario_number(id));
  return out;
}

}  // namespace

const FrameStructure& ExperimentConfig::structure(const std::string& name) const {
  for (const auto& fs : frame_structures)
    if (fs.name == name) return fs;
  throw ConfigError("frame structure '" + name + "' is not defined");
}

void ExperimentConfig::validate() const {
  if (frame_structures.empty()) throw ConfigError("frame_structures: at least one structure is required");
  std::set<std::string> names;
  for (std::size_t i = 0; i < frame_structures.size(); ++i) {
    try {
      frame_structures[i].validate();
    } catch (const ConfigError& e) {
      fail(index("frame_structures", i), e.what());
    }
    if (!names.insert(frame_structures[i].name).second)
      fail(index("frame_structures", i), "duplicate name '" + frame_structures[i].name + "'");
  }

  if (latency.structures.empty()) fail("latency.structures", "at least one structure is required");
  if (latency.scenarios.empty()) fail("latency.scenarios", "at least one scenario is required");
  for (std::size_t i = 0; i < latency.structures.size(); ++i)
    if (!names.count(latency.structures[i]))
      fail(index("latency.structures", i), "unknown frame structure '" + latency.structures[i] + "'");
  for (auto s : latency.scenarios)
    if (!exec_times.count(s))
      fail("exec_times", "missing model for scenario " + std::to_string(scenario_number(s)));
  for (const auto& [s, m] : exec_times) {
    m.device.validate();
    m.offloaded.validate();
  }
  if (latency.samples < 1) fail("latency.samples", "must be >= 1");
  if (!(latency.constants.tau_bs >= 0.0)) fail("latency.tau_bs", "must be >= 0");
  if (!(latency.constants.deadline > 0.0)) fail("latency.deadline", "must be > 0");

  const auto& s = sensitivity;
  if (s.scenarios.empty()) fail("sensitivity.scenarios", "at least one scenario is required");
  if (s.ber_grid.empty()) fail("sensitivity.ber_grid", "at least one BER is required");
  for (std::size_t i = 0; i < s.ber_grid.size(); ++i)
    if (!(s.ber_grid[i] > 0.0 && s.ber_grid[i] < 0.5)) fail(index("sensitivity.ber_grid", i), "must lie in (0, 0.5)");
  if (s.trajectories < 1) fail("sensitivity.trajectories", "must be >= 1");
  if (s.frames < 3) fail("sensitivity.frames", "must be >= 3");
  if (s.trials < 1) fail("sensitivity.trials", "must be >= 1");
  if (s.landmarks < 4) fail("sensitivity.landmarks", "must be >= 4");
  if (!(s.pixel_noise >= 0.0)) fail("sensitivity.pixel_noise", "must be >= 0");
  if (!(s.depth_noise >= 0.0)) fail("sensitivity.depth_noise", "must be >= 0");
  if (s.bootstrap_draws < 1) fail("sensitivity.bootstrap_draws", "must be >= 1");
  if (!(s.confidence > 0.0 && s.confidence < 1.0)) fail("sensitivity.confidence", "must lie in (0, 1)");

  if (ber.snr_db.empty()) fail("ber.snr_db", "at least one SNR point is required");
  if (ber.bits_per_point < 1) fail("ber.bits_per_point", "must be >= 1");
  if (ber.qam_order != 4 && ber.qam_order != 16 && ber.qam_order != 64) fail("ber.qam_order", "must be 4, 16 or 64");
  if (ber.channel.kind == ChannelSourceConfig::Kind::Synthetic) {
    if (ber.channel.users < 1 || ber.channel.antennas <= ber.channel.users)
      fail("ber.channel", "requires antennas > users >= 1");
    if (ber.channel.subcarriers < 1) fail("ber.channel.subcarriers", "must be >= 1");
  } else if (ber.channel.paths.empty()) {
    fail("ber.channel.paths", "at least one channel file is required");
  }

  if (power.ber_targets.empty()) fail("power.ber_targets", "at least one target is required");
  for (std::size_t i = 0; i < power.ber_targets.size(); ++i)
    if (!(power.ber_targets[i] > 0.0 && power.ber_targets[i] < 0.5))
      fail(index("power.ber_targets", i), "must lie in (0, 0.5)");
  try {
    power.link_budget.validate();
  } catch (const ConfigError& e) {
    fail("power", e.what());
  }
}

ExperimentConfig parse_config(const json& doc) {
  expect_object(doc, "", {"seed", "output_dir", "frame_structures", "exec_times", "latency", "sensitivity", "ber", "power"});
  ExperimentConfig cfg;

  if (doc.contains("seed")) cfg.seed = get_uint(doc["seed"], "seed");
  if (doc.contains("output_dir")) cfg.output_dir = get_string(doc["output_dir"], "output_dir");

  if (doc.contains("frame_structures")) {
    cfg.frame_structures.clear();
    for_each_item(doc["frame_structures"], "frame_structures", [&](const json& j, const std::string& p) {
      expect_object(j, p, {"name", "layout", "n_subcarriers", "bits_per_qam_symbol", "tau_symb"});
      FrameStructure fs;
      if (!j.contains("name")) fail(join(p, "name"), "missing");
      if (!j.contains("layout")) fail(join(p, "layout"), "missing");
      fs.name = get_string(j["name"], join(p, "name"));
      try {
        fs.layout = parse_layout(get_string(j["layout"], join(p, "layout")));
      } catch (const ConfigError& e) {
        fail(join(p, "layout"), e.what());
      }
      if (j.contains("n_subcarriers")) fs.n_subcarriers = get_u32(j["n_subcarriers"], join(p, "n_subcarriers"));
      if (j.contains("bits_per_qam_symbol"))
        fs.bits_per_qam_symbol = get_u32(j["bits_per_qam_symbol"], join(p, "bits_per_qam_symbol"));
      if (j.contains("tau_symb")) fs.tau_symb = get_number(j["tau_symb"], join(p, "tau_symb"));
      cfg.frame_structures.push_back(std::move(fs));
    });
  }

  if (doc.contains("exec_times")) {
    const json& et = doc["exec_times"];
    expect_object(et, "exec_times", {"1", "2", "3"});
    for (const auto& [key, j] : et.items()) {
      const std::string p = join("exec_times", key);
      expect_object(j, p, {"device", "offloaded"});
      if (!j.contains("device") || !j.contains("offloaded")) fail(p, "needs 'device' and 'offloaded'");
      cfg.exec_times[scenario_from_number(std::stol(key))] = {parse_exec_model(j["device"], join(p, "device")),
                                                              parse_exec_model(j["offloaded"], join(p, "offloaded"))};
    }
  }

  if (doc.contains("latency")) {
    const json& j = doc["latency"];
    expect_object(j, "latency", {"scenarios", "structures", "samples", "tau_bs", "deadline"});
    auto& l = cfg.latency;
    if (j.contains("scenarios")) l.scenarios = get_scenarios(j["scenarios"], "latency.scenarios");
    if (j.contains("structures")) {
      l.structures.clear();
      for_each_item(j["structures"], "latency.structures",
                    [&](const json& v, const std::string& p) { l.structures.push_back(get_string(v, p)); });
    }
    if (j.contains("samples")) l.samples = get_u32(j["samples"], "latency.samples");
    if (j.contains("tau_bs")) l.constants.tau_bs = get_number(j["tau_bs"], "latency.tau_bs");
    if (j.contains("deadline")) l.constants.deadline = get_number(j["deadline"], "latency.deadline");
  }

  if (doc.contains("sensitivity")) {
    const json& j = doc["sensitivity"];
    expect_object(j, "sensitivity",
                  {"scenarios", "ber_grid", "trajectories", "frames", "trials", "landmarks", "pixel_noise",
                   "depth_noise", "bootstrap_draws", "confidence"});
    auto& s = cfg.sensitivity;
    if (j.contains("scenarios")) s.scenarios = get_scenarios(j["scenarios"], "sensitivity.scenarios");
    if (j.contains("ber_grid")) s.ber_grid = get_number_list(j["ber_grid"], "sensitivity.ber_grid");
    if (j.contains("trajectories")) s.trajectories = get_u32(j["trajectories"], "sensitivity.trajectories");
    if (j.contains("frames")) s.frames = get_u32(j["frames"], "sensitivity.frames");
    if (j.contains("trials")) s.trials = get_u32(j["trials"], "sensitivity.trials");
    if (j.contains("landmarks")) s.landmarks = get_u32(j["landmarks"], "sensitivity.landmarks");
    if (j.contains("pixel_noise")) s.pixel_noise = get_number(j["pixel_noise"], "sensitivity.pixel_noise");
    if (j.contains("depth_noise")) s.depth_noise = get_number(j["depth_noise"], "sensitivity.depth_noise");
    if (j.contains("bootstrap_draws")) s.bootstrap_draws = get_u32(j["bootstrap_draws"], "sensitivity.bootstrap_draws");
    if (j.contains("confidence")) s.confidence = get_number(j["confidence"], "sensitivity.confidence");
  }

  if (doc.contains("ber")) {
    const json& j = doc["ber"];
    expect_object(j, "ber", {"snr_db", "bits_per_point", "qam_order", "channel"});
    auto& b = cfg.ber;
    if (j.contains("snr_db")) b.snr_db = get_number_list(j["snr_db"], "ber.snr_db");
    if (j.contains("bits_per_point")) b.bits_per_point = get_uint(j["bits_per_point"], "ber.bits_per_point");
    if (j.contains("qam_order")) b.qam_order = get_u32(j["qam_order"], "ber.qam_order");
    if (j.contains("channel")) {
      const json& c = j["channel"];
      expect_object(c, "ber.channel", {"source", "antennas", "users", "subcarriers", "paths"});
      const std::string source = c.contains("source") ? get_string(c["source"], "ber.channel.source") : "synthetic";
      if (source == "synthetic") {
        b.channel.kind = ChannelSourceConfig::Kind::Synthetic;
        if (c.contains("paths")) fail("ber.channel.paths", "only valid with source 'files'");
      } else if (source == "files") {
        b.channel.kind = ChannelSourceConfig::Kind::Files;
        for (const char* k : {"antennas", "users", "subcarriers"})
          if (c.contains(k)) fail(join("ber.channel", k), "only valid with source 'synthetic'");
      } else {
        fail("ber.channel.source", "must be 'synthetic' or 'files'");
      }
      if (c.contains("antennas")) b.channel.antennas = get_u32(c["antennas"], "ber.channel.antennas");
      if (c.contains("users")) b.channel.users = get_u32(c["users"], "ber.channel.users");
      if (c.contains("subcarriers")) b.channel.subcarriers = get_u32(c["subcarriers"], "ber.channel.subcarriers");
      if (c.contains("paths"))
        for_each_item(c["paths"], "ber.channel.paths",
                      [&](const json& v, const std::string& p) { b.channel.paths.emplace_back(get_string(v, p)); });
    }
  }

  if (doc.contains("power")) {
    const json& j = doc["power"];
    expect_object(j, "power", {"ber_targets", "snr_mode", "link_budget"});
    auto& pw = cfg.power;
    if (j.contains("ber_targets")) pw.ber_targets = get_number_list(j["ber_targets"], "power.ber_targets");
    if (j.contains("snr_mode")) {
      const std::string mode = get_string(j["snr_mode"], "power.snr_mode");
      if (mode == "analytic") pw.snr_mode = PowerStudyConfig::SnrMode::Analytic;
      else if (mode == "simulated") pw.snr_mode = PowerStudyConfig::SnrMode::Simulated;
      else fail("power.snr_mode", "must be 'analytic' or 'simulated'");
    }
    if (j.contains("link_budget")) {
      const json& lb = j["link_budget"];
      const std::string p = "power.link_budget";
      expect_object(lb, p,
                    {"carrier_hz", "bandwidth_hz", "distance_m", "temperature_k", "noise_figure_db",
                     "fading_margin_db", "antennas", "users", "array_gain", "fixed_gain_db"});
      auto& c = pw.link_budget;
      if (lb.contains("carrier_hz")) c.carrier_hz = get_number(lb["carrier_hz"], join(p, "carrier_hz"));
      if (lb.contains("bandwidth_hz")) c.bandwidth_hz = get_number(lb["bandwidth_hz"], join(p, "bandwidth_hz"));
      if (lb.contains("distance_m")) c.distance_m = get_number(lb["distance_m"], join(p, "distance_m"));
      if (lb.contains("temperature_k")) c.temperature_k = get_number(lb["temperature_k"], join(p, "temperature_k"));
      if (lb.contains("noise_figure_db")) c.noise_figure_db = get_number(lb["noise_figure_db"], join(p, "noise_figure_db"));
      if (lb.contains("fading_margin_db"))
        c.fading_margin_db = get_number(lb["fading_margin_db"], join(p, "fading_margin_db"));
      if (lb.contains("antennas")) c.antennas = get_u32(lb["antennas"], join(p, "antennas"));
      if (lb.contains("users")) c.users = get_u32(lb["users"], join(p, "users"));
      if (lb.contains("array_gain")) {
        const std::string g = get_string(lb["array_gain"], join(p, "array_gain"));
        if (g == "zf") c.gain_model = linkbudget::ArrayGainModel::ZeroForcing;
        else if (g == "fixed") c.gain_model = linkbudget::ArrayGainModel::Fixed;
        else fail(join(p, "array_gain"), "must be 'zf' or 'fixed'");
      }
      if (lb.contains("fixed_gain_db")) c.fixed_gain_db = get_number(lb["fixed_gain_db"], join(p, "fixed_gain_db"));
    }
  }

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

json to_json(const ExperimentConfig& cfg) {
  json doc;
  doc["seed"] = cfg.seed;
  doc["output_dir"] = cfg.output_dir.string();
  doc["frame_structures"] = json::array();
  for (const auto& fs : cfg.frame_structures)
    doc["frame_structures"].push_back({{"name", fs.name},
                                       {"layout", format_layout(fs.layout)},
                                       {"n_subcarriers", fs.n_subcarriers},
                                       {"bits_per_qam_symbol", fs.bits_per_qam_symbol},
                                       {"tau_symb", fs.tau_symb}});
  for (const auto& [s, m] : cfg.exec_times)
    doc["exec_times"][std::to_string(scenario_number(s))] = {{"device", exec_model_json(m.device)},
                                                             {"offloaded", exec_model_json(m.offloaded)}};
  doc["latency"] = {{"scenarios", scenarios_json(cfg.latency.scenarios)},
                    {"structures", cfg.latency.structures},
                    {"samples", cfg.latency.samples},
                    {"tau_bs", cfg.latency.constants.tau_bs},
                    {"deadline", cfg.latency.constants.deadline}};
  const auto& s = cfg.sensitivity;
  doc["sensitivity"] = {{"scenarios", scenarios_json(s.scenarios)}, {"ber_grid", s.ber_grid},
                        {"trajectories", s.trajectories},           {"frames", s.frames},
                        {"trials", s.trials},                       {"landmarks", s.landmarks},
                        {"pixel_noise", s.pixel_noise},             {"depth_noise", s.depth_noise},
                        {"bootstrap_draws", s.bootstrap_draws},     {"confidence", s.confidence}};
  json channel;
  if (cfg.ber.channel.kind == ChannelSourceConfig::Kind::Synthetic) {
    channel = {{"source", "synthetic"},
               {"antennas", cfg.ber.channel.antennas},
               {"users", cfg.ber.channel.users},
               {"subcarriers", cfg.ber.channel.subcarriers}};
  } else {
    channel = {{"source", "files"}, {"paths", json::array()}};
    for (const auto& p : cfg.ber.channel.paths) channel["paths"].push_back(p.string());
  }
  doc["ber"] = {{"snr_db", cfg.ber.snr_db},
                {"bits_per_point", cfg.ber.bits_per_point},
                {"qam_order", cfg.ber.qam_order},
                {"channel", channel}};
  const auto& lb = cfg.power.link_budget;
  doc["power"] = {
      {"ber_targets", cfg.power.ber_targets},
      {"snr_mode", cfg.power.snr_mode == PowerStudyConfig::SnrMode::Analytic ? "analytic" : "simulated"},
      {"link_budget",
       {{"carrier_hz", lb.carrier_hz},
        {"bandwidth_hz", lb.bandwidth_hz},
        {"distance_m", lb.distance_m},
        {"temperature_k", lb.temperature_k},
        {"noise_figure_db", lb.noise_figure_db},
        {"fading_margin_db", lb.fading_margin_db},
        {"antennas", lb.antennas},
        {"users", lb.users},
        {"array_gain", lb.gain_model == linkbudget::ArrayGainModel::ZeroForcing ? "zf" : "fixed"},
        {"fixed_gain_db", lb.fixed_gain_db}}}};
  return doc;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  json doc = to_json(cfg);
  doc.erase("output_dir");
  return hash_label(doc.dump());
}

ExperimentConfig default_config() {
  ExperimentConfig cfg;
  cfg.validate();
  return cfg;
}

}  // namespace xrmimo
