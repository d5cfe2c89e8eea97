#include "xrmimo/runner.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "xrmimo/bitstorm.hpp"
#include "xrmimo/errors.hpp"
#include "xrmimo/frame_latency.hpp"
#include "xrmimo/linkbudget.hpp"
#include "xrmimo/metrics.hpp"
#include "xrmimo/rng.hpp"
#include "xrmimo/slam_sandbox.hpp"

namespace xrmimo {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

struct Accumulator {
  std::vector<double> values;

  void add(double v) { values.push_back(v); }
  double mean() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s / static_cast<double>(values.size());
  }
  double stddev() const {
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    if (values.size() < 2 || *lo == *hi) return 0.0;
    const double m = mean();
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  double worst() const { return *std::max_element(values.begin(), values.end()); }
  double mean_exact() const {
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    return *lo == *hi ? *lo : mean();
  }
};

void report(const ProgressFn& progress, const std::string& msg) {
  if (progress) progress(msg);
}

ChannelMatrix study_channel(const ExperimentConfig& cfg) {
  const auto& c = cfg.ber.channel;
  if (c.kind == ChannelSourceConfig::Kind::Files) return load_channels(c.paths);
  return generate_channel(c.antennas, c.users, c.subcarriers, cfg.seed);
}

}  // namespace

const LatencyRow& LatencyStudyResult::find(ScenarioId s, const std::string& structure, const std::string& term) const {
  for (const auto& r : rows)
    if (r.scenario == s && r.structure == structure && r.term == term) return r;
  throw ConfigError("no latency row for scenario " + std::to_string(scenario_number(s)) + "/" + structure + "/" + term);
}

const SensitivityRow& SensitivityStudyResult::find(ScenarioId s, double ber) const {
  for (const auto& r : rows)
    if (r.scenario == s && r.ber == ber) return r;
  throw ConfigError("no sensitivity row for scenario " + std::to_string(scenario_number(s)));
}

LatencyStudyResult run_latency_study(const ExperimentConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  LatencyStudyResult out;
  for (ScenarioId s : cfg.latency.scenarios) {
    for (std::size_t k = 0; k < cfg.latency.structures.size(); ++k) {
      const std::string& name = cfg.latency.structures[k];
      const FrameStructure& fs = cfg.structure(name);
      Rng rng = make_rng(cfg.seed, "latency", scenario_number(s), k);
      std::array<Accumulator, 6> acc;
      for (std::uint32_t n = 0; n < cfg.latency.samples; ++n) {
        const LatencyBreakdown b = pose_latency(s, fs, cfg.exec_times, rng, cfg.latency.constants);
        acc[0].add(b.tau_device);
        acc[1].add(b.tau_ul);
        acc[2].add(b.tau_bs);
        acc[3].add(b.tau_offloaded);
        acc[4].add(b.tau_dl);
        acc[5].add(b.tau_pose);
      }
      static const std::array<const char*, 6> terms{"tau_device", "tau_ul", "tau_bs", "tau_offloaded", "tau_dl",
                                                    "tau_pose"};
      const bool meets = acc[5].mean_exact() <= cfg.latency.constants.deadline;
      for (std::size_t t = 0; t < terms.size(); ++t)
        out.rows.push_back({s, name, terms[t], acc[t].mean_exact(), acc[t].stddev(), acc[t].worst(), meets});
      report(progress, "latency scenario " + std::to_string(scenario_number(s)) + "/" + name + ": mean " +
                           num(acc[5].mean_exact() * 1e3) + " ms" + (meets ? "" : " (deadline missed)"));
    }
  }
  return out;
}

SensitivityStudyResult run_sensitivity_study(const ExperimentConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  using namespace sandbox;
  const auto& sc = cfg.sensitivity;
  const std::size_t n_s = sc.scenarios.size();
  const std::size_t n_b = sc.ber_grid.size();

  const CameraModel camera;
  const SceneBounds bounds;
  Rng scene_rng = make_rng(cfg.seed, "scene");
  const Scene scene = generate_scene(sc.landmarks, bounds, scene_rng);
  const ObservationNoise noise{sc.pixel_noise, sc.depth_noise};
  const bool need_depth = std::any_of(sc.scenarios.begin(), sc.scenarios.end(),
                                      [](ScenarioId s) { return s != ScenarioId::FeaturesWithDepth; });

  // runs[s][b] collects one TrajectoryRuns per usable trajectory.
  std::vector<std::vector<std::vector<metrics::TrajectoryRuns>>> runs(n_s, std::vector<std::vector<metrics::TrajectoryRuns>>(n_b));
  std::vector<std::vector<std::uint64_t>> unsolved(n_s, std::vector<std::uint64_t>(n_b + 1, 0));
  std::vector<std::vector<std::uint32_t>> excluded(n_s, std::vector<std::uint32_t>(n_b + 1, 0));

  for (std::uint32_t tr = 0; tr < sc.trajectories; ++tr) {
    Rng traj_rng = make_rng(cfg.seed, "trajectory", tr);
    const GroundTruthTrajectory gt = generate_trajectory(sc.frames, bounds, traj_rng);

    // est[s][0] is the error-free baseline, est[s][1 + b * trials + r] the corrupted runs.
    const std::size_t n_runs = 1 + n_b * sc.trials;
    std::vector<std::vector<TrajectoryEstimate>> est(n_s, std::vector<TrajectoryEstimate>(n_runs));

    for (std::size_t i = 0; i < gt.frames.size(); ++i) {
      const StampedPose& pose = gt.frames[i];
      Rng obs_rng = make_rng(cfg.seed, "observe", tr, i);
      const Observation obs = observe(scene, camera, pose, noise, obs_rng);
      DepthImage depth;
      if (need_depth && !obs.degenerate) depth = render_depth_map(camera, bounds, pose, obs.features);
      const std::uint64_t frame_seed = derive_seed(cfg.seed, "corrupt", tr, i);

      for (std::size_t si = 0; si < n_s; ++si) {
        const ScenarioId s = sc.scenarios[si];
        auto push = [&](std::size_t run, const PoseSolution* sol) {
          EstimatedFrame f;
          f.pose.timestamp = pose.timestamp;
          if (sol && sol->solved) {
            f.pose = sol->pose;
            f.pose.timestamp = pose.timestamp;
            f.inliers = sol->inliers;
            f.solved = true;
          }
          est[si][run].frames.push_back(f);
        };
        if (obs.degenerate) {
          for (std::size_t run = 0; run < n_runs; ++run) push(run, nullptr);
          continue;
        }
        const ScenarioPayload clean =
            encode_payload(obs.features, s, camera, s == ScenarioId::FeaturesWithDepth ? nullptr : &depth);
        const PoseSolution base = localise(clean.bytes, s, scene, camera);
        push(0, &base);
        std::vector<std::uint8_t> bytes;
        for (std::size_t b = 0; b < n_b; ++b) {
          for (std::uint32_t r = 0; r < sc.trials; ++r) {
            bytes = clean.bytes;
            Rng bit_rng(derive_seed(frame_seed, "cell", scenario_number(s) * 256 + b, r));
            bitstorm::corrupt(bytes, sc.ber_grid[b], bit_rng);
            const PoseSolution sol = localise(bytes, s, scene, camera);
            push(1 + b * sc.trials + r, &sol);
          }
        }
      }
    }

    for (std::size_t si = 0; si < n_s; ++si) {
      for (std::size_t run = 0; run < n_runs; ++run)
        unsolved[si][run == 0 ? 0 : 1 + (run - 1) / sc.trials] +=
            est[si][run].frames.size() - est[si][run].solved_count();

      double baseline = 0.0;
      try {
        baseline = metrics::ate_translation(est[si][0], gt).rmse;
      } catch (const MetricError&) {
        for (auto& e : excluded[si]) ++e;
        continue;
      }
      if (!(baseline > 0.0)) {
        for (auto& e : excluded[si]) ++e;
        continue;
      }
      for (std::size_t b = 0; b < n_b; ++b) {
        metrics::TrajectoryRuns tr_runs{baseline, {}};
        for (std::uint32_t r = 0; r < sc.trials; ++r) {
          try {
            tr_runs.errors.push_back(metrics::ate_translation(est[si][1 + b * sc.trials + r], gt).rmse);
          } catch (const MetricError&) {
          }
        }
        if (tr_runs.errors.empty()) {
          ++excluded[si][1 + b];
          continue;
        }
        runs[si][b].push_back(std::move(tr_runs));
      }
    }
    report(progress, "sensitivity trajectory " + std::to_string(tr + 1) + "/" + std::to_string(sc.trajectories));
  }

  SensitivityStudyResult out;
  for (std::size_t si = 0; si < n_s; ++si) {
    const ScenarioId s = sc.scenarios[si];
    if (excluded[si][0] == sc.trajectories)
      throw MetricError("sensitivity scenario " + std::to_string(scenario_number(s)) +
                        ": no trajectory produced a baseline");
    SensitivityRow base;
    base.scenario = s;
    base.ber = 0.0;
    base.n_unsolved = unsolved[si][0];
    base.n_excluded = excluded[si][0];
    base.trajectory_pct.assign(sc.trajectories - excluded[si][0], 0.0);
    out.rows.push_back(base);
    for (std::size_t b = 0; b < n_b; ++b) {
      SensitivityRow row;
      row.scenario = s;
      row.ber = sc.ber_grid[b];
      row.n_unsolved = unsolved[si][1 + b];
      row.n_excluded = excluded[si][1 + b];
      if (!runs[si][b].empty()) {
        row.trajectory_pct = metrics::per_trajectory_percent(runs[si][b]);
        Rng boot_rng = make_rng(cfg.seed, "bootstrap", scenario_number(s), b);
        const auto bs = metrics::bootstrap_stats(row.trajectory_pct, sc.bootstrap_draws, sc.confidence, boot_rng);
        row.boot_mean_pct = bs.mean;
        row.boot_std_pct = bs.std;
        row.ci_lo_pct = bs.ci_low;
        row.ci_hi_pct = bs.ci_high;
      } else {
        row.boot_mean_pct = row.boot_std_pct = row.ci_lo_pct = row.ci_hi_pct = std::nan("");
      }
      report(progress, "sensitivity scenario " + std::to_string(scenario_number(s)) + " ber " + num(row.ber) +
                           ": " + num(row.boot_mean_pct) + " %");
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

BerStudyResult run_ber_study(const ExperimentConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  const ChannelMatrix h = study_channel(cfg);
  BerCurveConfig bc;
  bc.snr_db = cfg.ber.snr_db;
  bc.bits_per_point = cfg.ber.bits_per_point;
  bc.qam_order = cfg.ber.qam_order;
  bc.seed = derive_seed(cfg.seed, "ber-study");
  BerStudyResult out{ber_curve(h, bc)};
  for (const auto& p : out.curve.points)
    report(progress, "ber snr " + num(p.snr_db) + " dB: " + num(p.ber));
  if (out.curve.singular_skipped > 0)
    report(progress, "ber: skipped " + std::to_string(out.curve.singular_skipped) + " ill-conditioned subcarriers");
  return out;
}

PowerStudyResult run_power_study(const ExperimentConfig& cfg, const ProgressFn& progress) {
  cfg.validate();
  PowerStudyResult out;
  BerCurveResult curve;
  if (cfg.power.snr_mode == PowerStudyConfig::SnrMode::Simulated) curve = run_ber_study(cfg, progress).curve;
  for (double target : cfg.power.ber_targets) {
    const double snr = cfg.power.snr_mode == PowerStudyConfig::SnrMode::Analytic
                           ? linkbudget::snr_target_for_ber(target, cfg.ber.qam_order)
                           : linkbudget::snr_target_from_curve(target, curve.points);
    const auto p = linkbudget::required_tx_power(snr, cfg.power.link_budget);
    out.rows.push_back({target, snr, p.dbm, p.mw});
    report(progress, "power ber " + num(target) + ": " + num(snr) + " dB SNR, " + num(p.mw) + " mW");
  }
  return out;
}

std::string provenance_line(const ExperimentConfig& cfg, const std::string& study) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "# xrmimo study=%s config_hash=%016" PRIx64 " seed=%" PRIu64 "\n", study.c_str(),
                config_hash(cfg), cfg.seed);
  return buf;
}

std::string to_csv(const LatencyStudyResult& r, const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << provenance_line(cfg, "latency") << "scenario,structure,term,mean_s,std_s,worst_s,meets_deadline\n";
  for (const auto& row : r.rows)
    os << scenario_number(row.scenario) << ',' << row.structure << ',' << row.term << ',' << num(row.mean_s) << ','
       << num(row.std_s) << ',' << num(row.worst_s) << ',' << (row.meets_deadline ? 1 : 0) << '\n';
  return os.str();
}

std::string to_csv(const SensitivityStudyResult& r, const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << provenance_line(cfg, "sensitivity")
     << "scenario,ber,boot_mean_pct,boot_std_pct,ci_lo_pct,ci_hi_pct,n_unsolved,n_excluded\n";
  for (const auto& row : r.rows)
    os << scenario_number(row.scenario) << ',' << num(row.ber) << ',' << num(row.boot_mean_pct) << ','
       << num(row.boot_std_pct) << ',' << num(row.ci_lo_pct) << ',' << num(row.ci_hi_pct) << ',' << row.n_unsolved
       << ',' << row.n_excluded << '\n';
  return os.str();
}

std::string to_csv(const BerStudyResult& r, const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << provenance_line(cfg, "ber");
  os << "# singular_subcarriers_skipped=" << r.curve.singular_skipped << '\n';
  os << "snr_db,ber,n_bits,n_errors\n";
  for (const auto& p : r.curve.points)
    os << num(p.snr_db) << ',' << num(p.ber) << ',' << p.n_bits << ',' << p.n_errors << '\n';
  return os.str();
}

std::string to_csv(const PowerStudyResult& r, const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << provenance_line(cfg, "power") << "ber_target,snr_db,power_dbm,power_mw\n";
  for (const auto& row : r.rows)
    os << num(row.ber_target) << ',' << num(row.snr_db) << ',' << num(row.power_dbm) << ',' << num(row.power_mw)
       << '\n';
  return os.str();
}

}  // namespace xrmimo
