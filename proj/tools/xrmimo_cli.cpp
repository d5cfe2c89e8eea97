// xrmimo: run the latency, sensitivity, BER and power studies and write CSVs.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "xrmimo/config.hpp"
#include "xrmimo/errors.hpp"
#include "xrmimo/runner.hpp"

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out.flush()) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pose-offloading experiments over a Massive MIMO uplink"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<std::uint32_t> trials;
  bool quiet = false;
  app.add_option("--config", config_path, "JSON experiment config (built-in defaults when omitted)")
      ->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "master seed override");
  app.add_option("--out", out_dir, "output directory override");
  app.add_option("--trials", trials, "override latency samples and sensitivity trials")->check(CLI::PositiveNumber);
  app.add_flag("--quiet", quiet, "suppress progress output");

  for (const char* name : {"latency", "sensitivity", "ber", "power", "all"})
    app.add_subcommand(name, std::string(name) == "all" ? "run every study" : std::string("run the ") + name + " study")
        ->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    xrmimo::ExperimentConfig cfg = config_path.empty() ? xrmimo::default_config() : xrmimo::load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (trials) {
      cfg.latency.samples = *trials;
      cfg.sensitivity.trials = *trials;
    }
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    cfg.validate();

    const std::string cmd = app.get_subcommands().front()->get_name();
    const bool all = cmd == "all";
    fs::create_directories(cfg.output_dir);
    const xrmimo::ProgressFn progress = quiet ? xrmimo::ProgressFn{} : [](const std::string& m) {
      std::cerr << m << '\n';
    };

    auto emit = [&](const std::string& study, const std::string& csv) {
      const fs::path path = cfg.output_dir / (study + ".csv");
      write_file(path, csv);
      if (!quiet) std::cerr << "wrote " << path.string() << '\n';
    };
    if (all || cmd == "latency") emit("latency", xrmimo::to_csv(xrmimo::run_latency_study(cfg, progress), cfg));
    if (all || cmd == "ber") emit("ber", xrmimo::to_csv(xrmimo::run_ber_study(cfg, progress), cfg));
    if (all || cmd == "power") emit("power", xrmimo::to_csv(xrmimo::run_power_study(cfg, progress), cfg));
    if (all || cmd == "sensitivity")
      emit("sensitivity", xrmimo::to_csv(xrmimo::run_sensitivity_study(cfg, progress), cfg));
  } catch (const xrmimo::ConfigError& e) {
    std::cerr << "xrmimo: config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "xrmimo: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
