#include <cmath>

#include <gtest/gtest.h>

#include "xrmimo/errors.hpp"
#include "xrmimo/frame_latency.hpp"

using namespace xrmimo;

namespace {

constexpr double kSymb = 71.4e-6;

ExecTimeTable zero_exec() {
  ExecTimeTable t;
  for (auto s : kAllScenarios) t[s] = {ExecTimeModel::constant(0.0), ExecTimeModel::constant(0.0)};
  return t;
}

FrameStructure custom(const char* layout) {
  FrameStructure fs;
  fs.name = "custom";
  fs.layout = parse_layout(layout);
  return fs;
}

}  // namespace

TEST(FrameStructure, PresetsHaveExpectedRoles) {
  const auto a = FrameStructure::preset_a();
  const auto b = FrameStructure::preset_b();
  EXPECT_EQ(format_layout(a.layout), "PUUUUPDDDD");
  EXPECT_EQ(format_layout(b.layout), "PUUUUUUUUD");
  EXPECT_EQ(a.data_symbols(Direction::Uplink), 4u);
  EXPECT_EQ(a.data_symbols(Direction::Downlink), 4u);
  EXPECT_EQ(b.data_symbols(Direction::Uplink), 8u);
  EXPECT_EQ(b.data_symbols(Direction::Downlink), 1u);
  EXPECT_EQ(a.bits_per_ofdm_symbol(), 7200u);
  EXPECT_NO_THROW(a.validate());
  EXPECT_NO_THROW(b.validate());
}

TEST(FrameStructure, InvalidLayoutsRejected) {
  EXPECT_THROW(parse_layout("PUX"), ConfigError);
  EXPECT_THROW(custom("U").validate(), ConfigError);
  EXPECT_THROW(custom("PUUU").validate(), ConfigError);
  EXPECT_THROW(custom("PDDD").validate(), ConfigError);
  auto fs = custom("UD");
  fs.bits_per_qam_symbol = 5;
  EXPECT_THROW(fs.validate(), ConfigError);
  fs = custom("UD");
  fs.tau_symb = 0.0;
  EXPECT_THROW(fs.validate(), ConfigError);
  EXPECT_EQ(format_layout(parse_layout("P U\tG D")), "PUGD");
}

TEST(SymbolsPerPose, HandValues) {
  const auto fs = FrameStructure::preset_a();
  EXPECT_EQ(symbols_per_pose(7'372'800, fs), 1024u);
  EXPECT_EQ(symbols_per_pose(688'128, fs), 96u);
  EXPECT_EQ(symbols_per_pose(1, fs), 1u);
  EXPECT_EQ(symbols_per_pose(7200, fs), 1u);
  EXPECT_EQ(symbols_per_pose(7201, fs), 2u);
}

TEST(SlotsPerPose, HandValues) {
  EXPECT_EQ(slots_per_pose(96, FrameStructure::preset_b(), Direction::Uplink), 11u);
  EXPECT_EQ(slots_per_pose(1024, FrameStructure::preset_a(), Direction::Uplink), 255u);
  EXPECT_EQ(slots_per_pose(1, FrameStructure::preset_a(), Direction::Downlink), 0u);
  EXPECT_EQ(slots_per_pose(1, FrameStructure::preset_b(), Direction::Uplink), 0u);
}

TEST(WorstCaseWait, PresetsAndEdgeLayouts) {
  EXPECT_EQ(worst_case_wait(FrameStructure::preset_a(), Direction::Uplink), 7u);
  EXPECT_EQ(worst_case_wait(FrameStructure::preset_b(), Direction::Uplink), 3u);
  EXPECT_EQ(worst_case_wait(FrameStructure::preset_a(), Direction::Downlink), 7u);
  EXPECT_EQ(worst_case_wait(FrameStructure::preset_b(), Direction::Downlink), 10u);
  EXPECT_EQ(worst_case_wait(custom("UUUUD"), Direction::Uplink), 2u);
  // Non-contiguous uplink: gaps 2 and 4 in a 6-symbol cycle.
  EXPECT_EQ(worst_case_wait(custom("UDUDDD"), Direction::Uplink), 4u);
}

TEST(TransmissionLatency, GoldenValues) {
  EXPECT_DOUBLE_EQ(transmission_latency(688'128, FrameStructure::preset_b(), Direction::Uplink),
                   kSymb * (3 + 96 + 11 * 2));
  EXPECT_NEAR(transmission_latency(688'128, FrameStructure::preset_b(), Direction::Uplink), 8.6394e-3, 1e-12);
  EXPECT_NEAR(transmission_latency(7'372'800, FrameStructure::preset_a(), Direction::Uplink), 182.8554e-3, 1e-12);
  EXPECT_NEAR(transmission_latency(320, FrameStructure::preset_a(), Direction::Downlink), 571.2e-6, 1e-15);
  EXPECT_NEAR(transmission_latency(320, FrameStructure::preset_b(), Direction::Downlink), 785.4e-6, 1e-15);
}

TEST(TransmissionLatency, MonotoneInPayload) {
  for (const auto& fs : {FrameStructure::preset_a(), FrameStructure::preset_b()}) {
    for (auto dir : {Direction::Uplink, Direction::Downlink}) {
      double prev = 0.0;
      for (std::uint64_t bits = 1; bits < 400'000; bits += 997) {
        const double t = transmission_latency(bits, fs, dir);
        EXPECT_GE(t, prev);
        prev = t;
      }
    }
  }
}

TEST(TransmissionLatency, MoreUplinkSymbolsNeverSlower) {
  // Same symbol count and same total data symbols, uplink share growing.
  const char* layouts[] = {"PUUUUDDDDD", "PUUUUUDDDD", "PUUUUUUDDD", "PUUUUUUUDD", "PUUUUUUUUD"};
  for (std::uint64_t bits : {1ull, 7200ull, 100'000ull, 688'128ull, 7'372'800ull}) {
    double prev = INFINITY;
    for (const char* l : layouts) {
      const double t = transmission_latency(bits, custom(l), Direction::Uplink);
      EXPECT_LE(t, prev) << l << " bits=" << bits;
      prev = t;
    }
  }
}

TEST(TransmissionLatency, FitsInOneSlot) {
  const auto fs = FrameStructure::preset_b();
  for (std::uint64_t bits : {1ull, 7200ull, 57'600ull}) {
    const auto n = symbols_per_pose(bits, fs);
    ASSERT_LE(n, fs.data_symbols(Direction::Uplink));
    EXPECT_EQ(slots_per_pose(n, fs, Direction::Uplink), 0u);
    EXPECT_DOUBLE_EQ(transmission_latency(bits, fs, Direction::Uplink),
                     fs.tau_symb * (worst_case_wait(fs, Direction::Uplink) + n));
  }
}

TEST(PoseLatency, ZeroExecScenario3B) {
  const auto b = pose_latency(ScenarioId::FeaturesWithDepth, FrameStructure::preset_b(), zero_exec(), 1);
  EXPECT_NEAR(b.tau_pose, 9.5568e-3, 1e-12);
  EXPECT_NEAR(b.tau_dl, 785.4e-6, 1e-15);
  EXPECT_TRUE(b.meets_deadline);
}

TEST(PoseLatency, ConstantExecScenario1AMissesDeadline) {
  ExecTimeTable t = zero_exec();
  t[ScenarioId::Raw] = {ExecTimeModel::constant(0.035), ExecTimeModel::constant(0.020)};
  const auto b = pose_latency(ScenarioId::Raw, FrameStructure::preset_a(), t, 1);
  EXPECT_NEAR(b.tau_pose, 238.5586e-3, 1e-12);
  EXPECT_FALSE(b.meets_deadline);
}

TEST(PoseLatency, OnlyBaseStationTerm) {
  FrameStructure fs = FrameStructure::preset_a();
  fs.tau_symb = 1e-300;  // makes transmission negligible but keeps the structure valid
  const auto b = pose_latency(ScenarioId::Raw, fs, zero_exec(), 1);
  EXPECT_NEAR(b.tau_pose, 132e-6, 1e-15);
}

TEST(PoseLatency, SumIdentityAndDeterminism) {
  const auto exec = default_exec_times();
  for (auto s : kAllScenarios) {
    for (const auto& fs : {FrameStructure::preset_a(), FrameStructure::preset_b()}) {
      Rng r1(99), r2(99);
      for (int i = 0; i < 200; ++i) {
        const auto a = pose_latency(s, fs, exec, r1);
        const auto b = pose_latency(s, fs, exec, r2);
        EXPECT_EQ(a.tau_pose, LatencyBreakdown::sum(a.tau_device, a.tau_ul, a.tau_bs, a.tau_offloaded, a.tau_dl));
        EXPECT_EQ(a.tau_pose, b.tau_pose);
        EXPECT_EQ(a.tau_device, b.tau_device);
        EXPECT_GE(a.tau_device, 0.0);
        EXPECT_GE(a.tau_offloaded, 0.0);
        EXPECT_EQ(a.meets_deadline, a.tau_pose <= 0.2);
      }
    }
  }
}

TEST(PoseLatency, MissingScenarioIsConfigError) {
  ExecTimeTable t;
  EXPECT_THROW(pose_latency(ScenarioId::Raw, FrameStructure::preset_a(), t, 1), ConfigError);
}

TEST(ExecTimeModel, DefaultsDoubleDeviceTimeWithFeatureExtraction) {
  const auto t = default_exec_times();
  const double s1 = t.at(ScenarioId::Raw).device.nominal_mean();
  EXPECT_GT(t.at(ScenarioId::FeaturesDepthMap).device.nominal_mean(), 2 * s1);
  EXPECT_GT(t.at(ScenarioId::FeaturesWithDepth).device.nominal_mean(), 2 * s1);
}

TEST(ExecTimeModel, SamplingKinds) {
  Rng rng(3);
  EXPECT_EQ(ExecTimeModel::constant(0.01).sample(rng), 0.01);
  const auto emp = ExecTimeModel::empirical({0.01, 0.02, 0.03});
  for (int i = 0; i < 100; ++i) {
    const double v = emp.sample(rng);
    EXPECT_TRUE(v == 0.01 || v == 0.02 || v == 0.03);
  }
  EXPECT_NEAR(emp.nominal_mean(), 0.02, 1e-15);
  const auto tn = ExecTimeModel::truncated_normal(0.001, 0.01);
  for (int i = 0; i < 1000; ++i) EXPECT_GE(tn.sample(rng), 0.0);
  EXPECT_THROW(ExecTimeModel::constant(-1.0).validate(), ConfigError);
  EXPECT_THROW(ExecTimeModel::empirical({}).validate(), ConfigError);
  EXPECT_THROW(ExecTimeModel::truncated_normal(0.01, -1.0).validate(), ConfigError);
}
