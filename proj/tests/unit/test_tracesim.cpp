#include <gtest/gtest.h>

#include <cmath>

#include "pcsd/attacks.hpp"
#include "pcsd/detect.hpp"
#include "pcsd/error.hpp"
#include "pcsd/harness.hpp"
#include "pcsd/traceio.hpp"
#include "pcsd/tracesim.hpp"

using namespace pcsd;
using namespace std::chrono_literals;

namespace {

class CubeSim : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    cube_ = new GCodeProgram(benchmark_object());
    plan_ = new MotionPlan(plan_motion(*cube_, PrinterProfile{}));
  }
  static void TearDownTestSuite() {
    delete plan_;
    delete cube_;
  }
  static GCodeProgram* cube_;
  static MotionPlan* plan_;
};
GCodeProgram* CubeSim::cube_ = nullptr;
MotionPlan* CubeSim::plan_ = nullptr;

// Per-sample flag: true where the motor's segment is idle.
std::vector<char> idle_mask(const MotionPlan& plan, Motor m, std::size_t n, double fs) {
  std::vector<char> mask(n, 1);
  for (const auto& s : plan.segments[m]) {
    if (!s.active()) continue;
    const auto k0 = std::min(sample_at_or_after(s.start, fs), n);
    const auto k1 = std::min(sample_at_or_after(s.end(), fs), n);
    for (auto k = k0; k < k1; ++k) mask[k] = 0;
  }
  return mask;
}

}  // namespace

TEST(Nyquist, Check) {
  EXPECT_TRUE(nyquist_check(25000, 200));
  EXPECT_FALSE(nyquist_check(300, 200));
  EXPECT_TRUE(nyquist_check(400, 200));
}

TEST(Synthesis, IdleOnlyPlanIsConstantInitialLevel) {
  const auto plan = plan_motion(parse_gcode("G1 X10 F600\n"), PrinterProfile{});
  const auto t = synthesize_trace(plan, Motor::Y, PrinterProfile{}, NoiseModel::silent());
  EXPECT_EQ(t.sample_rate, 25000.0);
  EXPECT_EQ(t.size(), 25001u);
  for (float v : t.samples) EXPECT_EQ(v, 0.0f);
}

TEST(Synthesis, ActiveSegmentIsSinusoidAtElectricalFrequency) {
  // 10 mm at 600 mm/min, 5 steps/mm, 4 steps/cycle: 12.5 cycles in 1 s.
  const auto plan = plan_motion(parse_gcode("G1 X10 F600\n"), PrinterProfile{});
  const auto t = synthesize_trace(plan, Motor::X, PrinterProfile{}, NoiseModel::silent());
  for (std::size_t k = 0; k < 25000; k += 97) {
    const double expected = 1.5 * std::sin(2.0 * M_PI * 12.5 * static_cast<double>(k) / 25000.0);
    EXPECT_NEAR(t.samples[k], expected, 1e-5) << k;
  }
}

TEST(Synthesis, HoldLevelEqualsLastActiveSample) {
  const auto plan = plan_motion(parse_gcode("G1 X1.3 F600\nG1 Y4\n"), PrinterProfile{});
  const auto t = synthesize_trace(plan, Motor::X, PrinterProfile{}, NoiseModel::silent());
  const std::size_t end_active = sample_at_or_after(plan.segments[Motor::X][0].end(), 25000);
  const float last = t.samples[end_active - 1];
  EXPECT_GT(std::abs(last), 0.1f);
  for (std::size_t k = end_active; k < t.size(); ++k) ASSERT_EQ(t.samples[k], last);
}

TEST(Synthesis, HoldLevelWithNoiseCentresOnLastActiveSample) {
  const auto plan = plan_motion(parse_gcode("G1 X1.3 F600\nG1 Y20\n"), PrinterProfile{});
  NoiseModel noise = NoiseModel::silent();
  noise.channels[Motor::X].idle_noise_sd = 0.02;
  noise.seed = 5;
  const auto clean = synthesize_trace(plan, Motor::X, PrinterProfile{}, NoiseModel::silent());
  const auto noisy = synthesize_trace(plan, Motor::X, PrinterProfile{}, noise);
  const std::size_t end_active = sample_at_or_after(plan.segments[Motor::X][0].end(), 25000);
  double sum = 0.0;
  for (std::size_t k = end_active; k < noisy.size(); ++k) sum += noisy.samples[k] - clean.samples[end_active - 1];
  EXPECT_NEAR(sum / static_cast<double>(noisy.size() - end_active), 0.0, 0.002);
}

TEST(Synthesis, NyquistViolationIsAnError) {
  const auto plan = plan_motion(parse_gcode("G1 X10 F600\n"), PrinterProfile{});
  EXPECT_THROW(synthesize_trace(plan, Motor::X, PrinterProfile{}, NoiseModel::silent(), 20.0), Error);
  EXPECT_NO_THROW(synthesize_trace(plan, Motor::X, PrinterProfile{}, NoiseModel::silent(), 25.0));
}

TEST(Synthesis, SampleIndexHelpers) {
  EXPECT_EQ(sample_count_for(0ns, 25000), 1u);
  EXPECT_EQ(sample_count_for(1s, 25000), 25001u);
  EXPECT_EQ(sample_count_for(39999ns, 25000), 1u);
  EXPECT_EQ(sample_count_for(40000ns, 25000), 2u);
  EXPECT_EQ(sample_at_or_after(40000ns, 25000), 1u);
  EXPECT_EQ(sample_at_or_after(40001ns, 25000), 2u);
  EXPECT_EQ(sample_at_or_after(0ns, 25000), 0u);
}

TEST_F(CubeSim, FourTracesOfEqualLength) {
  const auto traces = simulate_print(*cube_, PrinterProfile{}, NoiseModel::defaults(), 3);
  const std::size_t expected = sample_count_for(plan_->total_duration, 25000);
  EXPECT_NEAR(static_cast<double>(expected), to_seconds(plan_->total_duration) * 25000.0, 1.0);
  for (Motor m : kMotors) {
    EXPECT_EQ(traces[m].motor, m);
    EXPECT_EQ(traces[m].size(), expected);
    EXPECT_EQ(traces[m].trigger_index, traces[Motor::X].trigger_index);
    EXPECT_LT(traces[m].trigger_index, traces[m].size());
  }
}

TEST_F(CubeSim, ReproducibleAndSeedSensitive) {
  const auto a = synthesize_trace(*plan_, Motor::E, PrinterProfile{}, [] {
    auto n = NoiseModel::defaults();
    n.seed = 9;
    return n;
  }());
  const auto b = simulate_print(*cube_, PrinterProfile{}, NoiseModel::defaults(), 9);
  const auto c = simulate_print(*cube_, PrinterProfile{}, NoiseModel::defaults(), 10);
  EXPECT_EQ(a, b[Motor::E]);
  EXPECT_NE(b[Motor::E], c[Motor::E]);
}

TEST_F(CubeSim, BenignPairIdleBound) {
  const auto a = simulate_print(*cube_, PrinterProfile{}, NoiseModel::defaults(), 21);
  const auto b = simulate_print(*cube_, PrinterProfile{}, NoiseModel::defaults(), 22);
  const NoiseModel noise = NoiseModel::defaults();
  for (Motor m : kMotors) {
    const auto& ch = noise.channels[m];
    // A per-run hold offset adds to the idle spread on Z.
    const double bound = 6.0 * std::sqrt(ch.idle_noise_sd * ch.idle_noise_sd + ch.hold_offset_sd * ch.hold_offset_sd);
    const auto mask = idle_mask(*plan_, m, a[m].size(), 25000);
    std::size_t idle = 0;
    std::size_t within = 0;
    for (std::size_t k = 0; k < mask.size(); ++k) {
      if (!mask[k]) continue;
      ++idle;
      within += std::abs(a[m].samples[k] - b[m].samples[k]) <= bound ? 1 : 0;
    }
    ASSERT_GT(idle, 0u);
    EXPECT_GE(static_cast<double>(within) / static_cast<double>(idle), 0.999) << motor_letter(m);
  }
}

TEST_F(CubeSim, EnergyBound) {
  const auto traces = simulate_print(*cube_, PrinterProfile{}, NoiseModel::defaults(), 4);
  const NoiseModel noise = NoiseModel::defaults();
  for (Motor m : kMotors) {
    const double bound = 1.5 + 6.0 * noise.channels[m].total_sd();
    for (float v : traces[m].samples) {
      ASSERT_TRUE(std::isfinite(v));
      ASSERT_LE(std::abs(v), bound);
    }
  }
}

TEST_F(CubeSim, ExtruderBaselineSpreadExceedsXY) {
  PerMotor<BaselineAccumulator> acc;
  for (std::uint64_t seed = 100; seed < 104; ++seed) {
    const auto t = simulate_print(*cube_, PrinterProfile{}, NoiseModel::defaults(), seed);
    for (Motor m : kMotors) acc[m].add(smooth(align_to_trigger(t[m])));
  }
  const auto x = acc[Motor::X].finish();
  const auto y = acc[Motor::Y].finish();
  const auto e = acc[Motor::E].finish();
  EXPECT_GT(e.peak_sd, 4.0f * x.peak_sd);
  EXPECT_GT(e.peak_sd, 4.0f * y.peak_sd);
}

TEST_F(CubeSim, InsertTraceIsShiftedBenignTrace) {
  AttackSpec spec;
  spec.kind = AttackKind::Insert;
  spec.layer = 7;
  spec.position = 20;
  spec.payload = parse_line("G0 X2 Y2", 1);
  const auto attacked = inject_insert(*cube_, spec);
  const auto plan_b = plan_motion(attacked, PrinterProfile{});
  const Nanos d = plan_b.total_duration - plan_->total_duration;
  const std::size_t at = resolve_command(*cube_, 7, 20);
  const std::size_t insert_sample = sample_at_or_after(plan_->command_start[at], 25000);
  const std::size_t resync_sample = sample_at_or_after(plan_b.command_start[at + 2], 25000);
  const auto shift = static_cast<std::ptrdiff_t>(std::llround(to_seconds(d) * 25000.0));

  for (Motor m : kMotors) {
    const auto a = synthesize_trace(*plan_, m, PrinterProfile{}, NoiseModel::silent());
    const auto b = synthesize_trace(plan_b, m, PrinterProfile{}, NoiseModel::silent());
    for (std::size_t k = 0; k < insert_sample; ++k) ASSERT_EQ(a.samples[k], b.samples[k]) << k;
    double worst = 0.0;
    // The final samples straddle the end of the last segment.
    for (std::size_t k = resync_sample + 2; k + 2 < b.size(); ++k) {
      const auto j = static_cast<std::ptrdiff_t>(k) - shift;
      worst = std::max(worst, static_cast<double>(std::abs(b.samples[k] - a.samples[static_cast<std::size_t>(j)])));
    }
    // Sub-sample timing offset of at most half a sample at <= 50 Hz.
    EXPECT_LT(worst, 1.5 * 2.0 * M_PI * 50.0 / 25000.0) << motor_letter(m);
  }
}

TEST(NoiseConfig, LoadDescribeRoundTrip) {
  NoiseModel n = NoiseModel::defaults();
  n.channels[Motor::Z].hold_offset_sd = 0.05;
  n.seed = 77;
  EXPECT_EQ(NoiseModel::from_config(KeyValueConfig::parse(n.describe())), n);
  EXPECT_EQ(NoiseModel::load(std::string(PCSD_CONFIG_DIR) + "/noise.cfg"), NoiseModel::defaults());
  EXPECT_THROW(NoiseModel::from_config(KeyValueConfig::parse("x.idle_noise_sd = -1\n")), Error);
  EXPECT_THROW(NoiseModel::from_config(KeyValueConfig::parse("w.idle_noise_sd = 1\n")), Error);
}
