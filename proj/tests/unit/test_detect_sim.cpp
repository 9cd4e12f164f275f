#include <gtest/gtest.h>

#include "pcsd/attacks.hpp"
#include "pcsd/detect.hpp"
#include "pcsd/harness.hpp"
#include "pcsd/traceio.hpp"

using namespace pcsd;

namespace {

// Ten golden captures of the benchmark object at default noise.
class SimulatedDetection : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    cube_ = new GCodeProgram(benchmark_object());
    baselines_ = new PerMotor<GoldenBaseline>();
    PerMotor<BaselineAccumulator> acc;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto t = simulate_print(*cube_, PrinterProfile{}, NoiseModel::defaults(), seed);
      for (Motor m : kMotors) acc[m].add(smooth(align_to_trigger(t[m])));
    }
    for (Motor m : kMotors) (*baselines_)[m] = acc[m].finish();
  }
  static void TearDownTestSuite() {
    delete baselines_;
    delete cube_;
  }

  static PerMotor<MotorAnalysis> analyze(const GCodeProgram& program, std::uint64_t seed) {
    const auto t = simulate_print(program, PrinterProfile{}, NoiseModel::defaults(), seed);
    PerMotor<MotorAnalysis> out;
    for (Motor m : kMotors) out[m] = analyze_capture(t[m], (*baselines_)[m], DetectionConfig{});
    return out;
  }
  static PrintReport detect(const GCodeProgram& program, std::uint64_t seed) {
    const auto t = simulate_print(program, PrinterProfile{}, NoiseModel::defaults(), seed);
    const std::vector<MotorTrace> caps(t.begin(), t.end());
    const std::vector<GoldenBaseline> bases(baselines_->begin(), baselines_->end());
    return detect_print(caps, bases, DetectionConfig{});
  }
  static GCodeProgram attacked(AttackKind kind, const std::string& text) {
    return inject_all(*cube_, parse_attack_specs(kind, text));
  }

  static GCodeProgram* cube_;
  static PerMotor<GoldenBaseline>* baselines_;
};
GCodeProgram* SimulatedDetection::cube_ = nullptr;
PerMotor<GoldenBaseline>* SimulatedDetection::baselines_ = nullptr;

double mean_over(const std::vector<float>& v, std::size_t from, std::size_t to) {
  double s = 0.0;
  for (std::size_t i = from; i < to; ++i) s += v[i];
  return s / static_cast<double>(to - from);
}

}  // namespace

TEST_F(SimulatedDetection, BaselineSpreadOrdering) {
  EXPECT_LT((*baselines_)[Motor::X].peak_sd, 0.5f);
  EXPECT_LT((*baselines_)[Motor::Y].peak_sd, 0.5f);
  EXPECT_GT((*baselines_)[Motor::E].peak_sd, (*baselines_)[Motor::Z].peak_sd);
  EXPECT_GT((*baselines_)[Motor::Z].peak_sd, (*baselines_)[Motor::X].peak_sd);
  for (Motor m : kMotors) EXPECT_EQ((*baselines_)[m].source_count, 10u);
}

TEST_F(SimulatedDetection, ReferenceSelfComparisonIsBenign) {
  for (Motor m : kMotors) {
    const auto& b = (*baselines_)[m];
    const auto dev = deviation(b.reference_trace, b);
    for (float d : dev) ASSERT_EQ(d, 0.0f);
    EXPECT_EQ(classify(dev, excess(dev, b), b, DetectionConfig{}).verdict, Verdict::Benign);
  }
}

TEST_F(SimulatedDetection, BenignCaptureIsBenign) {
  const auto rep = detect(*cube_, 1001);
  EXPECT_EQ(rep.overall, Verdict::Benign);
  for (Motor m : kMotors) {
    EXPECT_EQ(rep.motors[m].verdict, Verdict::Benign) << motor_letter(m);
    EXPECT_LT(rep.motors[m].max_run_length, DetectionConfig{}.run_requirement / 2) << motor_letter(m);
  }
}

TEST_F(SimulatedDetection, InsertIsMaliciousOnXYOnly) {
  const auto rep = detect(attacked(AttackKind::Insert, "7,20,G0 X2 Y2"), 2001);
  EXPECT_EQ(rep.overall, Verdict::Malicious);
  EXPECT_EQ(rep.motors[Motor::X].verdict, Verdict::Malicious);
  EXPECT_EQ(rep.motors[Motor::Y].verdict, Verdict::Malicious);
  EXPECT_EQ(rep.motors[Motor::Z].verdict, Verdict::Benign);
  EXPECT_EQ(rep.motors[Motor::E].verdict, Verdict::Benign);
  // The desynchronized X trace deviates by about the full phase amplitude.
  EXPECT_GT(rep.motors[Motor::X].peak_deviation, 1.0);
  EXPECT_GT(rep.motors[Motor::X].peak_excess, 0.0);
}

TEST_F(SimulatedDetection, DeleteIsMaliciousOnXY) {
  const auto rep = detect(attacked(AttackKind::Delete, "7,4"), 2101);
  EXPECT_EQ(rep.motors[Motor::X].verdict, Verdict::Malicious);
  EXPECT_EQ(rep.motors[Motor::Y].verdict, Verdict::Malicious);
}

TEST_F(SimulatedDetection, VoidIsBenignWithExtruderDisturbance) {
  const auto rep = detect(attacked(AttackKind::Void, "7,87"), 2301);
  EXPECT_EQ(rep.overall, Verdict::Benign);
  EXPECT_TRUE(rep.motors[Motor::E].disturbance);
  EXPECT_NE(rep.to_text().find("report.E.disturbance=true"), std::string::npos);
}

TEST_F(SimulatedDetection, ReorderIsMaliciousViaXY) {
  const auto rep = detect(attacked(AttackKind::Reorder, "7,20,21;8,20,21"), 2201);
  EXPECT_EQ(rep.overall, Verdict::Malicious);
  EXPECT_EQ(rep.motors[Motor::X].verdict, Verdict::Malicious);
  EXPECT_EQ(rep.motors[Motor::Y].verdict, Verdict::Malicious);
}

TEST_F(SimulatedDetection, ReorderAftereffectElevatesExcess) {
  const auto program = attacked(AttackKind::Reorder, "7,20,21;8,20,21");
  const auto plan = plan_motion(program, PrinterProfile{});
  // Post-attack window: from the command after the second swapped pair to the end.
  const std::size_t after = resolve_command(program, 8, 22);
  const std::size_t from = sample_at_or_after(plan.command_start[after] - plan.trigger_time, kDefaultSampleRate);
  const auto attack = analyze(program, 2202);
  const auto benign = analyze(*cube_, 1002);
  for (Motor m : {Motor::X, Motor::Y}) {
    const std::size_t to = std::min(attack[m].excess.size(), benign[m].excess.size());
    ASSERT_LT(from, to);
    EXPECT_GT(mean_over(attack[m].excess, from, to), 2.0 * mean_over(benign[m].excess, from, to)) << motor_letter(m);
  }
}
