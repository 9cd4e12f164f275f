#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcsd/motor.hpp"
#include "pcsd/tracesim.hpp"

namespace pcsd {

/// Centered moving average. For even windows the extra sample is taken after
/// the center (9 before, 10 after for window 20); near the ends the window
/// shrinks to the samples that exist.
std::vector<float> moving_average(std::span<const float> samples, std::size_t window);
MotorTrace smooth(const MotorTrace& trace, std::size_t window = 20);

struct GoldenBaseline {
  Motor motor = Motor::X;
  double sample_rate = kDefaultSampleRate;
  std::vector<float> pointwise_mean;
  std::vector<float> pointwise_sd;
  float peak_sd = 0.0f;
  MotorTrace reference_trace;
  std::size_t source_count = 0;
  std::size_t print_end = 0;  // peak_sd is taken over [0, print_end)

  std::size_t size() const { return pointwise_sd.size(); }
  /// Prefix of the first n samples; peak_sd and print_end are kept.
  GoldenBaseline truncated(std::size_t n) const;
  bool operator==(const GoldenBaseline&) const = default;
};

/// Streaming pointwise mean / sample standard deviation (Welford). Used by
/// build_baseline and by the harness to avoid holding every golden trace.
class BaselineAccumulator {
 public:
  void add(const MotorTrace& trace);
  std::size_t count() const { return count_; }
  GoldenBaseline finish(std::optional<std::size_t> print_end = std::nullopt) const;

 private:
  std::size_t count_ = 0;
  MotorTrace reference_;
  std::vector<double> mean_;
  std::vector<double> m2_;
};

/// Inputs must already be aligned, smoothed and common-windowed. The first
/// trace becomes the reference.
GoldenBaseline build_baseline(std::span<const MotorTrace> golden,
                              std::optional<std::size_t> print_end = std::nullopt);

/// |captured - reference| per sample.
std::vector<float> deviation(const MotorTrace& captured, const GoldenBaseline& baseline);
/// max(0, deviation - pointwise_sd) per sample.
std::vector<float> excess(std::span<const float> deviation, const GoldenBaseline& baseline);

struct DetectionConfig {
  std::size_t window = 20;
  double margin = 0.1;                 // A above peak_sd
  std::size_t run_requirement = 1250;  // contiguous samples (50 ms at 25 kS/s)

  void validate() const;
  bool operator==(const DetectionConfig&) const = default;
};

enum class Verdict { Benign, Malicious };
const char* verdict_name(Verdict v);

struct DetectionReport {
  Motor motor = Motor::X;
  Verdict verdict = Verdict::Benign;
  double threshold = 0.0;
  std::size_t exceed_count = 0;
  std::size_t max_run_length = 0;
  std::optional<double> first_exceed_time;  // s after trigger
  double peak_excess = 0.0;
  double peak_deviation = 0.0;
  /// Above-threshold samples exist but no run is long enough.
  bool disturbance = false;
  std::optional<std::string> excess_series_path;

  bool operator==(const DetectionReport&) const = default;
};

/// Verdict uses the raw deviation against peak_sd + margin; the excess
/// series only feeds peak_excess.
DetectionReport classify(std::span<const float> deviation, std::span<const float> excess,
                         const GoldenBaseline& baseline, const DetectionConfig& config);

struct PrintReport {
  PerMotor<DetectionReport> motors;
  Verdict overall = Verdict::Benign;

  /// Line-oriented "report.<motor>.<key>=<value>" text.
  std::string to_text() const;
};

/// Per-motor intermediate series of one detection pass.
struct MotorAnalysis {
  DetectionReport report;
  std::vector<float> deviation;
  std::vector<float> excess;
};

/// Aligns, smooths and windows a raw capture, then deviates and classifies.
MotorAnalysis analyze_capture(const MotorTrace& capture, const GoldenBaseline& baseline,
                              const DetectionConfig& config);

/// Captures and baselines may come in any order but must cover every motor
/// exactly once.
PrintReport detect_print(std::span<const MotorTrace> captures, std::span<const GoldenBaseline> baselines,
                         const DetectionConfig& config);

}  // namespace pcsd
