#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pcsd/gcode.hpp"
#include "pcsd/kvconfig.hpp"
#include "pcsd/motor.hpp"
#include "pcsd/planner.hpp"

namespace pcsd {

inline constexpr double kDefaultSampleRate = 25000.0;

/// Uniformly sampled single-phase current of one motor, amps.
struct MotorTrace {
  Motor motor = Motor::X;
  double sample_rate = kDefaultSampleRate;
  std::vector<float> samples;
  std::size_t trigger_index = 0;

  std::size_t size() const { return samples.size(); }
  double time_of(std::size_t index) const { return static_cast<double>(index) / sample_rate; }
  bool operator==(const MotorTrace&) const = default;
};

struct ChannelNoise {
  double idle_noise_sd = 0.0;       // A, per sample on hold levels
  double phase_jitter_sd = 0.0;     // rad, per active segment
  double amplitude_noise_sd = 0.0;  // A, per sample on active sections
  double hold_offset_sd = 0.0;      // A, per idle run

  double total_sd() const;
  bool operator==(const ChannelNoise&) const = default;
};

struct NoiseModel {
  PerMotor<ChannelNoise> channels;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const NoiseModel&) const = default;

  /// Calibrated defaults: tight X/Y, elevated Z hold variance, loosely
  /// synchronized extruder.
  static NoiseModel defaults();
  static NoiseModel silent();
  static NoiseModel from_config(const KeyValueConfig& config);
  static NoiseModel load(const std::string& path);
  std::string describe() const;
};

/// True when sample_rate is at least twice max_frequency.
bool nyquist_check(double sample_rate, double max_frequency);

MotorTrace synthesize_trace(const MotionPlan& plan, Motor motor, const PrinterProfile& profile,
                            const NoiseModel& noise, double sample_rate = kDefaultSampleRate);

PerMotor<MotorTrace> simulate_print(const GCodeProgram& program, const PrinterProfile& profile,
                                    const NoiseModel& noise, std::uint64_t seed,
                                    double sample_rate = kDefaultSampleRate);

/// Number of samples covering a plan of the given duration.
std::size_t sample_count_for(Nanos duration, double sample_rate);
/// First sample index at or after time t.
std::size_t sample_at_or_after(Nanos t, double sample_rate);

}  // namespace pcsd
