#pragma once

#include <chrono>
#include <cstddef>
#include <string>
#include <vector>

#include "pcsd/gcode.hpp"
#include "pcsd/kvconfig.hpp"
#include "pcsd/motor.hpp"

namespace pcsd {

using Nanos = std::chrono::nanoseconds;

inline double to_seconds(Nanos t) { return static_cast<double>(t.count()) * 1e-9; }

struct PrinterProfile {
  PerMotor<double> steps_per_mm{{5.0, 5.0, 20.0, 120.0}};        // full steps per mm
  PerMotor<double> max_feed{{2400.0, 2400.0, 600.0, 100.0}};     // mm/min
  double rated_phase_current = 1.5;                              // A
  double default_feed = 1800.0;                                  // mm/min
  double steps_per_electrical_cycle = 4.0;

  void validate() const;
  bool operator==(const PrinterProfile&) const = default;

  static PrinterProfile from_config(const KeyValueConfig& config);
  static PrinterProfile load(const std::string& path);
  /// key = value lines, loadable by from_config.
  std::string describe() const;
};

struct MotionSegment {
  Motor motor = Motor::X;
  Nanos start{0};
  Nanos duration{0};
  double step_frequency = 0.0;  // Hz, 0 when idle
  int direction = 0;            // -1, 0, +1
  double start_position = 0.0;  // mm
  double end_position = 0.0;    // mm
  std::size_t command_index = 0;

  bool active() const { return step_frequency > 0.0; }
  Nanos end() const { return start + duration; }
  bool operator==(const MotionSegment&) const = default;
};

struct MotionPlan {
  PerMotor<std::vector<MotionSegment>> segments;
  Nanos total_duration{0};
  Nanos trigger_time{0};
  /// Start time of every command (zero-duration commands share the time of
  /// the next move).
  std::vector<Nanos> command_start;

  bool operator==(const MotionPlan&) const = default;
};

/// Deterministic G-code -> per-motor activation mapping. Moves run at
/// constant rate (no acceleration); each move yields one segment per motor.
MotionPlan plan_motion(const GCodeProgram& program, const PrinterProfile& profile);

inline Nanos plan_duration(const MotionPlan& plan) { return plan.total_duration; }

/// Electrical frequency of a segment, Hz.
double electrical_frequency(const MotionSegment& segment, const PrinterProfile& profile);
double max_step_frequency(const MotionPlan& plan);

}  // namespace pcsd
