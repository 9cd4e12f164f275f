#include "pcsd/planner.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "pcsd/error.hpp"

namespace pcsd {
namespace {

std::string axis_key(const char* prefix, Motor m) {
  return std::string(prefix) + "." + static_cast<char>(std::tolower(motor_letter(m)));
}

}  // namespace

void PrinterProfile::validate() const {
  const auto positive = [](double v, const std::string& name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(Errc::config, "printer profile: " + name + " must be positive, got " + format_number(v));
    }
  };
  for (Motor m : kMotors) {
    positive(steps_per_mm[m], axis_key("steps_per_mm", m));
    positive(max_feed[m], axis_key("max_feed", m));
  }
  positive(rated_phase_current, "rated_phase_current");
  positive(default_feed, "default_feed");
  positive(steps_per_electrical_cycle, "steps_per_electrical_cycle");
}

PrinterProfile PrinterProfile::from_config(const KeyValueConfig& config) {
  std::set<std::string> known{"rated_phase_current", "default_feed", "steps_per_electrical_cycle"};
  PrinterProfile p;
  for (Motor m : kMotors) {
    const auto spm = axis_key("steps_per_mm", m);
    const auto mf = axis_key("max_feed", m);
    known.insert(spm);
    known.insert(mf);
    p.steps_per_mm[m] = config.get_double(spm, p.steps_per_mm[m]);
    p.max_feed[m] = config.get_double(mf, p.max_feed[m]);
  }
  config.reject_unknown(known);
  p.rated_phase_current = config.get_double("rated_phase_current", p.rated_phase_current);
  p.default_feed = config.get_double("default_feed", p.default_feed);
  p.steps_per_electrical_cycle = config.get_double("steps_per_electrical_cycle", p.steps_per_electrical_cycle);
  p.validate();
  return p;
}

PrinterProfile PrinterProfile::load(const std::string& path) {
  return from_config(KeyValueConfig::load(path));
}

std::string PrinterProfile::describe() const {
  std::ostringstream out;
  for (Motor m : kMotors) out << axis_key("steps_per_mm", m) << " = " << format_number(steps_per_mm[m]) << "\n";
  for (Motor m : kMotors) out << axis_key("max_feed", m) << " = " << format_number(max_feed[m]) << "\n";
  out << "rated_phase_current = " << format_number(rated_phase_current) << "\n";
  out << "default_feed = " << format_number(default_feed) << "\n";
  out << "steps_per_electrical_cycle = " << format_number(steps_per_electrical_cycle) << "\n";
  return out.str();
}

MotionPlan plan_motion(const GCodeProgram& program, const PrinterProfile& profile) {
  profile.validate();
  MotionPlan plan;
  PerMotor<double> pos{};
  double feed = profile.default_feed;
  Nanos t{0};
  const auto& commands = program.commands();
  plan.command_start.reserve(commands.size());

  for (std::size_t i = 0; i < commands.size(); ++i) {
    plan.command_start.push_back(t);
    const Command& c = commands[i];
    if (!c.is_move()) continue;
    if (c.feed_rate) feed = *c.feed_rate;

    PerMotor<double> target = pos;
    if (c.x) target[Motor::X] = *c.x;
    if (c.y) target[Motor::Y] = *c.y;
    if (c.z) target[Motor::Z] = *c.z;
    if (c.e) target[Motor::E] = *c.e;

    PerMotor<double> delta;
    for (Motor m : kMotors) delta[m] = target[m] - pos[m];
    double length = std::sqrt(delta[Motor::X] * delta[Motor::X] + delta[Motor::Y] * delta[Motor::Y] +
                              delta[Motor::Z] * delta[Motor::Z]);
    if (length == 0.0) length = std::abs(delta[Motor::E]);
    const auto ns = std::llround(length / (feed / 60.0) * 1e9);
    if (ns <= 0) {
      pos = target;
      continue;
    }
    const Nanos duration{ns};
    const double seconds = to_seconds(duration);

    for (Motor m : kMotors) {
      const double axis_feed = std::abs(delta[m]) / seconds * 60.0;
      if (axis_feed > profile.max_feed[m] * (1.0 + 1e-9)) {
        throw Error(Errc::plan, "command " + std::to_string(i + 1) + " ('" + c.raw + "'): " +
                                    std::string(1, motor_letter(m)) + " feed " + format_number(axis_feed) +
                                    " mm/min exceeds max_feed " + format_number(profile.max_feed[m]));
      }
      MotionSegment s;
      s.motor = m;
      s.start = t;
      s.duration = duration;
      s.step_frequency = std::abs(delta[m]) * profile.steps_per_mm[m] / seconds;
      s.direction = delta[m] > 0.0 ? 1 : (delta[m] < 0.0 ? -1 : 0);
      s.start_position = pos[m];
      s.end_position = target[m];
      s.command_index = i;
      plan.segments[m].push_back(s);
    }
    pos = target;
    t += duration;
  }

  plan.total_duration = t;
  if (!program.layers().empty()) plan.trigger_time = plan.command_start[program.layers().front().first_command];
  return plan;
}

double electrical_frequency(const MotionSegment& segment, const PrinterProfile& profile) {
  return segment.step_frequency / profile.steps_per_electrical_cycle;
}

double max_step_frequency(const MotionPlan& plan) {
  double f = 0.0;
  for (const auto& segs : plan.segments) {
    for (const auto& s : segs) f = std::max(f, s.step_frequency);
  }
  return f;
}

}  // namespace pcsd
