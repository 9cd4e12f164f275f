#include "pcsd/tracesim.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "pcsd/error.hpp"

namespace pcsd {
namespace {

constexpr std::uint64_t kPurposeActive = 1;
constexpr std::uint64_t kPurposeIdle = 2;
constexpr std::uint64_t kPurposeHold = 3;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream per (seed, motor, segment, purpose) so that a segment's
// noise does not depend on how many draws earlier segments made.
std::mt19937_64 stream(std::uint64_t seed, Motor motor, std::size_t segment, std::uint64_t purpose) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ index_of(motor));
  h = splitmix64(h ^ static_cast<std::uint64_t>(segment));
  h = splitmix64(h ^ purpose);
  return std::mt19937_64(h);
}

// Exact integer path when ns * fs fits in 64 bits and fs is whole.
bool integral_rate(double fs, std::int64_t ns) {
  if (!(fs >= 1.0 && fs <= 1e9 && std::floor(fs) == fs)) return false;
  return static_cast<std::uint64_t>(ns) <= UINT64_MAX / static_cast<std::uint64_t>(fs);
}

std::string channel_key(Motor m, const char* field) {
  return std::string(1, static_cast<char>(std::tolower(motor_letter(m)))) + "." + field;
}

double electrical_angle(double position, Motor m, const PrinterProfile& profile) {
  return 2.0 * std::numbers::pi * position * profile.steps_per_mm[m] / profile.steps_per_electrical_cycle;
}

}  // namespace

double ChannelNoise::total_sd() const {
  return std::sqrt(idle_noise_sd * idle_noise_sd + amplitude_noise_sd * amplitude_noise_sd +
                   hold_offset_sd * hold_offset_sd);
}

void NoiseModel::validate() const {
  for (Motor m : kMotors) {
    const auto& c = channels[m];
    for (double v : {c.idle_noise_sd, c.phase_jitter_sd, c.amplitude_noise_sd, c.hold_offset_sd}) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw Error(Errc::config, std::string("noise model: ") + motor_letter(m) +
                                      " standard deviations must be finite and >= 0");
      }
    }
  }
}

NoiseModel NoiseModel::defaults() {
  NoiseModel n;
  n.channels[Motor::X] = {0.02, 0.02, 0.02, 0.0};
  n.channels[Motor::Y] = {0.02, 0.02, 0.02, 0.0};
  n.channels[Motor::Z] = {0.02, 0.3, 0.02, 0.03};
  n.channels[Motor::E] = {0.02, 0.7, 0.05, 0.0};
  return n;
}

NoiseModel NoiseModel::silent() { return NoiseModel{}; }

NoiseModel NoiseModel::from_config(const KeyValueConfig& config) {
  NoiseModel n = defaults();
  std::set<std::string> known{"seed"};
  for (Motor m : kMotors) {
    auto& c = n.channels[m];
    const std::pair<const char*, double*> fields[] = {{"idle_noise_sd", &c.idle_noise_sd},
                                                      {"phase_jitter_sd", &c.phase_jitter_sd},
                                                      {"amplitude_noise_sd", &c.amplitude_noise_sd},
                                                      {"hold_offset_sd", &c.hold_offset_sd}};
    for (const auto& [name, slot] : fields) {
      const auto key = channel_key(m, name);
      known.insert(key);
      *slot = config.get_double(key, *slot);
    }
  }
  config.reject_unknown(known);
  n.seed = config.get_uint("seed", n.seed);
  n.validate();
  return n;
}

NoiseModel NoiseModel::load(const std::string& path) { return from_config(KeyValueConfig::load(path)); }

std::string NoiseModel::describe() const {
  std::ostringstream out;
  for (Motor m : kMotors) {
    const auto& c = channels[m];
    out << channel_key(m, "idle_noise_sd") << " = " << format_number(c.idle_noise_sd) << "\n";
    out << channel_key(m, "phase_jitter_sd") << " = " << format_number(c.phase_jitter_sd) << "\n";
    out << channel_key(m, "amplitude_noise_sd") << " = " << format_number(c.amplitude_noise_sd) << "\n";
    out << channel_key(m, "hold_offset_sd") << " = " << format_number(c.hold_offset_sd) << "\n";
  }
  out << "seed = " << seed << "\n";
  return out.str();
}

bool nyquist_check(double sample_rate, double max_frequency) { return sample_rate >= 2.0 * max_frequency; }

std::size_t sample_count_for(Nanos duration, double sample_rate) {
  if (duration.count() < 0) throw Error(Errc::invalid_argument, "negative duration");
  if (integral_rate(sample_rate, duration.count())) {
    const std::uint64_t num = static_cast<std::uint64_t>(duration.count()) * static_cast<std::uint64_t>(sample_rate);
    return static_cast<std::size_t>(num / 1'000'000'000u) + 1;
  }
  return static_cast<std::size_t>(std::floor(to_seconds(duration) * sample_rate)) + 1;
}

std::size_t sample_at_or_after(Nanos t, double sample_rate) {
  if (t.count() < 0) throw Error(Errc::invalid_argument, "negative time");
  if (integral_rate(sample_rate, t.count())) {
    const std::uint64_t num = static_cast<std::uint64_t>(t.count()) * static_cast<std::uint64_t>(sample_rate);
    return static_cast<std::size_t>((num + 999'999'999u) / 1'000'000'000u);
  }
  return static_cast<std::size_t>(std::ceil(to_seconds(t) * sample_rate));
}

MotorTrace synthesize_trace(const MotionPlan& plan, Motor motor, const PrinterProfile& profile,
                            const NoiseModel& noise, double sample_rate) {
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
    throw Error(Errc::invalid_argument, "sample rate must be positive");
  }
  profile.validate();
  noise.validate();
  const auto& segments = plan.segments[motor];
  const ChannelNoise& ch = noise.channels[motor];
  const double amplitude = profile.rated_phase_current;

  double fmax = 0.0;
  for (const auto& s : segments) fmax = std::max(fmax, electrical_frequency(s, profile));
  if (!nyquist_check(sample_rate, fmax)) {
    throw Error(Errc::invalid_argument, std::string("motor ") + motor_letter(motor) + ": electrical frequency " +
                                            format_number(fmax) + " Hz is above Nyquist for " +
                                            format_number(sample_rate) + " S/s");
  }

  MotorTrace trace;
  trace.motor = motor;
  trace.sample_rate = sample_rate;
  const std::size_t n = sample_count_for(plan.total_duration, sample_rate);
  trace.samples.assign(n, 0.0f);
  {
    const double trig = to_seconds(plan.trigger_time) * sample_rate;
    trace.trigger_index = std::min<std::size_t>(static_cast<std::size_t>(std::llround(trig)), n - 1);
  }

  double level = amplitude * std::sin(0.0);
  double hold = 0.0;
  bool idle_run = false;
  std::size_t written = 0;

  const auto fill_idle = [&](std::size_t k0, std::size_t k1, std::size_t index) {
    if (!idle_run) {
      idle_run = true;
      hold = 0.0;
      if (ch.hold_offset_sd > 0.0) {
        auto rng = stream(noise.seed, motor, index, kPurposeHold);
        hold = std::normal_distribution<double>(0.0, ch.hold_offset_sd)(rng);
      }
    }
    if (k1 <= k0) return;
    auto rng = stream(noise.seed, motor, index, kPurposeIdle);
    std::normal_distribution<double> idle(0.0, ch.idle_noise_sd > 0.0 ? ch.idle_noise_sd : 1.0);
    for (std::size_t k = k0; k < k1; ++k) {
      const double jitter = ch.idle_noise_sd > 0.0 ? idle(rng) : 0.0;
      trace.samples[k] = static_cast<float>(level + hold + jitter);
    }
  };

  for (std::size_t idx = 0; idx < segments.size(); ++idx) {
    const MotionSegment& s = segments[idx];
    const std::size_t k0 = std::min(sample_at_or_after(s.start, sample_rate), n);
    const std::size_t k1 = std::min(sample_at_or_after(s.end(), sample_rate), n);
    if (!s.active()) {
      fill_idle(k0, k1, idx);
      written = k1;
      continue;
    }
    idle_run = false;
    const double theta0 = electrical_angle(s.start_position, motor, profile);
    const double theta1 = electrical_angle(s.end_position, motor, profile);
    if (k1 <= k0) {
      level = amplitude * std::sin(theta1);
      continue;
    }
    auto rng = stream(noise.seed, motor, idx, kPurposeActive);
    const double wobble =
        ch.phase_jitter_sd > 0.0 ? std::normal_distribution<double>(0.0, ch.phase_jitter_sd)(rng) : 0.0;
    std::normal_distribution<double> amp(0.0, ch.amplitude_noise_sd > 0.0 ? ch.amplitude_noise_sd : 1.0);
    const double start_ns = static_cast<double>(s.start.count());
    const double dur_ns = static_cast<double>(s.duration.count());
    for (std::size_t k = k0; k < k1; ++k) {
      const double t_ns = static_cast<double>(k) * 1e9 / sample_rate;
      const double u = (t_ns - start_ns) / dur_ns;
      const double clean = amplitude * std::sin(theta0 + (theta1 - theta0) * u + wobble * std::sin(std::numbers::pi * u));
      level = clean;
      const double a = ch.amplitude_noise_sd > 0.0 ? amp(rng) : 0.0;
      trace.samples[k] = static_cast<float>(clean + a);
    }
    written = k1;
  }
  // Samples at or past the end of the last segment hold.
  fill_idle(written, n, segments.size());
  return trace;
}

PerMotor<MotorTrace> simulate_print(const GCodeProgram& program, const PrinterProfile& profile,
                                    const NoiseModel& noise, std::uint64_t seed, double sample_rate) {
  const MotionPlan plan = plan_motion(program, profile);
  NoiseModel seeded = noise;
  seeded.seed = seed;
  PerMotor<MotorTrace> out;
  for (Motor m : kMotors) out[m] = synthesize_trace(plan, m, profile, seeded, sample_rate);
  return out;
}

}  // namespace pcsd
