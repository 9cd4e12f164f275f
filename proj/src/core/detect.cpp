#include "pcsd/detect.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pcsd/error.hpp"
#include "pcsd/kvconfig.hpp"
#include "pcsd/traceio.hpp"

namespace pcsd {

std::vector<float> moving_average(std::span<const float> samples, std::size_t window) {
  const std::size_t n = samples.size();
  if (window == 0) throw Error(Errc::invalid_argument, "smoothing window must be >= 1");
  if (window > n) {
    throw Error(Errc::invalid_argument, "smoothing window " + std::to_string(window) + " exceeds trace length " +
                                            std::to_string(n));
  }
  const std::size_t before = (window - 1) / 2;
  const std::size_t after = window - 1 - before;
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + samples[i];
  std::vector<float> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= before ? i - before : 0;
    const std::size_t hi = std::min(n, i + after + 1);
    out[i] = static_cast<float>((prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo));
  }
  return out;
}

MotorTrace smooth(const MotorTrace& trace, std::size_t window) {
  MotorTrace out = trace;
  out.samples = moving_average(trace.samples, window);
  return out;
}

GoldenBaseline GoldenBaseline::truncated(std::size_t n) const {
  if (n > size()) throw Error(Errc::out_of_range, "cannot extend a baseline by truncation");
  GoldenBaseline b = *this;
  b.pointwise_mean.resize(n);
  b.pointwise_sd.resize(n);
  b.reference_trace.samples.resize(n);
  return b;
}

void BaselineAccumulator::add(const MotorTrace& trace) {
  if (trace.samples.empty()) throw Error(Errc::invalid_argument, "golden trace is empty");
  if (count_ == 0) {
    reference_ = trace;
    mean_.assign(trace.size(), 0.0);
    m2_.assign(trace.size(), 0.0);
  } else {
    if (trace.motor != reference_.motor) {
      throw Error(Errc::invalid_argument, std::string("golden traces mix motors ") + motor_letter(reference_.motor) +
                                              " and " + motor_letter(trace.motor));
    }
    if (trace.sample_rate != reference_.sample_rate) {
      throw Error(Errc::invalid_argument, "golden traces have different sample rates");
    }
    if (trace.size() != reference_.size()) {
      throw Error(Errc::invalid_argument, "golden traces have different lengths (" +
                                              std::to_string(reference_.size()) + " vs " +
                                              std::to_string(trace.size()) + ")");
    }
  }
  ++count_;
  const double n = static_cast<double>(count_);
  for (std::size_t i = 0; i < mean_.size(); ++i) {
    const double x = trace.samples[i];
    const double d = x - mean_[i];
    mean_[i] += d / n;
    m2_[i] += d * (x - mean_[i]);
  }
}

GoldenBaseline BaselineAccumulator::finish(std::optional<std::size_t> print_end) const {
  if (count_ < 2) {
    throw Error(Errc::invalid_argument, "a baseline needs at least 2 golden traces, got " + std::to_string(count_));
  }
  GoldenBaseline b;
  b.motor = reference_.motor;
  b.sample_rate = reference_.sample_rate;
  b.reference_trace = reference_;
  b.source_count = count_;
  const std::size_t n = mean_.size();
  b.pointwise_mean.resize(n);
  b.pointwise_sd.resize(n);
  const double dof = static_cast<double>(count_ - 1);
  for (std::size_t i = 0; i < n; ++i) {
    b.pointwise_mean[i] = static_cast<float>(mean_[i]);
    b.pointwise_sd[i] = static_cast<float>(std::sqrt(std::max(0.0, m2_[i] / dof)));
  }
  b.print_end = std::min(print_end.value_or(n), n);
  b.peak_sd = 0.0f;
  for (std::size_t i = 0; i < b.print_end; ++i) b.peak_sd = std::max(b.peak_sd, b.pointwise_sd[i]);
  return b;
}

GoldenBaseline build_baseline(std::span<const MotorTrace> golden, std::optional<std::size_t> print_end) {
  BaselineAccumulator acc;
  for (const auto& t : golden) acc.add(t);
  return acc.finish(print_end);
}

std::vector<float> deviation(const MotorTrace& captured, const GoldenBaseline& baseline) {
  const auto& ref = baseline.reference_trace;
  if (captured.size() != ref.size()) {
    throw Error(Errc::invalid_argument, "capture length " + std::to_string(captured.size()) +
                                            " differs from baseline length " + std::to_string(ref.size()));
  }
  if (captured.sample_rate != baseline.sample_rate) {
    throw Error(Errc::invalid_argument, "capture sample rate differs from baseline");
  }
  std::vector<float> out(captured.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(captured.samples[i] - ref.samples[i]);
  return out;
}

std::vector<float> excess(std::span<const float> dev, const GoldenBaseline& baseline) {
  if (dev.size() != baseline.pointwise_sd.size()) {
    throw Error(Errc::invalid_argument, "deviation length differs from baseline length");
  }
  std::vector<float> out(dev.size());
  for (std::size_t i = 0; i < dev.size(); ++i) out[i] = std::max(0.0f, dev[i] - baseline.pointwise_sd[i]);
  return out;
}

void DetectionConfig::validate() const {
  if (window == 0) throw Error(Errc::config, "detection window must be >= 1");
  if (!(margin >= 0.0) || !std::isfinite(margin)) throw Error(Errc::config, "detection margin must be >= 0");
  if (run_requirement == 0) throw Error(Errc::config, "run requirement must be >= 1");
}

const char* verdict_name(Verdict v) { return v == Verdict::Malicious ? "Malicious" : "Benign"; }

DetectionReport classify(std::span<const float> dev, std::span<const float> exc, const GoldenBaseline& baseline,
                         const DetectionConfig& config) {
  config.validate();
  DetectionReport r;
  r.motor = baseline.motor;
  r.threshold = static_cast<double>(baseline.peak_sd) + config.margin;
  std::size_t run = 0;
  for (std::size_t i = 0; i < dev.size(); ++i) {
    r.peak_deviation = std::max(r.peak_deviation, static_cast<double>(dev[i]));
    if (dev[i] > r.threshold) {
      if (r.exceed_count++ == 0) r.first_exceed_time = static_cast<double>(i) / baseline.sample_rate;
      r.max_run_length = std::max(r.max_run_length, ++run);
    } else {
      run = 0;
    }
  }
  for (float e : exc) r.peak_excess = std::max(r.peak_excess, static_cast<double>(e));
  r.verdict = r.max_run_length >= config.run_requirement ? Verdict::Malicious : Verdict::Benign;
  r.disturbance = r.exceed_count > 0 && r.verdict == Verdict::Benign;
  return r;
}

std::string PrintReport::to_text() const {
  std::ostringstream out;
  for (Motor m : kMotors) {
    const auto& r = motors[m];
    const std::string p = std::string("report.") + motor_letter(m) + ".";
    out << p << "verdict=" << verdict_name(r.verdict) << "\n";
    out << p << "threshold=" << format_number(r.threshold) << "\n";
    out << p << "exceed_count=" << r.exceed_count << "\n";
    out << p << "max_run_length=" << r.max_run_length << "\n";
    out << p << "first_exceed_time="
        << (r.first_exceed_time ? format_number(*r.first_exceed_time) : std::string("none")) << "\n";
    out << p << "peak_excess=" << format_number(r.peak_excess) << "\n";
    out << p << "peak_deviation=" << format_number(r.peak_deviation) << "\n";
    out << p << "disturbance=" << (r.disturbance ? "true" : "false") << "\n";
    if (r.excess_series_path) out << p << "excess_series=" << *r.excess_series_path << "\n";
  }
  out << "report.overall=" << verdict_name(overall) << "\n";
  return out.str();
}

MotorAnalysis analyze_capture(const MotorTrace& capture, const GoldenBaseline& baseline,
                              const DetectionConfig& config) {
  config.validate();
  if (capture.motor != baseline.motor) {
    throw Error(Errc::invalid_argument, std::string("capture is motor ") + motor_letter(capture.motor) +
                                            ", baseline is motor " + motor_letter(baseline.motor));
  }
  if (capture.sample_rate != baseline.sample_rate) {
    throw Error(Errc::invalid_argument, "capture sample rate differs from baseline");
  }
  MotorTrace prepared = smooth(align_to_trigger(capture), config.window);
  const std::size_t n = std::min(prepared.size(), baseline.size());
  prepared.samples.resize(n);
  const GoldenBaseline window = n < baseline.size() ? baseline.truncated(n) : baseline;
  MotorAnalysis a;
  a.deviation = deviation(prepared, window);
  a.excess = excess(a.deviation, window);
  a.report = classify(a.deviation, a.excess, window, config);
  return a;
}

PrintReport detect_print(std::span<const MotorTrace> captures, std::span<const GoldenBaseline> baselines,
                         const DetectionConfig& config) {
  PerMotor<const MotorTrace*> cap{};
  PerMotor<const GoldenBaseline*> base{};
  for (const auto& c : captures) {
    if (cap[c.motor]) throw Error(Errc::invalid_argument, std::string("duplicate capture for motor ") + motor_letter(c.motor));
    cap[c.motor] = &c;
  }
  for (const auto& b : baselines) {
    if (base[b.motor]) throw Error(Errc::invalid_argument, std::string("duplicate baseline for motor ") + motor_letter(b.motor));
    base[b.motor] = &b;
  }
  PrintReport report;
  for (Motor m : kMotors) {
    if (!cap[m]) throw Error(Errc::invalid_argument, std::string("missing capture for motor ") + motor_letter(m));
    if (!base[m]) throw Error(Errc::invalid_argument, std::string("missing baseline for motor ") + motor_letter(m));
    report.motors[m] = analyze_capture(*cap[m], *base[m], config).report;
    if (report.motors[m].verdict == Verdict::Malicious) report.overall = Verdict::Malicious;
  }
  return report;
}

}  // namespace pcsd
