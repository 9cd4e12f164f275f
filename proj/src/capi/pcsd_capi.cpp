#include "pcsd/pcsd.h"

#include <exception>
#include <filesystem>
#include <new>
#include <string>
#include <vector>

#include "pcsd/attacks.hpp"
#include "pcsd/detect.hpp"
#include "pcsd/error.hpp"
#include "pcsd/gcode.hpp"
#include "pcsd/harness.hpp"
#include "pcsd/planner.hpp"
#include "pcsd/traceio.hpp"
#include "pcsd/tracesim.hpp"

struct pcsd_program {
  pcsd::GCodeProgram program;
  std::string text;
};
struct pcsd_profile {
  pcsd::PrinterProfile profile;
  std::string text;
};
struct pcsd_noise {
  pcsd::NoiseModel noise;
  std::string text;
};
struct pcsd_trace {
  pcsd::MotorTrace trace;
};
struct pcsd_baseline {
  pcsd::GoldenBaseline baseline;
};
struct pcsd_experiment {
  pcsd::ExperimentConfig config;
  std::string text;
};
struct pcsd_matrix {
  pcsd::ExperimentResult result;
  std::string text;
  std::string csv;
  std::string notes;
};

namespace {

thread_local std::string g_last_error;
thread_local std::string g_report_text;

pcsd_status fail(pcsd_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <class F>
pcsd_status guard(F&& body) {
  try {
    body();
    g_last_error.clear();
    return PCSD_OK;
  } catch (const pcsd::Error& e) {
    return fail(static_cast<pcsd_status>(static_cast<int>(e.code())), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(PCSD_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(PCSD_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(PCSD_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(PCSD_ERR_INTERNAL, "unknown error");
  }
}

void require(const void* p, const char* what) {
  if (!p) throw pcsd::Error(pcsd::Errc::invalid_argument, std::string(what) + " is NULL");
}

pcsd::Motor to_motor(pcsd_motor m) {
  if (m < PCSD_MOTOR_X || m > PCSD_MOTOR_E) throw pcsd::Error(pcsd::Errc::invalid_argument, "invalid motor");
  return static_cast<pcsd::Motor>(m);
}

pcsd::DetectionConfig to_config(const pcsd_detection_config* c) {
  pcsd::DetectionConfig out;
  if (c) {
    out.window = c->window;
    out.margin = c->margin;
    out.run_requirement = c->run_requirement;
  }
  out.validate();
  return out;
}

pcsd_report to_report(const pcsd::DetectionReport& r) {
  pcsd_report out{};
  out.motor = static_cast<pcsd_motor>(r.motor);
  out.verdict = r.verdict == pcsd::Verdict::Malicious ? PCSD_MALICIOUS : PCSD_BENIGN;
  out.threshold = r.threshold;
  out.exceed_count = r.exceed_count;
  out.max_run_length = r.max_run_length;
  out.has_first_exceed = r.first_exceed_time.has_value();
  out.first_exceed_time = r.first_exceed_time.value_or(0.0);
  out.peak_excess = r.peak_excess;
  out.peak_deviation = r.peak_deviation;
  out.disturbance = r.disturbance;
  return out;
}

}  // namespace

extern "C" {

const char* pcsd_version(void) { return "1.0.0"; }

const char* pcsd_last_error(void) { return g_last_error.c_str(); }

const char* pcsd_status_name(pcsd_status status) {
  switch (status) {
    case PCSD_OK: return "ok";
    case PCSD_ERR_INTERNAL: return "internal error";
    default:
      if (status >= PCSD_ERR_INVALID_ARGUMENT && status <= PCSD_ERR_CONFIG) {
        return pcsd::errc_name(static_cast<pcsd::Errc>(status));
      }
      return "unknown status";
  }
}

const char* pcsd_motor_name(pcsd_motor motor) {
  switch (motor) {
    case PCSD_MOTOR_X: return "X";
    case PCSD_MOTOR_Y: return "Y";
    case PCSD_MOTOR_Z: return "Z";
    case PCSD_MOTOR_E: return "E";
  }
  return "?";
}

pcsd_status pcsd_program_load(const char* path, pcsd_program** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new pcsd_program{pcsd::load_gcode(path), {}};
  });
}

pcsd_status pcsd_program_parse(const char* text, pcsd_program** out) {
  return guard([&] {
    require(text, "text");
    require(out, "out");
    *out = new pcsd_program{pcsd::parse_gcode(text), {}};
  });
}

pcsd_status pcsd_program_benchmark(pcsd_program** out) {
  return guard([&] {
    require(out, "out");
    *out = new pcsd_program{pcsd::benchmark_object(), {}};
  });
}

pcsd_status pcsd_program_save(const pcsd_program* program, const char* path) {
  return guard([&] {
    require(program, "program");
    require(path, "path");
    pcsd::save_gcode(program->program, path);
  });
}

const char* pcsd_program_text(pcsd_program* program) {
  if (!program) return "";
  program->text = pcsd::serialize(program->program);
  return program->text.c_str();
}

size_t pcsd_program_command_count(const pcsd_program* program) { return program ? program->program.size() : 0; }

size_t pcsd_program_layer_count(const pcsd_program* program) { return program ? program->program.layer_count() : 0; }

pcsd_status pcsd_program_attack(const pcsd_program* program, const pcsd_attack* attack, pcsd_program** out) {
  return guard([&] {
    require(program, "program");
    require(attack, "attack");
    require(out, "out");
    if (attack->kind < PCSD_ATTACK_INSERT || attack->kind > PCSD_ATTACK_VOID) {
      throw pcsd::Error(pcsd::Errc::invalid_argument, "invalid attack kind");
    }
    pcsd::AttackSpec spec;
    spec.kind = static_cast<pcsd::AttackKind>(attack->kind);
    spec.layer = attack->layer;
    spec.position = attack->position;
    if (spec.kind == pcsd::AttackKind::Insert) {
      require(attack->payload, "insert payload");
      spec.payload = pcsd::parse_line(attack->payload, 1);
    }
    if (spec.kind == pcsd::AttackKind::Reorder) spec.pair_offset = attack->pair_offset;
    *out = new pcsd_program{pcsd::inject(program->program, spec), {}};
  });
}

void pcsd_program_free(pcsd_program* program) { delete program; }

pcsd_status pcsd_profile_default(pcsd_profile** out) {
  return guard([&] {
    require(out, "out");
    *out = new pcsd_profile{};
  });
}

pcsd_status pcsd_profile_load(const char* path, pcsd_profile** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new pcsd_profile{pcsd::PrinterProfile::load(path), {}};
  });
}

const char* pcsd_profile_describe(pcsd_profile* profile) {
  if (!profile) return "";
  profile->text = profile->profile.describe();
  return profile->text.c_str();
}

void pcsd_profile_free(pcsd_profile* profile) { delete profile; }

pcsd_status pcsd_noise_default(pcsd_noise** out) {
  return guard([&] {
    require(out, "out");
    *out = new pcsd_noise{pcsd::NoiseModel::defaults(), {}};
  });
}

pcsd_status pcsd_noise_load(const char* path, pcsd_noise** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new pcsd_noise{pcsd::NoiseModel::load(path), {}};
  });
}

const char* pcsd_noise_describe(pcsd_noise* noise) {
  if (!noise) return "";
  noise->text = noise->noise.describe();
  return noise->text.c_str();
}

void pcsd_noise_free(pcsd_noise* noise) { delete noise; }

pcsd_status pcsd_plan_duration(const pcsd_program* program, const pcsd_profile* profile, int64_t* duration_ns) {
  return guard([&] {
    require(program, "program");
    require(duration_ns, "duration_ns");
    const auto plan = pcsd::plan_motion(program->program, profile ? profile->profile : pcsd::PrinterProfile{});
    *duration_ns = pcsd::plan_duration(plan).count();
  });
}

pcsd_status pcsd_simulate(const pcsd_program* program, const pcsd_profile* profile, const pcsd_noise* noise,
                          uint64_t seed, double sample_rate, pcsd_trace* out[PCSD_MOTOR_COUNT]) {
  return guard([&] {
    require(program, "program");
    require(out, "out");
    const double fs = sample_rate > 0.0 ? sample_rate : pcsd::kDefaultSampleRate;
    auto traces = pcsd::simulate_print(program->program, profile ? profile->profile : pcsd::PrinterProfile{},
                                       noise ? noise->noise : pcsd::NoiseModel::defaults(), seed, fs);
    for (pcsd::Motor m : pcsd::kMotors) out[pcsd::index_of(m)] = new pcsd_trace{std::move(traces[m])};
  });
}

pcsd_status pcsd_trace_load(const char* path, pcsd_trace** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new pcsd_trace{pcsd::load_trace(path)};
  });
}

pcsd_status pcsd_trace_save(const pcsd_trace* trace, const char* path) {
  return guard([&] {
    require(trace, "trace");
    require(path, "path");
    pcsd::save_trace(trace->trace, path);
  });
}

pcsd_status pcsd_trace_import_csv(const char* path, double sample_rate, size_t trigger_index, pcsd_motor motor,
                                  pcsd_trace** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new pcsd_trace{pcsd::import_csv(path, sample_rate, trigger_index, to_motor(motor))};
  });
}

pcsd_status pcsd_trace_export_csv(const pcsd_trace* trace, const char* path) {
  return guard([&] {
    require(trace, "trace");
    require(path, "path");
    pcsd::export_csv(trace->trace, path);
  });
}

pcsd_motor pcsd_trace_motor(const pcsd_trace* trace) {
  return trace ? static_cast<pcsd_motor>(trace->trace.motor) : PCSD_MOTOR_X;
}
double pcsd_trace_sample_rate(const pcsd_trace* trace) { return trace ? trace->trace.sample_rate : 0.0; }
size_t pcsd_trace_length(const pcsd_trace* trace) { return trace ? trace->trace.size() : 0; }
size_t pcsd_trace_trigger_index(const pcsd_trace* trace) { return trace ? trace->trace.trigger_index : 0; }
const float* pcsd_trace_samples(const pcsd_trace* trace) { return trace ? trace->trace.samples.data() : nullptr; }
void pcsd_trace_free(pcsd_trace* trace) { delete trace; }

pcsd_status pcsd_baseline_build(const pcsd_trace* const* captures, size_t count, size_t window, pcsd_baseline** out) {
  return guard([&] {
    require(out, "out");
    if (count > 0) require(captures, "captures");
    std::vector<pcsd::MotorTrace> prepared;
    prepared.reserve(count);
    for (size_t i = 0; i < count; ++i) {
      require(captures[i], "capture");
      prepared.push_back(pcsd::align_to_trigger(captures[i]->trace));
    }
    prepared = pcsd::common_window(prepared);
    for (auto& t : prepared) t = pcsd::smooth(t, window);
    *out = new pcsd_baseline{pcsd::build_baseline(prepared)};
  });
}

pcsd_status pcsd_baseline_load(const char* path, pcsd_baseline** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new pcsd_baseline{pcsd::load_baseline(path)};
  });
}

pcsd_status pcsd_baseline_save(const pcsd_baseline* baseline, const char* path) {
  return guard([&] {
    require(baseline, "baseline");
    require(path, "path");
    pcsd::save_baseline(baseline->baseline, path);
  });
}

pcsd_motor pcsd_baseline_motor(const pcsd_baseline* baseline) {
  return baseline ? static_cast<pcsd_motor>(baseline->baseline.motor) : PCSD_MOTOR_X;
}
size_t pcsd_baseline_source_count(const pcsd_baseline* baseline) {
  return baseline ? baseline->baseline.source_count : 0;
}
size_t pcsd_baseline_length(const pcsd_baseline* baseline) { return baseline ? baseline->baseline.size() : 0; }
double pcsd_baseline_peak_sd(const pcsd_baseline* baseline) { return baseline ? baseline->baseline.peak_sd : 0.0; }
void pcsd_baseline_free(pcsd_baseline* baseline) { delete baseline; }

void pcsd_detection_config_default(pcsd_detection_config* config) {
  if (!config) return;
  const pcsd::DetectionConfig d;
  config->window = d.window;
  config->margin = d.margin;
  config->run_requirement = d.run_requirement;
}

pcsd_status pcsd_detect_print(const pcsd_trace* const* captures, size_t capture_count,
                              const pcsd_baseline* const* baselines, size_t baseline_count,
                              const pcsd_detection_config* config, const char* series_dir, size_t series_decimation,
                              pcsd_report reports[PCSD_MOTOR_COUNT], pcsd_verdict* overall, const char** text) {
  return guard([&] {
    require(reports, "reports");
    if (capture_count > 0) require(captures, "captures");
    if (baseline_count > 0) require(baselines, "baselines");
    const auto cfg = to_config(config);
    pcsd::PerMotor<const pcsd::MotorTrace*> cap{};
    pcsd::PerMotor<const pcsd::GoldenBaseline*> base{};
    for (size_t i = 0; i < capture_count; ++i) {
      require(captures[i], "capture");
      const auto m = captures[i]->trace.motor;
      if (cap[m]) throw pcsd::Error(pcsd::Errc::invalid_argument, std::string("duplicate capture for motor ") + pcsd::motor_letter(m));
      cap[m] = &captures[i]->trace;
    }
    for (size_t i = 0; i < baseline_count; ++i) {
      require(baselines[i], "baseline");
      const auto m = baselines[i]->baseline.motor;
      if (base[m]) throw pcsd::Error(pcsd::Errc::invalid_argument, std::string("duplicate baseline for motor ") + pcsd::motor_letter(m));
      base[m] = &baselines[i]->baseline;
    }
    pcsd::PrintReport report;
    for (pcsd::Motor m : pcsd::kMotors) {
      if (!cap[m]) throw pcsd::Error(pcsd::Errc::invalid_argument, std::string("missing capture for motor ") + pcsd::motor_letter(m));
      if (!base[m]) throw pcsd::Error(pcsd::Errc::invalid_argument, std::string("missing baseline for motor ") + pcsd::motor_letter(m));
    }
    if (series_dir) std::filesystem::create_directories(series_dir);
    for (pcsd::Motor m : pcsd::kMotors) {
      auto a = pcsd::analyze_capture(*cap[m], *base[m], cfg);
      if (series_dir) {
        const auto path = std::filesystem::path(series_dir) / (std::string("excess_") + pcsd::motor_letter(m) + ".csv");
        pcsd::export_series_csv(a.excess, cap[m]->sample_rate, path, series_decimation == 0 ? 1 : series_decimation);
        a.report.excess_series_path = path.string();
      }
      report.motors[m] = a.report;
      if (a.report.verdict == pcsd::Verdict::Malicious) report.overall = pcsd::Verdict::Malicious;
      reports[pcsd::index_of(m)] = to_report(a.report);
    }
    if (overall) *overall = report.overall == pcsd::Verdict::Malicious ? PCSD_MALICIOUS : PCSD_BENIGN;
    if (text) {
      g_report_text = report.to_text();
      *text = g_report_text.c_str();
    }
  });
}

pcsd_status pcsd_experiment_default(pcsd_experiment** out) {
  return guard([&] {
    require(out, "out");
    *out = new pcsd_experiment{pcsd::ExperimentConfig::defaults(), {}};
  });
}

pcsd_status pcsd_experiment_load(const char* path, pcsd_experiment** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new pcsd_experiment{pcsd::ExperimentConfig::load(path), {}};
  });
}

pcsd_status pcsd_experiment_set_seed(pcsd_experiment* experiment, uint64_t seed) {
  return guard([&] {
    require(experiment, "experiment");
    experiment->config.seed = seed;
  });
}

pcsd_status pcsd_experiment_set_profile(pcsd_experiment* experiment, const pcsd_profile* profile) {
  return guard([&] {
    require(experiment, "experiment");
    require(profile, "profile");
    experiment->config.profile = profile->profile;
  });
}

const char* pcsd_experiment_describe(pcsd_experiment* experiment) {
  if (!experiment) return "";
  experiment->text = experiment->config.describe();
  return experiment->text.c_str();
}

pcsd_status pcsd_experiment_run(const pcsd_experiment* experiment, const char* out_dir, pcsd_matrix** out) {
  return guard([&] {
    require(experiment, "experiment");
    require(out, "out");
    auto* m = new pcsd_matrix{};
    try {
      m->result = pcsd::run_experiment(experiment->config, out_dir ? std::filesystem::path(out_dir) : std::filesystem::path{});
    } catch (...) {
      delete m;
      throw;
    }
    *out = m;
  });
}

void pcsd_experiment_free(pcsd_experiment* experiment) { delete experiment; }

size_t pcsd_matrix_row_count(const pcsd_matrix* matrix) { return matrix ? matrix->result.matrix.rows.size() : 0; }

const char* pcsd_matrix_row_name(const pcsd_matrix* matrix, size_t row) {
  if (!matrix || row >= matrix->result.matrix.rows.size()) return nullptr;
  return matrix->result.matrix.rows[row].name.c_str();
}

pcsd_status pcsd_matrix_cell(const pcsd_matrix* matrix, size_t row, pcsd_motor motor, pcsd_cell* cell, size_t* detected,
                             size_t* total) {
  return guard([&] {
    require(matrix, "matrix");
    if (row >= matrix->result.matrix.rows.size()) throw pcsd::Error(pcsd::Errc::out_of_range, "matrix row out of range");
    const auto& c = matrix->result.matrix.rows[row].cells[to_motor(motor)];
    if (cell) *cell = static_cast<pcsd_cell>(c.cell);
    if (detected) *detected = c.detected;
    if (total) *total = c.total;
  });
}

int pcsd_matrix_valid(const pcsd_matrix* matrix) { return matrix && matrix->result.matrix.valid() ? 1 : 0; }

const char* pcsd_matrix_text(pcsd_matrix* matrix) {
  if (!matrix) return "";
  matrix->text = matrix->result.matrix.to_text();
  return matrix->text.c_str();
}

const char* pcsd_matrix_csv(pcsd_matrix* matrix) {
  if (!matrix) return "";
  matrix->csv = matrix->result.matrix.to_csv();
  return matrix->csv.c_str();
}

const char* pcsd_matrix_notes(pcsd_matrix* matrix) {
  if (!matrix) return "";
  matrix->notes.clear();
  for (const auto& n : matrix->result.notes) matrix->notes += n + "\n";
  return matrix->notes.c_str();
}

void pcsd_matrix_free(pcsd_matrix* matrix) { delete matrix; }

}  // extern "C"
