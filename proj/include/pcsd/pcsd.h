/* C interface to the pcsd power side-channel sabotage detector.
 *
 * Every object is an opaque handle released with its _free function.
 * Functions return a pcsd_status; on failure pcsd_last_error() describes the
 * problem for the calling thread. Strings returned by accessors are owned by
 * the handle and stay valid until the next call on it or until it is freed.
 */
#ifndef PCSD_PCSD_H
#define PCSD_PCSD_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(PCSD_BUILDING_LIBRARY)
#    define PCSD_API __declspec(dllexport)
#  else
#    define PCSD_API __declspec(dllimport)
#  endif
#else
#  define PCSD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pcsd_status {
  PCSD_OK = 0,
  PCSD_ERR_INVALID_ARGUMENT = 1,
  PCSD_ERR_PARSE = 2,
  PCSD_ERR_IO = 3,
  PCSD_ERR_FORMAT = 4,
  PCSD_ERR_OUT_OF_RANGE = 5,
  PCSD_ERR_PLAN = 6,
  PCSD_ERR_CONFIG = 7,
  PCSD_ERR_INTERNAL = 99
} pcsd_status;

typedef enum pcsd_motor { PCSD_MOTOR_X = 0, PCSD_MOTOR_Y = 1, PCSD_MOTOR_Z = 2, PCSD_MOTOR_E = 3 } pcsd_motor;
#define PCSD_MOTOR_COUNT 4

typedef enum pcsd_verdict { PCSD_BENIGN = 0, PCSD_MALICIOUS = 1 } pcsd_verdict;

typedef enum pcsd_attack_kind {
  PCSD_ATTACK_INSERT = 0,
  PCSD_ATTACK_DELETE = 1,
  PCSD_ATTACK_REORDER = 2,
  PCSD_ATTACK_VOID = 3
} pcsd_attack_kind;

typedef enum pcsd_cell {
  PCSD_CELL_DETECTED = 0,
  PCSD_CELL_NOT_DETECTED = 1,
  PCSD_CELL_VISIBLE = 2,
  PCSD_CELL_IRRELEVANT = 3
} pcsd_cell;

typedef struct pcsd_program pcsd_program;
typedef struct pcsd_profile pcsd_profile;
typedef struct pcsd_noise pcsd_noise;
typedef struct pcsd_trace pcsd_trace;
typedef struct pcsd_baseline pcsd_baseline;
typedef struct pcsd_experiment pcsd_experiment;
typedef struct pcsd_matrix pcsd_matrix;

/* Addresses a command by layer and offset within the layer. payload is a
 * G-code line (insert only); pair_offset is used by reorder only. */
typedef struct pcsd_attack {
  pcsd_attack_kind kind;
  size_t layer;
  size_t position;
  const char* payload;
  size_t pair_offset;
} pcsd_attack;

typedef struct pcsd_detection_config {
  size_t window;          /* moving-average samples */
  double margin;          /* amps above the baseline peak sd */
  size_t run_requirement; /* contiguous samples above threshold */
} pcsd_detection_config;

typedef struct pcsd_report {
  pcsd_motor motor;
  pcsd_verdict verdict;
  double threshold;
  size_t exceed_count;
  size_t max_run_length;
  int has_first_exceed;
  double first_exceed_time; /* seconds after the trigger */
  double peak_excess;
  double peak_deviation;
  int disturbance;
} pcsd_report;

PCSD_API const char* pcsd_version(void);
PCSD_API const char* pcsd_last_error(void);
PCSD_API const char* pcsd_status_name(pcsd_status status);
PCSD_API const char* pcsd_motor_name(pcsd_motor motor);

/* G-code programs */
PCSD_API pcsd_status pcsd_program_load(const char* path, pcsd_program** out);
PCSD_API pcsd_status pcsd_program_parse(const char* text, pcsd_program** out);
PCSD_API pcsd_status pcsd_program_benchmark(pcsd_program** out);
PCSD_API pcsd_status pcsd_program_save(const pcsd_program* program, const char* path);
PCSD_API const char* pcsd_program_text(pcsd_program* program);
PCSD_API size_t pcsd_program_command_count(const pcsd_program* program);
PCSD_API size_t pcsd_program_layer_count(const pcsd_program* program);
PCSD_API pcsd_status pcsd_program_attack(const pcsd_program* program, const pcsd_attack* attack,
                                         pcsd_program** out);
PCSD_API void pcsd_program_free(pcsd_program* program);

/* Printer profile and noise model */
PCSD_API pcsd_status pcsd_profile_default(pcsd_profile** out);
PCSD_API pcsd_status pcsd_profile_load(const char* path, pcsd_profile** out);
PCSD_API const char* pcsd_profile_describe(pcsd_profile* profile);
PCSD_API void pcsd_profile_free(pcsd_profile* profile);

PCSD_API pcsd_status pcsd_noise_default(pcsd_noise** out);
PCSD_API pcsd_status pcsd_noise_load(const char* path, pcsd_noise** out);
PCSD_API const char* pcsd_noise_describe(pcsd_noise* noise);
PCSD_API void pcsd_noise_free(pcsd_noise* noise);

/* Planning and simulation. profile and noise may be NULL for defaults;
 * sample_rate <= 0 selects 25 kS/s. */
PCSD_API pcsd_status pcsd_plan_duration(const pcsd_program* program, const pcsd_profile* profile,
                                        int64_t* duration_ns);
PCSD_API pcsd_status pcsd_simulate(const pcsd_program* program, const pcsd_profile* profile,
                                   const pcsd_noise* noise, uint64_t seed, double sample_rate,
                                   pcsd_trace* out[PCSD_MOTOR_COUNT]);

/* Traces */
PCSD_API pcsd_status pcsd_trace_load(const char* path, pcsd_trace** out);
PCSD_API pcsd_status pcsd_trace_save(const pcsd_trace* trace, const char* path);
PCSD_API pcsd_status pcsd_trace_import_csv(const char* path, double sample_rate, size_t trigger_index,
                                           pcsd_motor motor, pcsd_trace** out);
PCSD_API pcsd_status pcsd_trace_export_csv(const pcsd_trace* trace, const char* path);
PCSD_API pcsd_motor pcsd_trace_motor(const pcsd_trace* trace);
PCSD_API double pcsd_trace_sample_rate(const pcsd_trace* trace);
PCSD_API size_t pcsd_trace_length(const pcsd_trace* trace);
PCSD_API size_t pcsd_trace_trigger_index(const pcsd_trace* trace);
PCSD_API const float* pcsd_trace_samples(const pcsd_trace* trace);
PCSD_API void pcsd_trace_free(pcsd_trace* trace);

/* Golden baselines. Raw captures are aligned, smoothed with `window` and
 * cut to their common length; the first capture becomes the reference. */
PCSD_API pcsd_status pcsd_baseline_build(const pcsd_trace* const* captures, size_t count, size_t window,
                                         pcsd_baseline** out);
PCSD_API pcsd_status pcsd_baseline_load(const char* path, pcsd_baseline** out);
PCSD_API pcsd_status pcsd_baseline_save(const pcsd_baseline* baseline, const char* path);
PCSD_API pcsd_motor pcsd_baseline_motor(const pcsd_baseline* baseline);
PCSD_API size_t pcsd_baseline_source_count(const pcsd_baseline* baseline);
PCSD_API size_t pcsd_baseline_length(const pcsd_baseline* baseline);
PCSD_API double pcsd_baseline_peak_sd(const pcsd_baseline* baseline);
PCSD_API void pcsd_baseline_free(pcsd_baseline* baseline);

/* Detection */
PCSD_API void pcsd_detection_config_default(pcsd_detection_config* config);
/* Captures and baselines cover each motor once, in any order. reports is
 * filled in motor order. With series_dir set, excess series CSVs are written
 * there (decimation >= 1). text, when not NULL, receives the report lines;
 * it stays valid until the next call on the same thread. */
PCSD_API pcsd_status pcsd_detect_print(const pcsd_trace* const* captures, size_t capture_count,
                                       const pcsd_baseline* const* baselines, size_t baseline_count,
                                       const pcsd_detection_config* config, const char* series_dir,
                                       size_t series_decimation, pcsd_report reports[PCSD_MOTOR_COUNT],
                                       pcsd_verdict* overall, const char** text);

/* Experiments */
PCSD_API pcsd_status pcsd_experiment_default(pcsd_experiment** out);
PCSD_API pcsd_status pcsd_experiment_load(const char* path, pcsd_experiment** out);
PCSD_API pcsd_status pcsd_experiment_set_seed(pcsd_experiment* experiment, uint64_t seed);
PCSD_API pcsd_status pcsd_experiment_set_profile(pcsd_experiment* experiment, const pcsd_profile* profile);
PCSD_API const char* pcsd_experiment_describe(pcsd_experiment* experiment);
PCSD_API pcsd_status pcsd_experiment_run(const pcsd_experiment* experiment, const char* out_dir,
                                         pcsd_matrix** out);
PCSD_API void pcsd_experiment_free(pcsd_experiment* experiment);

PCSD_API size_t pcsd_matrix_row_count(const pcsd_matrix* matrix);
PCSD_API const char* pcsd_matrix_row_name(const pcsd_matrix* matrix, size_t row);
PCSD_API pcsd_status pcsd_matrix_cell(const pcsd_matrix* matrix, size_t row, pcsd_motor motor, pcsd_cell* cell,
                                      size_t* detected, size_t* total);
PCSD_API int pcsd_matrix_valid(const pcsd_matrix* matrix);
PCSD_API const char* pcsd_matrix_text(pcsd_matrix* matrix);
PCSD_API const char* pcsd_matrix_csv(pcsd_matrix* matrix);
PCSD_API const char* pcsd_matrix_notes(pcsd_matrix* matrix);
PCSD_API void pcsd_matrix_free(pcsd_matrix* matrix);

#ifdef __cplusplus
}
#endif

#endif
