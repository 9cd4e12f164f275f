#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pcsd/attacks.hpp"
#include "pcsd/detect.hpp"
#include "pcsd/gcode.hpp"
#include "pcsd/planner.hpp"
#include "pcsd/tracesim.hpp"

namespace pcsd {

struct BenchmarkOptions {
  std::size_t layers = 10;
  double side = 16.0;          // mm
  double cell = 4.0;           // honeycomb cell width, mm
  double layer_height = 0.2;   // mm
  double perimeter_inset = 0.2;
  double infill_inset = 0.6;
  double print_feed = 1800.0;  // mm/min
  double travel_feed = 2400.0;
  double z_feed = 600.0;
  double extrusion_per_mm = 0.0333;  // filament mm per path mm
};

/// Square cube with a perimeter and a honeycomb infill whose orientation
/// alternates every layer. ";LAYER:n" markers delimit layers; an M107 right
/// before the first layer is the trigger edge.
GCodeProgram benchmark_object(const BenchmarkOptions& options = {});

/// One row of the detectability matrix: the specs are applied in order.
struct AttackCase {
  std::string name;
  std::vector<AttackSpec> specs;
};

struct ExperimentConfig {
  std::string program_path;  // empty: benchmark_object()
  PrinterProfile profile;
  NoiseModel noise = NoiseModel::defaults();
  std::size_t golden_count = 10;
  std::size_t malicious_count = 3;
  std::vector<AttackCase> attacks;
  DetectionConfig detection;
  double visible_factor = 2.0;
  double disturbance_floor = 0.1;  // A, ground-truth disturbance mask
  double sample_rate = kDefaultSampleRate;
  std::uint64_t seed = 1;
  bool emit_traces = false;
  bool emit_series = true;
  std::size_t series_decimation = 250;

  void validate() const;
  static ExperimentConfig defaults();
  static ExperimentConfig from_config(const KeyValueConfig& config,
                                      const std::filesystem::path& base_dir = {});
  static ExperimentConfig load(const std::filesystem::path& path);
  std::string describe() const;
};

/// Attack spec text: "layer,position[,payload | ,pair]" entries joined by ';'.
std::vector<AttackSpec> parse_attack_specs(AttackKind kind, const std::string& text);
std::string format_attack_specs(const std::vector<AttackSpec>& specs);

enum class Cell { Detected, NotDetected, Visible, Irrelevant };
const char* cell_name(Cell c);

struct MatrixCell {
  Cell cell = Cell::NotDetected;
  std::size_t detected = 0;
  std::size_t total = 0;
  double attack_excess = 0.0;  // mean excess over the disturbance mask
  double benign_excess = 0.0;  // same samples, Normal-row captures
  std::size_t disturbed_samples = 0;
};

struct MatrixRow {
  std::string name;
  PerMotor<MatrixCell> cells;
};

struct DetectabilityMatrix {
  std::vector<MatrixRow> rows;

  /// False when any Normal-row cell is Detected.
  bool valid() const;
  const MatrixRow* row(const std::string& name) const;
  std::string to_text() const;
  std::string to_csv() const;
};

/// Everything observed during an experiment, beyond the matrix.
struct RunRecord {
  std::string row;
  std::size_t run = 0;
  std::uint64_t seed = 0;
  PrintReport report;
};

struct ExperimentResult {
  DetectabilityMatrix matrix;
  PerMotor<float> peak_sd;
  std::vector<RunRecord> runs;
  Nanos benign_duration{0};
  std::vector<std::string> notes;
};

/// Simulates golden prints, builds baselines, simulates the Normal row and
/// every attack row, and fills the matrix. Artifacts go under out_dir when
/// it is non-empty.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir = {});

}  // namespace pcsd
