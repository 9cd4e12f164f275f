#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "pcsd/detect.hpp"
#include "pcsd/tracesim.hpp"

namespace pcsd {

// Capture file, little-endian, version 1:
//
//   offset size  field
//   0      4     magic "PTRC"
//   4      2     version (1)
//   6      2     header size in bytes (40, or 64 with the baseline extension)
//   8      1     motor (0 X, 1 Y, 2 Z, 3 E)
//   9      1     units (1 = amps)
//   10     2     flags (bit 0: baseline extension)
//   12     4     reserved, zero
//   16     8     sample rate, float64, samples/s
//   24     8     trigger index, uint64
//   32     8     sample count, uint64
//   -- baseline extension --
//   40     4     source count, uint32
//   44     4     reserved, zero
//   48     8     print end index, uint64
//   56     8     peak standard deviation, float64, A
//
// Body: sample_count float32 samples. A baseline file stores the reference
// trace as the body, followed by sample_count float32 means and then
// sample_count float32 standard deviations.
inline constexpr char kCaptureMagic[4] = {'P', 'T', 'R', 'C'};
inline constexpr std::uint16_t kCaptureVersion = 1;
inline constexpr std::uint16_t kCaptureHeaderSize = 40;
inline constexpr std::uint16_t kBaselineHeaderSize = 64;

void save_trace(const MotorTrace& trace, const std::filesystem::path& path);
/// Loads a capture file. A baseline file loads as its reference trace.
MotorTrace load_trace(const std::filesystem::path& path);

void save_baseline(const GoldenBaseline& baseline, const std::filesystem::path& path);
GoldenBaseline load_baseline(const std::filesystem::path& path);
/// True when the file carries the baseline extension.
bool is_baseline_file(const std::filesystem::path& path);

/// One amplitude column, or (time, amplitude). A non-numeric first row is a
/// header. With a time column the spacing must match 1/sample_rate within
/// 1 ppm of elapsed time; sample_rate <= 0 infers it from the first step.
MotorTrace import_csv(const std::filesystem::path& path, double sample_rate, std::size_t trigger_index,
                      Motor motor = Motor::X);
/// time_s,amps with full float precision.
void export_csv(const MotorTrace& trace, const std::filesystem::path& path);
/// time_s,amps; with decimation > 1 each row is the maximum of a block.
void export_series_csv(std::span<const float> series, double sample_rate,
                       const std::filesystem::path& path, std::size_t decimation = 1);

MotorTrace align_to_trigger(const MotorTrace& trace);
std::vector<MotorTrace> common_window(std::span<const MotorTrace> traces);

}  // namespace pcsd
