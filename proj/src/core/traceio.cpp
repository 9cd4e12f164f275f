#include "pcsd/traceio.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "pcsd/error.hpp"
#include "pcsd/kvconfig.hpp"

namespace pcsd {
namespace {

constexpr std::uint16_t kFlagBaseline = 1;
constexpr std::uint8_t kUnitsAmps = 1;

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f32(float v) { le(std::bit_cast<std::uint32_t>(v), 4); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  void raw(const char* p, std::size_t n) { bytes_.append(p, n); }
  void floats(const std::vector<float>& v) {
    if constexpr (std::endian::native == std::endian::little) {
      raw(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(float));
    } else {
      for (float f : v) f32(f);
    }
  }
  const std::string& bytes() const { return bytes_; }

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string bytes_;
};

class Reader {
 public:
  Reader(const std::string& data, const std::filesystem::path& path) : data_(data), path_(path) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(le(4)); }
  std::uint64_t u64() { return le(8); }
  double f64() { return std::bit_cast<double>(le(8)); }
  std::vector<float> floats(std::size_t n) {
    if ((data_.size() - pos_) / sizeof(float) < n) fail("unexpected end of samples");
    std::vector<float> out(n);
    if constexpr (std::endian::native == std::endian::little) {
      std::memcpy(out.data(), data_.data() + pos_, n * sizeof(float));
      pos_ += n * sizeof(float);
    } else {
      for (auto& f : out) f = std::bit_cast<float>(static_cast<std::uint32_t>(le(4)));
    }
    return out;
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(Errc::format, path_.string() + ": " + what);
  }

 private:
  std::uint64_t le(int n) {
    if (data_.size() - pos_ < static_cast<std::size_t>(n)) fail("truncated header");
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  const std::string& data_;
  std::filesystem::path path_;
  std::size_t pos_ = 0;
};

struct Header {
  Motor motor = Motor::X;
  double sample_rate = 0.0;
  std::uint64_t trigger_index = 0;
  std::uint64_t sample_count = 0;
  bool baseline = false;
  std::uint32_t source_count = 0;
  std::uint64_t print_end = 0;
  double peak_sd = 0.0;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::io, "write failed for '" + path.string() + "'");
}

void write_header(Writer& w, const Header& h) {
  w.raw(kCaptureMagic, 4);
  w.u16(kCaptureVersion);
  w.u16(h.baseline ? kBaselineHeaderSize : kCaptureHeaderSize);
  w.u8(static_cast<std::uint8_t>(h.motor));
  w.u8(kUnitsAmps);
  w.u16(h.baseline ? kFlagBaseline : 0);
  w.u32(0);
  w.f64(h.sample_rate);
  w.u64(h.trigger_index);
  w.u64(h.sample_count);
  if (h.baseline) {
    w.u32(h.source_count);
    w.u32(0);
    w.u64(h.print_end);
    w.f64(h.peak_sd);
  }
}

Header read_header(Reader& r) {
  Header h;
  char magic[4];
  for (char& c : magic) c = static_cast<char>(r.u8());
  if (std::memcmp(magic, kCaptureMagic, 4) != 0) r.fail("bad magic (not a PTRC capture file)");
  const auto version = r.u16();
  if (version != kCaptureVersion) r.fail("unsupported version " + std::to_string(version));
  const auto header_size = r.u16();
  const auto motor = r.u8();
  if (motor > 3) r.fail("invalid motor id " + std::to_string(motor));
  h.motor = static_cast<Motor>(motor);
  if (r.u8() != kUnitsAmps) r.fail("unsupported units");
  const auto flags = r.u16();
  if (flags & ~kFlagBaseline) r.fail("unknown header flags");
  h.baseline = (flags & kFlagBaseline) != 0;
  if (header_size != (h.baseline ? kBaselineHeaderSize : kCaptureHeaderSize)) {
    r.fail("header size " + std::to_string(header_size) + " does not match flags");
  }
  r.u32();
  h.sample_rate = r.f64();
  if (!(h.sample_rate > 0.0) || !std::isfinite(h.sample_rate)) r.fail("invalid sample rate");
  h.trigger_index = r.u64();
  h.sample_count = r.u64();
  if (h.sample_count == 0) r.fail("empty trace");
  if (h.trigger_index >= h.sample_count) r.fail("trigger index beyond end of samples");
  if (h.baseline) {
    h.source_count = r.u32();
    r.u32();
    h.print_end = r.u64();
    h.peak_sd = r.f64();
    if (h.source_count < 2) r.fail("baseline source count below 2");
    if (h.print_end > h.sample_count) r.fail("print end beyond end of samples");
  }
  return h;
}

void check_trace(const MotorTrace& t) {
  if (t.samples.empty()) throw Error(Errc::invalid_argument, "cannot save an empty trace");
  if (t.trigger_index >= t.size()) throw Error(Errc::invalid_argument, "trigger index beyond end of samples");
  if (!(t.sample_rate > 0.0)) throw Error(Errc::invalid_argument, "sample rate must be positive");
}

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\"";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

bool to_double(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

void save_trace(const MotorTrace& trace, const std::filesystem::path& path) {
  check_trace(trace);
  Header h;
  h.motor = trace.motor;
  h.sample_rate = trace.sample_rate;
  h.trigger_index = trace.trigger_index;
  h.sample_count = trace.size();
  Writer w;
  write_header(w, h);
  w.floats(trace.samples);
  write_file(path, w.bytes());
}

MotorTrace load_trace(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  Reader r(data, path);
  const Header h = read_header(r);
  MotorTrace t;
  t.motor = h.motor;
  t.sample_rate = h.sample_rate;
  t.trigger_index = h.trigger_index;
  t.samples = r.floats(h.sample_count);
  if (h.baseline) {
    r.floats(h.sample_count);
    r.floats(h.sample_count);
  }
  if (r.remaining() != 0) r.fail("trailing bytes after samples");
  return t;
}

void save_baseline(const GoldenBaseline& b, const std::filesystem::path& path) {
  check_trace(b.reference_trace);
  if (b.pointwise_mean.size() != b.reference_trace.size() || b.pointwise_sd.size() != b.reference_trace.size()) {
    throw Error(Errc::invalid_argument, "baseline arrays have inconsistent lengths");
  }
  if (b.source_count < 2 || b.source_count > 0xffffffffu) {
    throw Error(Errc::invalid_argument, "baseline source count out of range");
  }
  Header h;
  h.motor = b.motor;
  h.sample_rate = b.sample_rate;
  h.trigger_index = b.reference_trace.trigger_index;
  h.sample_count = b.reference_trace.size();
  h.baseline = true;
  h.source_count = static_cast<std::uint32_t>(b.source_count);
  h.print_end = b.print_end;
  h.peak_sd = b.peak_sd;
  Writer w;
  write_header(w, h);
  w.floats(b.reference_trace.samples);
  w.floats(b.pointwise_mean);
  w.floats(b.pointwise_sd);
  write_file(path, w.bytes());
}

GoldenBaseline load_baseline(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  Reader r(data, path);
  const Header h = read_header(r);
  if (!h.baseline) r.fail("not a baseline file (plain capture)");
  GoldenBaseline b;
  b.motor = h.motor;
  b.sample_rate = h.sample_rate;
  b.reference_trace.motor = h.motor;
  b.reference_trace.sample_rate = h.sample_rate;
  b.reference_trace.trigger_index = h.trigger_index;
  b.reference_trace.samples = r.floats(h.sample_count);
  b.pointwise_mean = r.floats(h.sample_count);
  b.pointwise_sd = r.floats(h.sample_count);
  if (r.remaining() != 0) r.fail("trailing bytes after samples");
  b.source_count = h.source_count;
  b.print_end = h.print_end;
  b.peak_sd = static_cast<float>(h.peak_sd);
  return b;
}

bool is_baseline_file(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  Reader r(data, path);
  return read_header(r).baseline;
}

MotorTrace import_csv(const std::filesystem::path& path, double sample_rate, std::size_t trigger_index,
                      Motor motor) {
  const std::string text = read_file(path);
  std::vector<double> times;
  std::vector<float> values;
  std::size_t columns = 0;
  std::size_t line_no = 0;
  bool first_row = true;
  std::string_view rest = text;
  while (!rest.empty()) {
    const auto nl = rest.find('\n');
    const std::string_view line = trim(rest.substr(0, nl));
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    std::vector<double> nums(fields.size());
    bool numeric = true;
    for (std::size_t i = 0; i < fields.size(); ++i) numeric = numeric && to_double(fields[i], nums[i]);
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    if (!numeric) {
      if (first_row) {
        first_row = false;
        continue;  // header
      }
      throw Error(Errc::format, where + "non-numeric value");
    }
    first_row = false;
    if (fields.size() > 2) throw Error(Errc::format, where + "expected 1 or 2 columns, got " + std::to_string(fields.size()));
    if (columns == 0) columns = fields.size();
    if (fields.size() != columns) throw Error(Errc::format, where + "inconsistent column count");
    if (columns == 2) times.push_back(nums[0]);
    values.push_back(static_cast<float>(nums.back()));
  }
  if (values.empty()) throw Error(Errc::format, path.string() + ": no samples");

  double fs = sample_rate;
  if (columns == 2) {
    if (!(fs > 0.0)) {
      if (times.size() < 2) throw Error(Errc::format, path.string() + ": cannot infer sample rate from one row");
      const double dt = times[1] - times[0];
      if (!(dt > 0.0)) throw Error(Errc::format, path.string() + ": time column is not increasing");
      fs = 1.0 / dt;
    }
    for (std::size_t i = 1; i < times.size(); ++i) {
      const double elapsed = static_cast<double>(i) / fs;
      const double expected = times[0] + elapsed;
      if (std::abs(times[i] - expected) > 1e-6 * elapsed) {
        throw Error(Errc::format, path.string() + ": non-uniform time column at row " + std::to_string(i + 1) +
                                      " (t=" + format_number(times[i]) + ", expected " + format_number(expected) + ")");
      }
    }
  } else if (!(fs > 0.0)) {
    throw Error(Errc::invalid_argument, "single-column CSV needs an explicit sample rate");
  }
  if (trigger_index >= values.size()) {
    throw Error(Errc::invalid_argument, "trigger index " + std::to_string(trigger_index) + " beyond " +
                                            std::to_string(values.size()) + " samples");
  }
  MotorTrace t;
  t.motor = motor;
  t.sample_rate = fs;
  t.trigger_index = trigger_index;
  t.samples = std::move(values);
  return t;
}

void export_csv(const MotorTrace& trace, const std::filesystem::path& path) {
  std::string out = "time_s,amps\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out += format_number(trace.time_of(i));
    out += ',';
    out += format_number(static_cast<double>(trace.samples[i]));
    out += '\n';
  }
  write_file(path, out);
}

void export_series_csv(std::span<const float> series, double sample_rate, const std::filesystem::path& path,
                       std::size_t decimation) {
  if (decimation == 0) throw Error(Errc::invalid_argument, "decimation must be >= 1");
  std::string out = "time_s,amps\n";
  for (std::size_t i = 0; i < series.size(); i += decimation) {
    const std::size_t end = std::min(series.size(), i + decimation);
    const float peak = *std::max_element(series.begin() + static_cast<std::ptrdiff_t>(i),
                                         series.begin() + static_cast<std::ptrdiff_t>(end));
    out += format_number(static_cast<double>(i) / sample_rate);
    out += ',';
    out += format_number(static_cast<double>(peak));
    out += '\n';
  }
  write_file(path, out);
}

MotorTrace align_to_trigger(const MotorTrace& trace) {
  if (trace.trigger_index >= trace.size()) {
    throw Error(Errc::invalid_argument, "trigger index " + std::to_string(trace.trigger_index) +
                                            " beyond trace length " + std::to_string(trace.size()));
  }
  MotorTrace out;
  out.motor = trace.motor;
  out.sample_rate = trace.sample_rate;
  out.trigger_index = 0;
  out.samples.assign(trace.samples.begin() + static_cast<std::ptrdiff_t>(trace.trigger_index), trace.samples.end());
  return out;
}

std::vector<MotorTrace> common_window(std::span<const MotorTrace> traces) {
  std::vector<MotorTrace> out(traces.begin(), traces.end());
  if (out.empty()) return out;
  std::size_t n = out.front().size();
  for (const auto& t : out) {
    if (t.sample_rate != out.front().sample_rate) {
      throw Error(Errc::invalid_argument, "common_window: mismatched sample rates (" +
                                              format_number(out.front().sample_rate) + " vs " +
                                              format_number(t.sample_rate) + ")");
    }
    if (t.trigger_index != 0) throw Error(Errc::invalid_argument, "common_window: traces must be aligned first");
    n = std::min(n, t.size());
  }
  for (auto& t : out) t.samples.resize(n);
  return out;
}

}  // namespace pcsd
