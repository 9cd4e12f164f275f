#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <limits>
#include <fstream>
#include <random>
#include <sstream>

#include "pcsd/error.hpp"
#include "pcsd/traceio.hpp"

using namespace pcsd;
namespace fs = std::filesystem;

namespace {

class TraceIo : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("pcsd_traceio_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  void write(const fs::path& p, const std::string& bytes) const {
    std::ofstream out(p, std::ios::binary);
    out << bytes;
  }
  std::string read(const fs::path& p) const {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

MotorTrace random_trace(std::size_t n, std::uint32_t seed, Motor m = Motor::Y) {
  std::mt19937 rng(seed);
  std::normal_distribution<float> dist(0.0f, 1.0f);
  MotorTrace t;
  t.motor = m;
  t.sample_rate = 25000.0;
  t.samples.resize(n);
  for (auto& v : t.samples) v = dist(rng);
  t.trigger_index = n / 3;
  return t;
}

template <class T>
T read_le(const std::string& bytes, std::size_t offset) {
  T v;
  std::memcpy(&v, bytes.data() + offset, sizeof(T));
  return v;
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_F(TraceIo, BinaryRoundTripIsBitExact) {
  auto t = random_trace(1000, 1);
  t.samples[5] = -0.0f;
  t.samples[6] = std::numeric_limits<float>::denorm_min();
  save_trace(t, path("a.ptrc"));
  const auto back = load_trace(path("a.ptrc"));
  EXPECT_EQ(back.motor, t.motor);
  EXPECT_EQ(back.sample_rate, t.sample_rate);
  EXPECT_EQ(back.trigger_index, t.trigger_index);
  ASSERT_EQ(back.size(), t.size());
  EXPECT_EQ(std::memcmp(back.samples.data(), t.samples.data(), t.size() * sizeof(float)), 0);
  save_trace(back, path("b.ptrc"));
  EXPECT_EQ(read(path("a.ptrc")), read(path("b.ptrc")));
}

TEST_F(TraceIo, HeaderLayout) {
  const auto t = random_trace(10, 2, Motor::E);
  save_trace(t, path("h.ptrc"));
  const auto bytes = read(path("h.ptrc"));
  ASSERT_EQ(bytes.size(), 40u + 10u * 4u);
  EXPECT_EQ(bytes.substr(0, 4), "PTRC");
  EXPECT_EQ(read_le<std::uint16_t>(bytes, 4), 1);
  EXPECT_EQ(read_le<std::uint16_t>(bytes, 6), 40);
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 3);
  EXPECT_EQ(static_cast<unsigned char>(bytes[9]), 1);
  EXPECT_EQ(read_le<std::uint16_t>(bytes, 10), 0);
  EXPECT_EQ(read_le<std::uint32_t>(bytes, 12), 0u);
  EXPECT_EQ(read_le<double>(bytes, 16), 25000.0);
  EXPECT_EQ(read_le<std::uint64_t>(bytes, 24), 3u);
  EXPECT_EQ(read_le<std::uint64_t>(bytes, 32), 10u);
  EXPECT_EQ(read_le<float>(bytes, 40), t.samples[0]);
  EXPECT_EQ(read_le<float>(bytes, 76), t.samples[9]);
}

TEST_F(TraceIo, TruncatedFileIsFormatError) {
  save_trace(random_trace(100, 3), path("t.ptrc"));
  auto bytes = read(path("t.ptrc"));
  write(path("t.ptrc"), bytes.substr(0, bytes.size() - 2));
  EXPECT_NE(error_of([&] { load_trace(path("t.ptrc")); }).find("unexpected end of samples"), std::string::npos);
  write(path("t.ptrc"), bytes.substr(0, 20));
  EXPECT_NE(error_of([&] { load_trace(path("t.ptrc")); }).find("truncated header"), std::string::npos);
  write(path("t.ptrc"), bytes + "xx");
  EXPECT_NE(error_of([&] { load_trace(path("t.ptrc")); }).find("trailing bytes"), std::string::npos);
}

TEST_F(TraceIo, CorruptHeadersAreRejected) {
  save_trace(random_trace(16, 4), path("c.ptrc"));
  const auto good = read(path("c.ptrc"));
  auto patch = [&](std::size_t offset, char value) {
    auto b = good;
    b[offset] = value;
    write(path("c.ptrc"), b);
    return error_of([&] { load_trace(path("c.ptrc")); });
  };
  EXPECT_NE(patch(0, 'X').find("bad magic"), std::string::npos);
  EXPECT_NE(patch(4, 2).find("unsupported version"), std::string::npos);
  EXPECT_NE(patch(8, 9).find("invalid motor"), std::string::npos);
  EXPECT_NE(patch(9, 0).find("units"), std::string::npos);
  EXPECT_NE(patch(10, 4).find("flags"), std::string::npos);
  try {
    patch(0, 'Q');
    load_trace(path("c.ptrc"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::format);
  }
  EXPECT_THROW(load_trace(path("missing.ptrc")), Error);
}

TEST_F(TraceIo, SaveRejectsInvalidTraces) {
  MotorTrace empty;
  EXPECT_THROW(save_trace(empty, path("e.ptrc")), Error);
  auto t = random_trace(5, 5);
  t.trigger_index = 5;
  EXPECT_THROW(save_trace(t, path("e.ptrc")), Error);
}

TEST_F(TraceIo, CsvSingleColumn) {
  write(path("a.csv"), "0.1\n0.2\n-0.3\n0.4\n0.5\n");
  const auto t = import_csv(path("a.csv"), 1000.0, 2, Motor::Z);
  EXPECT_EQ(t.motor, Motor::Z);
  EXPECT_EQ(t.sample_rate, 1000.0);
  EXPECT_EQ(t.trigger_index, 2u);
  EXPECT_EQ(t.samples, (std::vector<float>{0.1f, 0.2f, -0.3f, 0.4f, 0.5f}));
  EXPECT_THROW(import_csv(path("a.csv"), 0.0, 0), Error);
  EXPECT_THROW(import_csv(path("a.csv"), 1000.0, 5), Error);
}

TEST_F(TraceIo, CsvTimeColumnAndHeader) {
  write(path("b.csv"), "time_s,amps\n0,1\n0.001,2\n0.002,3\n");
  const auto t = import_csv(path("b.csv"), 0.0, 0);
  EXPECT_NEAR(t.sample_rate, 1000.0, 1e-9);
  EXPECT_EQ(t.samples, (std::vector<float>{1.0f, 2.0f, 3.0f}));
  EXPECT_NO_THROW(import_csv(path("b.csv"), 1000.0, 0));
  EXPECT_THROW(import_csv(path("b.csv"), 500.0, 0), Error);
}

TEST_F(TraceIo, CsvNonUniformTimeIsRejected) {
  write(path("n.csv"), "0,1\n0.001,2\n0.0025,3\n");
  EXPECT_NE(error_of([&] { import_csv(path("n.csv"), 0.0, 0); }).find("non-uniform"), std::string::npos);
  write(path("x.csv"), "0,1\n0.001,abc\n");
  EXPECT_THROW(import_csv(path("x.csv"), 0.0, 0), Error);
  write(path("w.csv"), "1,2,3\n");
  EXPECT_THROW(import_csv(path("w.csv"), 100.0, 0), Error);
  write(path("z.csv"), "");
  EXPECT_THROW(import_csv(path("z.csv"), 100.0, 0), Error);
}

TEST_F(TraceIo, CsvExportImportRoundTrip) {
  const auto t = random_trace(500, 6, Motor::X);
  export_csv(t, path("r.csv"));
  const auto back = import_csv(path("r.csv"), 25000.0, t.trigger_index, Motor::X);
  EXPECT_EQ(back, t);
  const auto inferred = import_csv(path("r.csv"), 0.0, t.trigger_index, Motor::X);
  EXPECT_NEAR(inferred.sample_rate, 25000.0, 25000.0 * 1e-6);
}

TEST_F(TraceIo, SeriesExportDecimatesByBlockMaximum) {
  const std::vector<float> s{1, 5, 2, 0, 7, 3, 4};
  export_series_csv(s, 10.0, path("s.csv"), 3);
  EXPECT_EQ(read(path("s.csv")), "time_s,amps\n0,5\n0.3,7\n0.6,4\n");
  EXPECT_THROW(export_series_csv(s, 10.0, path("s.csv"), 0), Error);
}

TEST(Align, TriggerZeroIsIdentity) {
  const auto t = random_trace(50, 7);
  auto z = t;
  z.trigger_index = 0;
  EXPECT_EQ(align_to_trigger(z), z);
}

TEST(Align, DropsPreTriggerSamples) {
  auto t = random_trace(300, 8);
  t.trigger_index = 100;
  const auto a = align_to_trigger(t);
  EXPECT_EQ(a.size(), 200u);
  EXPECT_EQ(a.trigger_index, 0u);
  EXPECT_EQ(a.samples.front(), t.samples[100]);
  EXPECT_EQ(a.samples.back(), t.samples.back());
  EXPECT_EQ(align_to_trigger(a), a);
  t.trigger_index = 300;
  EXPECT_THROW(align_to_trigger(t), Error);
}

TEST(Align, OnsetLandsWithinOneSampleOfZero) {
  // A step whose onset sits 1.4 samples after the trigger, at two trigger offsets.
  for (std::size_t trig : {10u, 123u}) {
    MotorTrace t;
    t.sample_rate = 1000.0;
    t.samples.assign(400, 0.0f);
    t.trigger_index = trig;
    for (std::size_t k = trig + 2; k < t.size(); ++k) t.samples[k] = 1.0f;
    const auto a = align_to_trigger(t);
    const auto onset = static_cast<std::size_t>(std::find(a.samples.begin(), a.samples.end(), 1.0f) - a.samples.begin());
    EXPECT_LE(onset, 2u);
    EXPECT_GE(onset, 1u);
  }
}

TEST(CommonWindow, TruncatesToShortest) {
  auto a = random_trace(100, 9);
  auto b = random_trace(90, 10);
  a.trigger_index = b.trigger_index = 0;
  const std::vector<MotorTrace> in{a, b};
  const auto out = common_window(in);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].size(), 90u);
  EXPECT_EQ(out[1].size(), 90u);
  EXPECT_TRUE(std::equal(out[0].samples.begin(), out[0].samples.end(), a.samples.begin()));
  EXPECT_EQ(out[1], b);

  const std::vector<MotorTrace> same{a, a};
  EXPECT_EQ(common_window(same)[1], a);

  b.sample_rate = 20000.0;
  const std::vector<MotorTrace> mixed{a, b};
  EXPECT_THROW(common_window(mixed), Error);
  b.sample_rate = a.sample_rate;
  b.trigger_index = 3;
  const std::vector<MotorTrace> unaligned{a, b};
  EXPECT_THROW(common_window(unaligned), Error);
}

TEST_F(TraceIo, BaselineRoundTrip) {
  std::vector<MotorTrace> golden;
  for (std::uint32_t s = 0; s < 3; ++s) {
    auto t = random_trace(200, 20 + s, Motor::Z);
    t.trigger_index = 0;
    golden.push_back(t);
  }
  const auto b = build_baseline(golden, 150);
  save_baseline(b, path("z.ptrc"));
  EXPECT_TRUE(is_baseline_file(path("z.ptrc")));
  const auto back = load_baseline(path("z.ptrc"));
  EXPECT_EQ(back, b);
  EXPECT_EQ(read_le<std::uint16_t>(read(path("z.ptrc")), 6), 64);
  EXPECT_EQ(read(path("z.ptrc")).size(), 64u + 3u * 200u * 4u);
  EXPECT_EQ(load_trace(path("z.ptrc")), b.reference_trace);

  save_trace(golden[0], path("c.ptrc"));
  EXPECT_FALSE(is_baseline_file(path("c.ptrc")));
  EXPECT_THROW(load_baseline(path("c.ptrc")), Error);
}
