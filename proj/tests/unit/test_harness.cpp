#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pcsd/error.hpp"
#include "pcsd/harness.hpp"

using namespace pcsd;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Two golden prints, one run per row, at a low but Nyquist-safe rate.
ExperimentConfig small_config() {
  auto c = ExperimentConfig::defaults();
  c.golden_count = 2;
  c.malicious_count = 1;
  c.sample_rate = 1000.0;
  c.detection.run_requirement = 50;
  c.series_decimation = 10;
  return c;
}

}  // namespace

TEST(Benchmark, ShapeAndTiming) {
  const auto cube = benchmark_object();
  EXPECT_EQ(cube.layers().size(), 10u);
  EXPECT_EQ(cube.size(), 885u);
  const auto plan = plan_motion(cube, PrinterProfile{});
  EXPECT_NEAR(to_seconds(plan.total_duration), 77.445, 0.01);
  EXPECT_LE(max_step_frequency(plan), 200.0 * (1.0 + 1e-12));
  EXPECT_EQ(serialize(benchmark_object()), serialize(cube));
  EXPECT_EQ(resolve_command(cube, 7, 87), cube.layers()[8].first_command - 1);
}

TEST(AttackSpecs, ParseAndFormat) {
  const auto ins = parse_attack_specs(AttackKind::Insert, "7,20,G0 X2 Y2");
  ASSERT_EQ(ins.size(), 1u);
  EXPECT_EQ(ins[0].layer, 7u);
  EXPECT_EQ(ins[0].position, 20u);
  ASSERT_TRUE(ins[0].payload.has_value());
  EXPECT_EQ(format_attack_specs(ins), "7,20,G0 X2 Y2");

  const auto re = parse_attack_specs(AttackKind::Reorder, " 7,20,21 ; 8,20,21 ");
  ASSERT_EQ(re.size(), 2u);
  EXPECT_EQ(re[1].layer, 8u);
  EXPECT_EQ(*re[1].pair_offset, 21u);
  EXPECT_EQ(format_attack_specs(re), "7,20,21;8,20,21");

  EXPECT_EQ(format_attack_specs(parse_attack_specs(AttackKind::Delete, "7,4")), "7,4");
  EXPECT_THROW(parse_attack_specs(AttackKind::Delete, "7"), Error);
  EXPECT_THROW(parse_attack_specs(AttackKind::Delete, "7,-1"), Error);
  EXPECT_THROW(parse_attack_specs(AttackKind::Reorder, "7,20,20"), Error);
  EXPECT_THROW(parse_attack_specs(AttackKind::Insert, "7,20,M104 S200"), Error);
}

TEST(ExperimentConfig, Validation) {
  auto c = ExperimentConfig::defaults();
  EXPECT_NO_THROW(c.validate());
  c.golden_count = 1;
  EXPECT_THROW(c.validate(), Error);
  c = ExperimentConfig::defaults();
  c.malicious_count = 0;
  EXPECT_THROW(c.validate(), Error);
  c = ExperimentConfig::defaults();
  c.attacks.push_back(c.attacks.front());
  EXPECT_THROW(c.validate(), Error);
  EXPECT_THROW(run_experiment([] {
                 auto x = ExperimentConfig::defaults();
                 x.golden_count = 1;
                 return x;
               }()),
               Error);
}

TEST(ExperimentConfig, DescribeRoundTrip) {
  auto c = ExperimentConfig::defaults();
  c.seed = 42;
  c.detection.margin = 0.25;
  c.noise.channels[Motor::E].phase_jitter_sd = 0.5;
  c.attacks.pop_back();
  const auto text = c.describe();
  const auto back = ExperimentConfig::from_config(KeyValueConfig::parse(text));
  EXPECT_EQ(back.describe(), text);
  EXPECT_EQ(back.attacks.size(), 3u);
  EXPECT_EQ(back.noise.channels[Motor::E].phase_jitter_sd, 0.5);
  EXPECT_NE(text.find("attack.void = none"), std::string::npos);
}

TEST(ExperimentConfig, UnknownKeyAndBadValues) {
  EXPECT_THROW(ExperimentConfig::from_config(KeyValueConfig::parse("golden_cont = 3\n")), Error);
  EXPECT_THROW(ExperimentConfig::from_config(KeyValueConfig::parse("golden_count = 1\n")), Error);
  EXPECT_THROW(ExperimentConfig::from_config(KeyValueConfig::parse("detection.margin = abc\n")), Error);
  EXPECT_THROW(ExperimentConfig::from_config(KeyValueConfig::parse("profile.x.steps_per_mm = 0\n")), Error);
  try {
    ExperimentConfig::from_config(KeyValueConfig::parse("seed = 1\nbogus = 2\n", "exp.cfg"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::config);
    EXPECT_NE(std::string(e.what()).find("exp.cfg:2"), std::string::npos);
  }
}

TEST(ExperimentConfig, ShippedConfigEqualsDefaults) {
  const auto c = ExperimentConfig::load(std::string(PCSD_CONFIG_DIR) + "/experiment.cfg");
  EXPECT_EQ(c.describe(), ExperimentConfig::defaults().describe());
  EXPECT_TRUE(c.program_path.empty());
}

TEST(Matrix, ValidityAndRendering) {
  DetectabilityMatrix m;
  MatrixRow normal{"Normal", {}};
  for (auto& c : normal.cells) {
    c.cell = Cell::NotDetected;
    c.total = 3;
  }
  MatrixRow insert{"Insert", {}};
  for (auto& c : insert.cells) {
    c.cell = Cell::Detected;
    c.detected = c.total = 3;
  }
  insert.cells[Motor::E].cell = Cell::Visible;
  insert.cells[Motor::E].detected = 0;
  m.rows = {normal, insert};
  EXPECT_TRUE(m.valid());
  EXPECT_EQ(m.row("Insert")->cells[Motor::X].cell, Cell::Detected);
  EXPECT_EQ(m.row("Void"), nullptr);
  const auto text = m.to_text();
  EXPECT_NE(text.find("Normal"), std::string::npos);
  EXPECT_NE(text.find("Visible 0/3"), std::string::npos);
  const auto csv = m.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "attack,motor,cell,detected,total,attack_excess,benign_excess,disturbed_samples");
  EXPECT_NE(csv.find("Insert,E,Visible,0,3,"), std::string::npos);

  m.rows[0].cells[Motor::Z].detected = 1;
  m.rows[0].cells[Motor::Z].cell = Cell::Detected;
  EXPECT_FALSE(m.valid());
  EXPECT_FALSE(DetectabilityMatrix{}.valid());
  EXPECT_STREQ(cell_name(Cell::Irrelevant), "Irrelevant");
}

TEST(Experiment, SmallRunIsDeterministicAndEmitsArtifacts) {
  const fs::path a = fs::temp_directory_path() / "pcsd_harness_a";
  const fs::path b = fs::temp_directory_path() / "pcsd_harness_b";
  fs::remove_all(a);
  fs::remove_all(b);
  auto cfg = small_config();
  cfg.emit_traces = true;
  const auto ra = run_experiment(cfg, a);
  const auto rb = run_experiment(cfg, b);

  ASSERT_EQ(ra.matrix.rows.size(), 5u);
  EXPECT_EQ(ra.matrix.rows[0].name, "Normal");
  EXPECT_EQ(ra.matrix.to_csv(), rb.matrix.to_csv());
  EXPECT_EQ(ra.runs.size(), 5u);
  EXPECT_NEAR(to_seconds(ra.benign_duration), 77.445, 0.01);
  for (const auto& row : ra.matrix.rows) {
    for (const auto& c : row.cells) EXPECT_EQ(c.total, 1u);
  }

  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    ++files;
    const auto rel = fs::relative(entry.path(), a);
    ASSERT_TRUE(fs::exists(b / rel)) << rel;
    EXPECT_EQ(slurp(entry.path()), slurp(b / rel)) << rel;
  }
  // 5 reports, 20 series, 2 golden + 5 run captures of 4 motors, 4 baselines,
  // experiment.txt and the matrix in two formats.
  EXPECT_EQ(files, 5u + 20u + 28u + 4u + 3u);
  EXPECT_TRUE(fs::exists(a / "reports" / "normal_0.txt"));
  EXPECT_TRUE(fs::exists(a / "series" / "insert_0_X_excess.csv"));
  EXPECT_TRUE(fs::exists(a / "baselines" / "baseline_E.ptrc"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Experiment, SeedChangesCaptures) {
  auto cfg = small_config();
  cfg.attacks.clear();
  const auto r1 = run_experiment(cfg);
  cfg.seed = 2;
  const auto r2 = run_experiment(cfg);
  EXPECT_NE(r1.peak_sd, r2.peak_sd);
  EXPECT_EQ(r1.matrix.rows.size(), 1u);
}
