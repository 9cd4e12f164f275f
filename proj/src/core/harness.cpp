#include "pcsd/harness.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "pcsd/error.hpp"
#include "pcsd/kvconfig.hpp"
#include "pcsd/traceio.hpp"

namespace pcsd {
namespace {

constexpr AttackKind kRowKinds[] = {AttackKind::Insert, AttackKind::Delete, AttackKind::Reorder, AttackKind::Void};

std::string row_name(AttackKind kind) {
  std::string s = attack_name(kind);
  s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto p = s.find(sep, start);
    out.push_back(s.substr(start, p == std::string::npos ? std::string::npos : p - start));
    if (p == std::string::npos) break;
    start = p + 1;
  }
  return out;
}

std::string trimmed(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

std::size_t parse_index(const std::string& text, const std::string& what) {
  const std::string t = trimmed(text);
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size()) {
    throw Error(Errc::config, "attack spec: " + what + " '" + text + "' is not a non-negative integer");
  }
  return v;
}

// Merges "<prefix>.<key>" entries of `config` over an optional file.
KeyValueConfig sub_config(const KeyValueConfig& config, const std::string& prefix,
                          const std::filesystem::path& base_dir) {
  std::map<std::string, std::string> merged;
  std::string origin = config.origin();
  if (config.has(prefix)) {
    auto path = std::filesystem::path(config.get(prefix));
    if (path.is_relative()) path = base_dir / path;
    const auto file = KeyValueConfig::load(path);
    merged = file.entries();
    origin = path.string();
  }
  const std::string dotted = prefix + ".";
  for (const auto& [k, v] : config.entries()) {
    if (k.rfind(dotted, 0) == 0) merged[k.substr(dotted.size())] = v;
  }
  std::string text;
  for (const auto& [k, v] : merged) text += k + " = " + v + "\n";
  return KeyValueConfig::parse(text, origin);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error(Errc::io, "write failed for '" + path.string() + "'");
}

// Noise-free aligned traces, used as ground truth for the disturbance mask.
PerMotor<std::vector<float>> clean_traces(const MotionPlan& plan, const ExperimentConfig& cfg) {
  PerMotor<std::vector<float>> out;
  for (Motor m : kMotors) {
    out[m] = align_to_trigger(synthesize_trace(plan, m, cfg.profile, NoiseModel::silent(), cfg.sample_rate)).samples;
  }
  return out;
}

std::string run_label(const std::string& row, std::size_t run) { return lower(row) + "_" + std::to_string(run); }

}  // namespace

void ExperimentConfig::validate() const {
  profile.validate();
  noise.validate();
  detection.validate();
  if (golden_count < 2) {
    throw Error(Errc::config, "golden_count must be >= 2 (a baseline needs two traces), got " +
                                  std::to_string(golden_count));
  }
  if (malicious_count < 1) throw Error(Errc::config, "malicious_count must be >= 1");
  if (!(visible_factor > 0.0) || !std::isfinite(visible_factor)) throw Error(Errc::config, "visible_factor must be > 0");
  if (!(disturbance_floor >= 0.0) || !std::isfinite(disturbance_floor)) {
    throw Error(Errc::config, "disturbance_floor must be >= 0");
  }
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) throw Error(Errc::config, "sample_rate must be > 0");
  if (series_decimation == 0) throw Error(Errc::config, "series_decimation must be >= 1");
  std::set<std::string> names{"Normal"};
  for (const auto& a : attacks) {
    if (a.specs.empty()) throw Error(Errc::config, "attack row '" + a.name + "' has no specs");
    if (!names.insert(a.name).second) throw Error(Errc::config, "duplicate attack row '" + a.name + "'");
    for (const auto& s : a.specs) s.validate();
  }
}

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig c;
  c.attacks = {
      {"Insert", parse_attack_specs(AttackKind::Insert, "7,20,G0 X2 Y2")},
      {"Delete", parse_attack_specs(AttackKind::Delete, "7,4")},
      {"Reorder", parse_attack_specs(AttackKind::Reorder, "7,20,21;8,20,21")},
      {"Void", parse_attack_specs(AttackKind::Void, "7,87")},
  };
  return c;
}

ExperimentConfig ExperimentConfig::from_config(const KeyValueConfig& config, const std::filesystem::path& base_dir) {
  ExperimentConfig c = defaults();
  std::set<std::string> known{"program", "profile", "noise", "golden_count", "malicious_count",
                              "detection.window", "detection.margin", "detection.run_requirement",
                              "visible_factor", "disturbance_floor", "sample_rate", "seed", "emit_traces",
                              "emit_series", "series_decimation"};
  for (AttackKind k : kRowKinds) known.insert(std::string("attack.") + attack_name(k));
  for (const auto& [k, v] : config.entries()) {
    if (k.rfind("profile.", 0) == 0 || k.rfind("noise.", 0) == 0) known.insert(k);
  }
  config.reject_unknown(known);

  if (config.has("program") && !config.get("program").empty()) {
    auto p = std::filesystem::path(config.get("program"));
    c.program_path = (p.is_relative() ? base_dir / p : p).string();
  }
  c.profile = PrinterProfile::from_config(sub_config(config, "profile", base_dir));
  c.noise = NoiseModel::from_config(sub_config(config, "noise", base_dir));
  c.golden_count = config.get_uint("golden_count", c.golden_count);
  c.malicious_count = config.get_uint("malicious_count", c.malicious_count);
  c.detection.window = config.get_uint("detection.window", c.detection.window);
  c.detection.margin = config.get_double("detection.margin", c.detection.margin);
  c.detection.run_requirement = config.get_uint("detection.run_requirement", c.detection.run_requirement);
  c.visible_factor = config.get_double("visible_factor", c.visible_factor);
  c.disturbance_floor = config.get_double("disturbance_floor", c.disturbance_floor);
  c.sample_rate = config.get_double("sample_rate", c.sample_rate);
  c.seed = config.get_uint("seed", c.seed);
  c.emit_traces = config.get_bool("emit_traces", c.emit_traces);
  c.emit_series = config.get_bool("emit_series", c.emit_series);
  c.series_decimation = config.get_uint("series_decimation", c.series_decimation);

  std::vector<AttackCase> attacks;
  for (AttackKind k : kRowKinds) {
    const std::string key = std::string("attack.") + attack_name(k);
    const std::string name = row_name(k);
    if (!config.has(key)) {
      for (const auto& a : c.attacks) {
        if (a.name == name) attacks.push_back(a);
      }
      continue;
    }
    const std::string text = trimmed(config.get(key));
    if (text == "none" || text.empty()) continue;
    attacks.push_back({name, parse_attack_specs(k, text)});
  }
  c.attacks = std::move(attacks);
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  return from_config(KeyValueConfig::load(path), path.parent_path());
}

std::string ExperimentConfig::describe() const {
  std::ostringstream out;
  out << "program = " << program_path << "\n";
  out << "golden_count = " << golden_count << "\n";
  out << "malicious_count = " << malicious_count << "\n";
  for (AttackKind k : kRowKinds) {
    const auto it = std::find_if(attacks.begin(), attacks.end(), [&](const AttackCase& a) { return a.name == row_name(k); });
    out << "attack." << attack_name(k) << " = " << (it == attacks.end() ? "none" : format_attack_specs(it->specs))
        << "\n";
  }
  out << "detection.window = " << detection.window << "\n";
  out << "detection.margin = " << format_number(detection.margin) << "\n";
  out << "detection.run_requirement = " << detection.run_requirement << "\n";
  out << "visible_factor = " << format_number(visible_factor) << "\n";
  out << "disturbance_floor = " << format_number(disturbance_floor) << "\n";
  out << "sample_rate = " << format_number(sample_rate) << "\n";
  out << "seed = " << seed << "\n";
  out << "emit_traces = " << (emit_traces ? "true" : "false") << "\n";
  out << "emit_series = " << (emit_series ? "true" : "false") << "\n";
  out << "series_decimation = " << series_decimation << "\n";
  std::istringstream p(profile.describe());
  for (std::string line; std::getline(p, line);) out << "profile." << line << "\n";
  std::istringstream n(noise.describe());
  for (std::string line; std::getline(n, line);) {
    if (line.rfind("seed", 0) != 0) out << "noise." << line << "\n";
  }
  return out.str();
}

std::vector<AttackSpec> parse_attack_specs(AttackKind kind, const std::string& text) {
  std::vector<AttackSpec> specs;
  for (const auto& entry : split(text, ';')) {
    if (trimmed(entry).empty()) continue;
    const auto fields = split(entry, ',');
    AttackSpec s;
    s.kind = kind;
    const std::size_t want = (kind == AttackKind::Insert || kind == AttackKind::Reorder) ? 3 : 2;
    if (fields.size() != want) {
      throw Error(Errc::config, std::string("attack spec '") + entry + "' for " + attack_name(kind) + " needs " +
                                    std::to_string(want) + " comma-separated fields");
    }
    s.layer = parse_index(fields[0], "layer");
    s.position = parse_index(fields[1], "position");
    if (kind == AttackKind::Insert) {
      const Command payload = parse_line(trimmed(fields[2]), 1);
      if (!payload.is_move() && payload.kind != CommandKind::SetFanSpeed) {
        throw Error(Errc::config, "insert payload '" + fields[2] + "' is not a supported command");
      }
      s.payload = payload;
    } else if (kind == AttackKind::Reorder) {
      s.pair_offset = parse_index(fields[2], "pair offset");
    }
    try {
      s.validate();
    } catch (const Error& e) {
      throw Error(Errc::config, e.what());
    }
    specs.push_back(std::move(s));
  }
  return specs;
}

std::string format_attack_specs(const std::vector<AttackSpec>& specs) {
  std::string out;
  for (const auto& s : specs) {
    if (!out.empty()) out += ';';
    out += std::to_string(s.layer) + "," + std::to_string(s.position);
    if (s.payload) out += "," + serialize_command(*s.payload);
    if (s.pair_offset) out += "," + std::to_string(*s.pair_offset);
  }
  return out;
}

const char* cell_name(Cell c) {
  switch (c) {
    case Cell::Detected: return "Detected";
    case Cell::NotDetected: return "NotDetected";
    case Cell::Visible: return "Visible";
    case Cell::Irrelevant: return "Irrelevant";
  }
  return "?";
}

bool DetectabilityMatrix::valid() const {
  const MatrixRow* normal = row("Normal");
  if (!normal) return false;
  for (const auto& c : normal->cells) {
    if (c.cell == Cell::Detected || c.detected > 0) return false;
  }
  return true;
}

const MatrixRow* DetectabilityMatrix::row(const std::string& name) const {
  for (const auto& r : rows) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

std::string DetectabilityMatrix::to_text() const {
  std::vector<std::vector<std::string>> table{{"attack", "X", "Y", "Z", "E"}};
  for (const auto& r : rows) {
    std::vector<std::string> line{r.name};
    for (const auto& c : r.cells) {
      line.push_back(std::string(cell_name(c.cell)) + " " + std::to_string(c.detected) + "/" + std::to_string(c.total));
    }
    table.push_back(std::move(line));
  }
  std::vector<std::size_t> width(5, 0);
  for (const auto& line : table) {
    for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
  }
  std::string out;
  for (const auto& line : table) {
    std::string text;
    for (std::size_t i = 0; i < line.size(); ++i) {
      text += line[i];
      if (i + 1 < line.size()) text += std::string(width[i] - line[i].size() + 2, ' ');
    }
    out += text + "\n";
  }
  return out;
}

std::string DetectabilityMatrix::to_csv() const {
  std::string out = "attack,motor,cell,detected,total,attack_excess,benign_excess,disturbed_samples\n";
  for (const auto& r : rows) {
    for (Motor m : kMotors) {
      const auto& c = r.cells[m];
      out += r.name + "," + motor_letter(m) + "," + cell_name(c.cell) + "," + std::to_string(c.detected) + "," +
             std::to_string(c.total) + "," + format_number(c.attack_excess) + "," + format_number(c.benign_excess) +
             "," + std::to_string(c.disturbed_samples) + "\n";
    }
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  config.validate();
  const bool emit = !out_dir.empty();
  if (emit) {
    std::filesystem::create_directories(out_dir / "reports");
    if (config.emit_series) std::filesystem::create_directories(out_dir / "series");
    if (config.emit_traces) {
      std::filesystem::create_directories(out_dir / "traces");
      std::filesystem::create_directories(out_dir / "baselines");
    }
  }

  const GCodeProgram benign = config.program_path.empty() ? benchmark_object() : load_gcode(config.program_path);
  const MotionPlan benign_plan = plan_motion(benign, config.profile);
  ExperimentResult result;
  result.benign_duration = benign_plan.total_duration;

  const auto simulate = [&](const GCodeProgram& program, std::uint64_t seed, const std::string& label) {
    auto traces = simulate_print(program, config.profile, config.noise, seed, config.sample_rate);
    if (emit && config.emit_traces) {
      for (Motor m : kMotors) {
        save_trace(traces[m], out_dir / "traces" / (label + "_" + motor_letter(m) + ".ptrc"));
      }
    }
    return traces;
  };

  // Golden set, streamed.
  PerMotor<BaselineAccumulator> acc;
  for (std::size_t i = 0; i < config.golden_count; ++i) {
    const auto traces = simulate(benign, config.seed + i, "golden_" + std::to_string(i));
    for (Motor m : kMotors) acc[m].add(smooth(align_to_trigger(traces[m]), config.detection.window));
  }
  PerMotor<GoldenBaseline> baselines;
  for (Motor m : kMotors) {
    baselines[m] = acc[m].finish();
    result.peak_sd[m] = baselines[m].peak_sd;
    if (emit && config.emit_traces) {
      save_baseline(baselines[m], out_dir / "baselines" / (std::string("baseline_") + motor_letter(m) + ".ptrc"));
    }
  }

  const auto analyze = [&](const PerMotor<MotorTrace>& traces, const std::string& row, std::size_t run,
                           std::uint64_t seed, PerMotor<std::vector<float>>& excess_out) {
    RunRecord rec{row, run, seed, {}};
    for (Motor m : kMotors) {
      auto a = analyze_capture(traces[m], baselines[m], config.detection);
      if (emit && config.emit_series) {
        const std::string name = run_label(row, run) + "_" + motor_letter(m) + "_excess.csv";
        export_series_csv(a.excess, config.sample_rate, out_dir / "series" / name, config.series_decimation);
        a.report.excess_series_path = "series/" + name;
      }
      rec.report.motors[m] = a.report;
      if (a.report.verdict == Verdict::Malicious) rec.report.overall = Verdict::Malicious;
      excess_out[m] = std::move(a.excess);
    }
    if (emit) write_text(out_dir / "reports" / (run_label(row, run) + ".txt"), rec.report.to_text());
    result.runs.push_back(rec);
    return rec;
  };

  // Normal row; keep the run-averaged excess as the Visible reference.
  MatrixRow normal{"Normal", {}};
  PerMotor<std::vector<double>> benign_sum;
  for (std::size_t i = 0; i < config.malicious_count; ++i) {
    const std::uint64_t seed = config.seed + 1000 + i;
    PerMotor<std::vector<float>> excess;
    const auto rec = analyze(simulate(benign, seed, run_label("normal", i)), "Normal", i, seed, excess);
    for (Motor m : kMotors) {
      auto& sum = benign_sum[m];
      if (sum.size() < excess[m].size()) sum.resize(excess[m].size(), 0.0);
      for (std::size_t j = 0; j < excess[m].size(); ++j) sum[j] += excess[m][j];
      auto& cell = normal.cells[m];
      ++cell.total;
      if (rec.report.motors[m].verdict == Verdict::Malicious) ++cell.detected;
    }
  }
  for (Motor m : kMotors) {
    for (auto& v : benign_sum[m]) v /= static_cast<double>(config.malicious_count);
    auto& cell = normal.cells[m];
    cell.cell = cell.detected > 0 ? Cell::Detected : Cell::NotDetected;
  }
  result.matrix.rows.push_back(normal);

  const auto benign_clean = clean_traces(benign_plan, config);
  for (std::size_t k = 0; k < config.attacks.size(); ++k) {
    const AttackCase& attack = config.attacks[k];
    const GCodeProgram mutated = inject_all(benign, attack.specs);
    const MotionPlan plan = plan_motion(mutated, config.profile);
    const auto attacked_clean = clean_traces(plan, config);

    PerMotor<std::vector<char>> mask;
    MatrixRow row{attack.name, {}};
    for (Motor m : kMotors) {
      const std::size_t n =
          std::min({attacked_clean[m].size(), benign_clean[m].size(), baselines[m].size()});
      mask[m].assign(n, 0);
      for (std::size_t j = 0; j < n; ++j) {
        if (std::abs(attacked_clean[m][j] - benign_clean[m][j]) > config.disturbance_floor) {
          mask[m][j] = 1;
          ++row.cells[m].disturbed_samples;
        }
      }
      double benign_mean = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (mask[m][j] && j < benign_sum[m].size()) benign_mean += benign_sum[m][j];
      }
      if (row.cells[m].disturbed_samples > 0) benign_mean /= static_cast<double>(row.cells[m].disturbed_samples);
      row.cells[m].benign_excess = benign_mean;
    }

    for (std::size_t i = 0; i < config.malicious_count; ++i) {
      const std::uint64_t seed = config.seed + 2000 + 100 * k + i;
      PerMotor<std::vector<float>> excess;
      const auto rec = analyze(simulate(mutated, seed, run_label(attack.name, i)), attack.name, i, seed, excess);
      for (Motor m : kMotors) {
        auto& cell = row.cells[m];
        ++cell.total;
        if (rec.report.motors[m].verdict == Verdict::Malicious) ++cell.detected;
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t j = 0; j < std::min(mask[m].size(), excess[m].size()); ++j) {
          if (mask[m][j]) {
            sum += excess[m][j];
            ++count;
          }
        }
        if (count > 0) cell.attack_excess += sum / static_cast<double>(count);
      }
    }
    for (Motor m : kMotors) {
      auto& cell = row.cells[m];
      cell.attack_excess /= static_cast<double>(config.malicious_count);
      if (cell.detected == cell.total) {
        cell.cell = Cell::Detected;
      } else if (cell.disturbed_samples == 0) {
        cell.cell = Cell::Irrelevant;
      } else if (cell.attack_excess > 0.0 && cell.attack_excess >= config.visible_factor * cell.benign_excess) {
        cell.cell = Cell::Visible;
      } else {
        cell.cell = Cell::NotDetected;
      }
    }
    result.matrix.rows.push_back(row);
  }

  result.notes.push_back("benign print duration " + format_number(to_seconds(result.benign_duration)) + " s");
  for (const auto& a : config.attacks) {
    result.notes.push_back(lower(a.name) + " specs (layer,position[,payload|,pair]): " + format_attack_specs(a.specs));
  }
  result.notes.push_back("Visible: not detected and mean excess over the disturbed samples >= " +
                         format_number(config.visible_factor) + "x the Normal-row mean excess there");
  result.notes.push_back("Irrelevant: no ground-truth disturbance on that motor");
  if (!result.matrix.valid()) result.notes.push_back("INVALID: the Normal row has flagged runs");

  if (emit) {
    std::string summary = config.describe();
    for (Motor m : kMotors) {
      summary += std::string("peak_sd.") + motor_letter(m) + " = " + format_number(result.peak_sd[m]) + "\n";
    }
    for (const auto& n : result.notes) summary += "# " + n + "\n";
    write_text(out_dir / "experiment.txt", summary);
    write_text(out_dir / "matrix.txt", result.matrix.to_text());
    write_text(out_dir / "matrix.csv", result.matrix.to_csv());
  }
  return result;
}

}  // namespace pcsd
