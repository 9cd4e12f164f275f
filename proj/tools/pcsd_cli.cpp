// pcsd: simulate, attack, baseline, detect and experiment front end over the
// C API. Exit codes: 0 success or Benign, 1 Malicious, 2 usage or error.
#include <glob.h>

#include <CLI11.hpp>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "pcsd/pcsd.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitError = 2;

struct Failure {
  std::string message;
};

void check(pcsd_status s, const std::string& context) {
  if (s != PCSD_OK) throw Failure{context + ": " + pcsd_last_error()};
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Program = std::unique_ptr<pcsd_program, Deleter<pcsd_program, pcsd_program_free>>;
using Profile = std::unique_ptr<pcsd_profile, Deleter<pcsd_profile, pcsd_profile_free>>;
using Noise = std::unique_ptr<pcsd_noise, Deleter<pcsd_noise, pcsd_noise_free>>;
using Trace = std::unique_ptr<pcsd_trace, Deleter<pcsd_trace, pcsd_trace_free>>;
using Baseline = std::unique_ptr<pcsd_baseline, Deleter<pcsd_baseline, pcsd_baseline_free>>;
using Experiment = std::unique_ptr<pcsd_experiment, Deleter<pcsd_experiment, pcsd_experiment_free>>;
using Matrix = std::unique_ptr<pcsd_matrix, Deleter<pcsd_matrix, pcsd_matrix_free>>;

struct Globals {
  std::uint64_t seed = 1;
  std::string profile;
  std::string out = ".";
};

void print_config(const std::string& key, const std::string& value) {
  std::cout << "config." << key << "=" << value << "\n";
}

// Re-emits "key = value" lines as config.<prefix>.<key>=<value>.
void print_described(const std::string& prefix, const char* text) {
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    print_config(prefix + line.substr(0, eq), line.substr(eq + 3));
  }
}

fs::path out_path(const Globals& g, const std::string& name) {
  const fs::path p(name);
  if (p.is_absolute()) return p;
  fs::create_directories(g.out);
  return fs::path(g.out) / p;
}

Profile load_profile(const Globals& g) {
  pcsd_profile* p = nullptr;
  if (g.profile.empty()) check(pcsd_profile_default(&p), "profile");
  else check(pcsd_profile_load(g.profile.c_str(), &p), "profile");
  return Profile(p);
}

Program load_program(const std::string& path) {
  pcsd_program* p = nullptr;
  if (path == "benchmark") check(pcsd_program_benchmark(&p), "benchmark");
  else check(pcsd_program_load(path.c_str(), &p), "G-code");
  return Program(p);
}

std::vector<std::string> expand(const std::vector<std::string>& patterns) {
  std::vector<std::string> files;
  for (const auto& pattern : patterns) {
    glob_t g{};
    const int rc = ::glob(pattern.c_str(), 0, nullptr, &g);
    if (rc == GLOB_NOMATCH) {
      globfree(&g);
      throw Failure{"no files match '" + pattern + "'"};
    }
    if (rc != 0) {
      globfree(&g);
      throw Failure{"cannot expand '" + pattern + "'"};
    }
    for (std::size_t i = 0; i < g.gl_pathc; ++i) files.emplace_back(g.gl_pathv[i]);
    globfree(&g);
  }
  return files;
}

struct SimulateArgs {
  std::string gcode;
  std::string noise;
  double sample_rate = 25000.0;
  std::string prefix = "capture";
  bool csv = false;
};

int cmd_simulate(const Globals& g, const SimulateArgs& a) {
  Profile profile = load_profile(g);
  pcsd_noise* n = nullptr;
  if (a.noise.empty()) check(pcsd_noise_default(&n), "noise");
  else check(pcsd_noise_load(a.noise.c_str(), &n), "noise");
  Noise noise(n);

  print_config("command", "simulate");
  print_config("gcode", a.gcode);
  print_config("seed", std::to_string(g.seed));
  print_config("out", g.out);
  print_config("prefix", a.prefix);
  print_config("sample_rate", std::to_string(a.sample_rate));
  print_described("profile.", pcsd_profile_describe(profile.get()));
  print_described("noise.", pcsd_noise_describe(noise.get()));

  Program program = load_program(a.gcode);
  pcsd_trace* raw[PCSD_MOTOR_COUNT] = {};
  check(pcsd_simulate(program.get(), profile.get(), noise.get(), g.seed, a.sample_rate, raw), "simulate");
  std::vector<Trace> traces;
  for (auto* t : raw) traces.emplace_back(t);
  for (const auto& t : traces) {
    const std::string motor = pcsd_motor_name(pcsd_trace_motor(t.get()));
    const auto path = out_path(g, a.prefix + "_" + motor + ".ptrc");
    check(pcsd_trace_save(t.get(), path.c_str()), "save");
    std::cout << "wrote " << path.string() << " samples=" << pcsd_trace_length(t.get())
              << " trigger_index=" << pcsd_trace_trigger_index(t.get()) << "\n";
    if (a.csv) {
      const auto csv = out_path(g, a.prefix + "_" + motor + ".csv");
      check(pcsd_trace_export_csv(t.get(), csv.c_str()), "export");
      std::cout << "wrote " << csv.string() << "\n";
    }
  }
  return 0;
}

struct AttackArgs {
  std::string gcode;
  std::string kind;
  std::size_t layer = 0;
  std::size_t position = 0;
  std::string payload;
  std::size_t pair = 0;
  bool has_pair = false;
  std::string output = "attacked.gcode";
};

int cmd_attack(const Globals& g, const AttackArgs& a) {
  pcsd_attack spec{};
  if (a.kind == "insert") spec.kind = PCSD_ATTACK_INSERT;
  else if (a.kind == "delete") spec.kind = PCSD_ATTACK_DELETE;
  else if (a.kind == "reorder") spec.kind = PCSD_ATTACK_REORDER;
  else if (a.kind == "void") spec.kind = PCSD_ATTACK_VOID;
  else throw Failure{"unknown attack kind '" + a.kind + "'"};
  if (spec.kind == PCSD_ATTACK_INSERT && a.payload.empty()) throw Failure{"insert needs --payload"};
  if (spec.kind == PCSD_ATTACK_REORDER && !a.has_pair) throw Failure{"reorder needs --pair"};
  spec.layer = a.layer;
  spec.position = a.position;
  spec.payload = a.payload.empty() ? nullptr : a.payload.c_str();
  spec.pair_offset = a.pair;

  const auto path = out_path(g, a.output);
  print_config("command", "attack");
  print_config("gcode", a.gcode);
  print_config("kind", a.kind);
  print_config("layer", std::to_string(a.layer));
  print_config("position", std::to_string(a.position));
  if (spec.kind == PCSD_ATTACK_INSERT) print_config("payload", a.payload);
  if (spec.kind == PCSD_ATTACK_REORDER) print_config("pair", std::to_string(a.pair));
  print_config("output", path.string());

  Program program = load_program(a.gcode);
  pcsd_program* raw = nullptr;
  check(pcsd_program_attack(program.get(), &spec, &raw), "attack");
  Program mutated(raw);
  check(pcsd_program_save(mutated.get(), path.c_str()), "save");
  std::cout << "commands " << pcsd_program_command_count(program.get()) << " -> "
            << pcsd_program_command_count(mutated.get()) << "\n";
  std::cout << "wrote " << path.string() << "\n";
  return 0;
}

struct BaselineArgs {
  std::vector<std::string> captures;
  std::size_t window = 20;
  std::string prefix = "baseline";
};

int cmd_baseline(const Globals& g, const BaselineArgs& a) {
  const auto files = expand(a.captures);
  print_config("command", "baseline");
  print_config("captures", std::to_string(files.size()));
  print_config("window", std::to_string(a.window));
  print_config("out", g.out);
  if (files.size() < 2) throw Failure{"a baseline needs at least 2 captures, got " + std::to_string(files.size())};
  std::vector<Trace> traces;
  std::vector<const pcsd_trace*> views;
  for (const auto& f : files) {
    pcsd_trace* t = nullptr;
    check(pcsd_trace_load(f.c_str(), &t), f);
    traces.emplace_back(t);
    views.push_back(t);
    if (pcsd_trace_motor(t) != pcsd_trace_motor(views.front())) {
      throw Failure{"captures mix motors " + std::string(pcsd_motor_name(pcsd_trace_motor(views.front()))) + " and " +
                    pcsd_motor_name(pcsd_trace_motor(t)) + " (" + f + ")"};
    }
  }
  pcsd_baseline* b = nullptr;
  check(pcsd_baseline_build(views.data(), views.size(), a.window, &b), "baseline");
  Baseline baseline(b);
  const std::string motor = pcsd_motor_name(pcsd_baseline_motor(b));
  const auto path = out_path(g, a.prefix + "_" + motor + ".ptrc");
  check(pcsd_baseline_save(b, path.c_str()), "save");
  std::cout << "wrote " << path.string() << " motor=" << motor << " source_count=" << pcsd_baseline_source_count(b)
            << " samples=" << pcsd_baseline_length(b) << " peak_sd=" << pcsd_baseline_peak_sd(b) << "\n";
  return 0;
}

struct DetectArgs {
  std::vector<std::string> captures;
  std::vector<std::string> baselines;
  pcsd_detection_config config{};
  bool series = false;
  std::size_t decimation = 250;
};

int cmd_detect(const Globals& g, const DetectArgs& a) {
  const auto capture_files = expand(a.captures);
  const auto baseline_files = expand(a.baselines);
  print_config("command", "detect");
  print_config("window", std::to_string(a.config.window));
  print_config("margin", std::to_string(a.config.margin));
  print_config("run_requirement", std::to_string(a.config.run_requirement));
  print_config("out", g.out);
  std::vector<Trace> traces;
  std::vector<const pcsd_trace*> tv;
  for (const auto& f : capture_files) {
    pcsd_trace* t = nullptr;
    check(pcsd_trace_load(f.c_str(), &t), f);
    traces.emplace_back(t);
    tv.push_back(t);
  }
  std::vector<Baseline> baselines;
  std::vector<const pcsd_baseline*> bv;
  for (const auto& f : baseline_files) {
    pcsd_baseline* b = nullptr;
    check(pcsd_baseline_load(f.c_str(), &b), f);
    baselines.emplace_back(b);
    bv.push_back(b);
  }
  pcsd_report reports[PCSD_MOTOR_COUNT];
  pcsd_verdict overall = PCSD_BENIGN;
  const char* text = nullptr;
  const std::string series_dir = a.series ? out_path(g, "series").string() : std::string();
  check(pcsd_detect_print(tv.data(), tv.size(), bv.data(), bv.size(), &a.config,
                          a.series ? series_dir.c_str() : nullptr, a.decimation, reports, &overall, &text),
        "detect");
  std::cout << text;
  return overall == PCSD_MALICIOUS ? 1 : 0;
}

struct ExperimentArgs {
  std::string config;
  bool seed_given = false;
};

int cmd_experiment(const Globals& g, const ExperimentArgs& a) {
  pcsd_experiment* e = nullptr;
  if (a.config.empty()) check(pcsd_experiment_default(&e), "experiment");
  else check(pcsd_experiment_load(a.config.c_str(), &e), "experiment");
  Experiment experiment(e);
  if (a.seed_given) check(pcsd_experiment_set_seed(e, g.seed), "seed");
  if (!g.profile.empty()) {
    Profile profile = load_profile(g);
    check(pcsd_experiment_set_profile(e, profile.get()), "profile");
  }
  print_config("command", "experiment");
  print_config("config_file", a.config.empty() ? "(defaults)" : a.config);
  print_config("out", g.out);
  print_described("", pcsd_experiment_describe(e));
  fs::create_directories(g.out);
  pcsd_matrix* m = nullptr;
  check(pcsd_experiment_run(e, g.out.c_str(), &m), "experiment");
  Matrix matrix(m);
  std::cout << pcsd_matrix_text(m);
  std::istringstream notes(pcsd_matrix_notes(m));
  for (std::string line; std::getline(notes, line);) std::cout << "# " << line << "\n";
  std::cout << "wrote " << (fs::path(g.out) / "matrix.txt").string() << "\n";
  return 0;
}

int cmd_benchmark(const Globals& g, const std::string& output) {
  const auto path = out_path(g, output);
  print_config("command", "benchmark");
  print_config("output", path.string());
  Program program = load_program("benchmark");
  check(pcsd_program_save(program.get(), path.c_str()), "save");
  std::cout << "wrote " << path.string() << " commands=" << pcsd_program_command_count(program.get())
            << " layers=" << pcsd_program_layer_count(program.get()) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Power side-channel sabotage detection for FDM printing"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(pcsd_version()));

  Globals g;
  app.add_option("--seed", g.seed, "Noise seed")->capture_default_str();
  app.add_option("--profile", g.profile, "Printer profile config file");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate the four motor captures of a print");
  simulate->add_option("gcode", sim.gcode, "G-code file, or 'benchmark'")->required();
  simulate->add_option("--noise", sim.noise, "Noise model config file");
  simulate->add_option("--sample-rate", sim.sample_rate, "Samples per second")->capture_default_str();
  simulate->add_option("--prefix", sim.prefix, "Capture file name prefix")->capture_default_str();
  simulate->add_flag("--csv", sim.csv, "Also export time,amps CSV files");

  AttackArgs atk;
  auto* attack = app.add_subcommand("attack", "Write a mutated copy of a G-code program");
  attack->add_option("gcode", atk.gcode, "G-code file, or 'benchmark'")->required();
  attack->add_option("--kind", atk.kind, "insert | delete | reorder | void")->required();
  attack->add_option("--layer", atk.layer, "Layer index")->required();
  attack->add_option("--position", atk.position, "Command offset within the layer")->capture_default_str();
  attack->add_option("--payload", atk.payload, "Inserted G-code line");
  auto* pair_opt = attack->add_option("--pair", atk.pair, "Second offset for reorder");
  attack->add_option("--output", atk.output, "Output G-code file")->capture_default_str();

  BaselineArgs base;
  auto* baseline = app.add_subcommand("baseline", "Build a golden baseline from captures of one motor");
  baseline->add_option("captures", base.captures, "Capture files or glob patterns")->required();
  baseline->add_option("--window", base.window, "Moving-average window")->capture_default_str();
  baseline->add_option("--prefix", base.prefix, "Baseline file name prefix")->capture_default_str();

  DetectArgs det;
  pcsd_detection_config_default(&det.config);
  auto* detect = app.add_subcommand("detect", "Classify a print against golden baselines");
  detect->add_option("--capture", det.captures, "Capture files (one per motor)")->required();
  detect->add_option("--baseline", det.baselines, "Baseline files (one per motor)")->required();
  detect->add_option("--window", det.config.window, "Moving-average window")->capture_default_str();
  detect->add_option("--margin", det.config.margin, "Amps above the baseline peak sd")->capture_default_str();
  detect->add_option("--run-requirement", det.config.run_requirement, "Contiguous samples for a Malicious verdict")
      ->capture_default_str();
  detect->add_flag("--series", det.series, "Write excess series CSVs under <out>/series");
  detect->add_option("--decimation", det.decimation, "Series decimation")->capture_default_str();

  ExperimentArgs exp;
  auto* experiment = app.add_subcommand("experiment", "Reproduce the detectability matrix");
  experiment->add_option("config", exp.config, "Experiment config file (defaults when omitted)");

  std::string bench_output = "benchmark.gcode";
  auto* bench = app.add_subcommand("benchmark", "Write the benchmark cube G-code");
  bench->add_option("--output", bench_output, "Output G-code file")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    if (*simulate) return cmd_simulate(g, sim);
    if (*attack) {
      atk.has_pair = pair_opt->count() > 0;
      return cmd_attack(g, atk);
    }
    if (*baseline) return cmd_baseline(g, base);
    if (*detect) return cmd_detect(g, det);
    if (*experiment) {
      exp.seed_given = app.get_option("--seed")->count() > 0;
      return cmd_experiment(g, exp);
    }
    if (*bench) return cmd_benchmark(g, bench_output);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
