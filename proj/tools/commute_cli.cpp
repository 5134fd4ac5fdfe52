// commute_cli: analyze call records or GPS traces, generate synthetic worlds,
// and score an analysis against a world's ground truth.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "commute/config.hpp"
#include "commute/csv.hpp"
#include "commute/error.hpp"
#include "commute/pipeline.hpp"
#include "commute/synth.hpp"

namespace fs = std::filesystem;
using namespace commute;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct KeyFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
};

// One --key flag per config key; flags override the config file.
void add_key_flags(CLI::App& cmd, KeyFlags& flags, const KeyValues& defaults,
                   std::initializer_list<const char*> extra) {
  cmd.add_option("-c,--config", flags.config_path, "key = value config file")->check(CLI::ExistingFile);
  auto add = [&](const std::string& key, const std::string& fallback) {
    auto* opt = cmd.add_option("--" + key, flags.values[key], key);
    if (!fallback.empty()) opt->description("default: " + fallback);
  };
  for (const auto& [key, value] : defaults.entries()) add(key, value);
  for (const char* key : extra) {
    if (!defaults.has(key)) add(key, "");
  }
}

KeyValues collect(const CLI::App& cmd, const KeyFlags& flags) {
  KeyValues kv;
  if (!flags.config_path.empty()) {
    std::ifstream in(flags.config_path);
    if (!in) throw ConfigError("cannot read " + flags.config_path);
    kv = KeyValues::parse(in);
  }
  KeyValues overrides;
  for (const auto& [key, value] : flags.values) {
    if (cmd.count("--" + key) > 0) overrides.set(key, value);
  }
  kv.merge(overrides);
  return kv;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

int run_analyze(const CLI::App& cmd, const KeyFlags& flags) {
  auto kv = collect(cmd, flags);
  const auto cfg = analysis_config_from(kv);
  kv.reject_unconsumed("analysis config");

  const auto result = run_pipeline(cfg);
  for (const auto& [stage, seconds] : result.report.stage_seconds) {
    std::cerr << "stage " << stage << ": " << csv::fixed(seconds, 3) << " s\n";
  }
  if (result.empty_input()) {
    std::cerr << "error: input contains no records; wrote an empty report to " << cfg.output_dir.string()
              << '\n';
    return kExitData;
  }
  for (const auto& [stage, count] : result.report.stages) std::cout << stage << ' ' << count << '\n';
  std::cout << "samples " << result.samples.size() << '\n';
  return 0;
}

int run_synth(const CLI::App& cmd, const KeyFlags& flags, const fs::path& outdir) {
  auto kv = collect(cmd, flags);
  const auto cfg = synth::world_config_from(kv);
  kv.reject_unconsumed("world config");

  const auto world = synth::generate_world(cfg);
  const auto sim = synth::simulate_calls(world);
  fs::create_directories(outdir);
  {
    auto out = open_out(outdir / "towers.csv");
    synth::write_towers_csv(world.towers, out);
  }
  {
    auto out = open_out(outdir / "cdr.csv");
    synth::write_cdr_csv(sim.calls, world.towers, out);
  }
  if (cfg.regime == synth::Regime::car_only) {
    auto out = open_out(outdir / "gps.csv");
    synth::write_gps_csv(sim.gps, out);
  }
  {
    auto out = open_out(outdir / "ground_truth.csv");
    synth::write_ground_truth_csv(world.truth, out);
  }
  {
    auto out = open_out(outdir / "trips.csv");
    synth::write_trips_csv(world.truth, out);
  }
  {
    auto out = open_out(outdir / "world.conf");
    const auto echo = synth::to_key_values(cfg);
    for (const auto& [key, value] : echo.entries()) out << key << " = " << value << '\n';
  }
  std::size_t events = 0;
  for (const auto& u : sim.calls) events += u.events.size();
  std::cout << "towers " << world.towers.size() << "\nagents " << world.agents.size() << "\nevents "
            << events << '\n';
  return 0;
}

int run_evaluate(const fs::path& world_dir, const fs::path& analysis_dir, const std::string& report_path) {
  std::ifstream agents(world_dir / "ground_truth.csv"), trips(world_dir / "trips.csv");
  if (!agents || !trips) {
    throw ConfigError("world directory " + world_dir.string() + " lacks ground_truth.csv or trips.csv");
  }
  const auto truth = synth::read_ground_truth(agents, trips);
  const auto report = synth::evaluate_recovery(read_analysis_output(analysis_dir), truth);
  if (report_path.empty() || report_path == "-") {
    synth::write_recovery_report(report, std::cout);
  } else {
    auto out = open_out(report_path);
    synth::write_recovery_report(report, out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Commute analysis from call records and GPS traces"};
  app.require_subcommand(1);

  KeyFlags analyze_flags;
  auto* analyze = app.add_subcommand("analyze", "run the analysis pipeline and write every table");
  add_key_flags(*analyze, analyze_flags, to_key_values(AnalysisConfig{}),
                {"cdr", "gps", "towers", "reference_distances", "crow_fly_factor"});

  KeyFlags synth_flags;
  fs::path synth_out;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic world with ground truth");
  synth_cmd->add_option("-o,--out", synth_out, "output directory")->required();
  add_key_flags(*synth_cmd, synth_flags, synth::to_key_values(synth::WorldConfig{}), {"call_rate"});

  fs::path world_dir, analysis_dir;
  std::string report_path;
  auto* evaluate = app.add_subcommand("evaluate", "score an analysis against ground truth");
  evaluate->add_option("--world", world_dir, "directory written by synth")->required();
  evaluate->add_option("--analysis", analysis_dir, "output directory written by analyze")->required();
  evaluate->add_option("-o,--out", report_path, "report file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*analyze) return run_analyze(*analyze, analyze_flags);
    if (*synth_cmd) return run_synth(*synth_cmd, synth_flags, synth_out);
    return run_evaluate(world_dir, analysis_dir, report_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
