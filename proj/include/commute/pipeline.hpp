#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "commute/config.hpp"
#include "commute/filters.hpp"
#include "commute/geo.hpp"
#include "commute/homework.hpp"
#include "commute/portfolio.hpp"
#include "commute/synth.hpp"
#include "commute/timing.hpp"

namespace commute {

struct FitWindow {
  TimeOfDay start = 0;
  TimeOfDay end = kSecondsPerDay;
};

struct AnalysisConfig {
  std::filesystem::path cdr;
  std::filesystem::path gps;
  std::filesystem::path towers;
  std::filesystem::path output_dir = "out";
  std::optional<std::filesystem::path> reference_distances;  // distance_km column of another run
  std::string region_name = "region";

  FilterConfig filters;
  DayNightWindow day_night;
  double share_threshold = 0.5;
  CommuteDistanceOptions distance;
  GyrationWeighting gyration = GyrationWeighting::dwell;
  double distance_bin_km = 1.0;
  int rank_curve_max_rank = 0;  // 0 keeps every rank

  TimingConfig timing;
  DistanceBins timing_bins = DistanceBins::timing_preset();
  DistanceBins duration_bins = DistanceBins::duration_preset();
  FitWindow morning_fit{5 * kSecondsPerHour, 10 * kSecondsPerHour};
  FitWindow evening_fit{16 * kSecondsPerHour, 23 * kSecondsPerHour};

  double gps_cell_km = 0.5;

  bool gps_mode() const { return !gps.empty(); }
  // Structural checks only; input paths are checked when opened.
  void validate() const;
};

AnalysisConfig analysis_config_from(KeyValues& kv);
// Rejects unknown keys.
AnalysisConfig parse_analysis_config(std::istream& in);
KeyValues to_key_values(const AnalysisConfig& cfg);

struct RunReport {
  // Ordered filter stages; counts are non-increasing down the list.
  std::vector<std::pair<std::string, std::size_t>> stages;
  ParseReport parse;
  std::size_t morning_samples = 0;
  std::size_t evening_samples = 0;
  std::size_t flagged_samples = 0;
  double home_work_fraction = 0.0;  // of parsed users
  double sample_fraction = 0.0;
  std::vector<std::pair<std::string, double>> stage_seconds;

  std::size_t stage(std::string_view name) const;
  bool monotone() const;
};

struct UserResult {
  std::string user_id;
  std::string status;
  std::optional<HomeWorkAssignment> assignment;
  std::optional<CommuteDistanceRecord> distance;
  std::optional<double> gyration_km;
};

struct PipelineResult {
  TowerRegistry registry;  // towers, or visited grid cells in GPS mode
  std::vector<UserResult> users;  // ascending user_id
  std::vector<DwellPortfolio> portfolios;
  std::vector<int> observed_days;  // parallel to portfolios
  RankCurve day_curve;
  RankCurve night_curve;
  std::vector<CommuteSample> samples;  // ordered by user, day, leg
  RunReport report;

  bool empty_input() const { return report.parse.rows == 0; }
};

// In-memory analysis of call records against a registry.
PipelineResult analyze_calls(const std::vector<UserEvents>& users, const TowerRegistry& registry,
                             const AnalysisConfig& cfg, ParseReport parse = {});
// Speed screen, grid snapping, then the call-record analysis over cells.
PipelineResult analyze_gps(const std::vector<VehicleTrack>& vehicles, const AnalysisConfig& cfg,
                           ParseReport parse = {});

// Loads the configured inputs, analyzes, and writes every table into
// cfg.output_dir. Stage errors are rethrown prefixed with the stage name.
PipelineResult run_pipeline(const AnalysisConfig& cfg);

void emit_tables(const PipelineResult& result, const AnalysisConfig& cfg,
                 const std::filesystem::path& outdir);

synth::AnalysisOutput to_analysis_output(const PipelineResult& result);
// Rebuilds the same view from user_status.csv, home_work.csv and
// commute_samples.csv in an output directory.
synth::AnalysisOutput read_analysis_output(const std::filesystem::path& outdir);

}  // namespace commute
