#include "commute/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "commute/csv.hpp"
#include "commute/error.hpp"
#include "commute/stats.hpp"

namespace commute {
namespace {

using Clock = std::chrono::steady_clock;

class StageTimer {
 public:
  explicit StageTimer(RunReport& report) : report_(report) {}
  void lap(std::string name) {
    const auto now = Clock::now();
    report_.stage_seconds.emplace_back(std::move(name),
                                       std::chrono::duration<double>(now - last_).count());
    last_ = now;
  }

 private:
  RunReport& report_;
  Clock::time_point last_ = Clock::now();
};

FitWindow parse_window(std::string_view key, std::string_view text) {
  const auto dash = text.find('-');
  if (dash == std::string_view::npos) throw ConfigError(std::string(key) + " must be HH:MM-HH:MM");
  const auto start = parse_time_of_day(csv::trim(text.substr(0, dash)));
  const auto end = parse_time_of_day(csv::trim(text.substr(dash + 1)));
  if (!start || !end || *end <= *start) {
    throw ConfigError(std::string(key) + " must be an increasing HH:MM-HH:MM range");
  }
  return {*start, *end};
}

std::string window_text(TimeOfDay start, TimeOfDay end) {
  return format_time_of_day(start) + "-" + format_time_of_day(end);
}

TimeOfDay parse_clock(std::string_view key, std::string_view text) {
  const auto t = parse_time_of_day(text);
  if (!t) throw ConfigError(std::string(key) + " must be HH:MM");
  return *t;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

std::ifstream open_input(const std::filesystem::path& path, std::string_view what) {
  if (!std::filesystem::is_regular_file(path)) {
    throw ConfigError(std::string(what) + " input '" + path.string() + "' does not exist");
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  return in;
}

template <class F>
auto in_stage(std::string_view stage, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(stage) + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(std::string(stage) + ": " + e.what());
  }
}

std::string opt_fixed(const std::optional<double>& v, int decimals) {
  return v ? csv::fixed(*v, decimals) : std::string();
}

double minutes_of_day(LocalTime t) { return static_cast<double>(time_of_day(t)) / kSecondsPerMinute; }

Proxy timing_proxy(Leg leg) { return leg == Leg::morning ? Proxy::depart : Proxy::arrive; }

// Everything after ingestion; `pre` holds users removed before the call
// pipeline (GPS speed screen) with their status.
PipelineResult analyze_impl(const std::vector<UserEvents>& users, TowerRegistry registry,
                            const AnalysisConfig& cfg, ParseReport parse,
                            std::vector<std::pair<std::string, std::size_t>> pre_stages,
                            std::vector<std::pair<std::string, std::string>> pre_rejects) {
  PipelineResult result;
  result.registry = std::move(registry);
  const TowerRegistry& reg = result.registry;
  auto& report = result.report;
  report.parse = parse;
  report.stages = std::move(pre_stages);
  StageTimer timer(report);

  struct Work {
    std::vector<CallEvent> weekday;
    std::vector<DwellInterval> intervals;
  };
  std::vector<Work> work(users.size());
  std::vector<UserResult> out(users.size());
  for (std::size_t i = 0; i < users.size(); ++i) out[i].user_id = users[i].user_id;

  std::size_t n_weekday = 0, n_dwell = 0, n_sparse = 0, n_hw = 0, n_distance = 0, n_samples = 0;

  for (std::size_t i = 0; i < users.size(); ++i) {
    work[i].weekday = calendar_filter(users[i].events, cfg.filters);
    if (work[i].weekday.empty()) {
      out[i].status = "no_weekday_events";
      continue;
    }
    ++n_weekday;
    const UserEvents weekday{users[i].user_id, work[i].weekday};
    const auto track = spatial_noise_filter(resample_uniform(weekday, cfg.filters), reg, cfg.filters);
    work[i].intervals = gap_segmenter(track, cfg.filters);
    if (work[i].intervals.empty()) {
      out[i].status = "no_dwell";
      continue;
    }
    ++n_dwell;
  }
  timer.lap("filter");

  const auto sparse = find_sparse_towers(reg, cfg.filters);
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (!out[i].status.empty()) continue;
    if (!passes_sparse_screen(work[i].intervals, sparse, cfg.filters)) {
      out[i].status = "sparse_tower";
      continue;
    }
    ++n_sparse;
    auto portfolio = accumulate_dwell(users[i].user_id, work[i].intervals, reg, cfg.day_night);
    result.observed_days.push_back(count_observed_days(work[i].intervals));

    auto hw = infer_home_work(portfolio, cfg.share_threshold);
    result.portfolios.push_back(std::move(portfolio));
    if (!hw) {
      out[i].status = "rejected:" + std::string(reject_name(hw.reason()));
      continue;
    }
    ++n_hw;
    out[i].assignment = *hw;
    out[i].distance = commute_distance(*hw, reg, cfg.distance);
    if (!out[i].distance) {
      out[i].status = "short_commute";
      continue;
    }
    ++n_distance;
    out[i].gyration_km = radius_of_gyration(work[i].intervals, reg, cfg.gyration);
  }
  result.day_curve = population_rank_curve(result.portfolios, Period::Day, result.observed_days, reg,
                                           cfg.rank_curve_max_rank);
  result.night_curve = population_rank_curve(result.portfolios, Period::Night, result.observed_days,
                                             reg, cfg.rank_curve_max_rank);
  timer.lap("home_work");

  for (std::size_t i = 0; i < users.size(); ++i) {
    if (!out[i].status.empty()) continue;
    const auto& events = work[i].weekday;
    const auto& hw = *out[i].assignment;
    const double km = out[i].distance->distance_km;
    std::size_t emitted = 0;
    for (std::size_t lo = 0; lo < events.size();) {
      const auto day = day_index(events[lo].time);
      std::size_t hi = lo;
      while (hi < events.size() && day_index(events[hi].time) == day) ++hi;
      const std::span<const CallEvent> day_events(events.data() + lo, hi - lo);
      if (is_frequent_caller(day_events, cfg.timing.morning_window, cfg.timing.min_call_rate)) {
        if (auto s = morning_commute(out[i].user_id, day_events, hw, km, cfg.timing)) {
          result.samples.push_back(*s);
          ++emitted;
          ++report.morning_samples;
        }
      }
      if (is_frequent_caller(day_events, cfg.timing.evening_window, cfg.timing.min_call_rate)) {
        if (auto s = evening_commute(out[i].user_id, day_events, hw, km, cfg.timing)) {
          report.flagged_samples += s->flagged;
          result.samples.push_back(*s);
          ++emitted;
          ++report.evening_samples;
        }
      }
      lo = hi;
    }
    if (emitted == 0) {
      out[i].status = "no_commute_samples";
    } else {
      out[i].status = "ok";
      ++n_samples;
    }
  }
  timer.lap("timing");

  report.stages.emplace_back("users_parsed", users.size());
  report.stages.emplace_back("users_weekday", n_weekday);
  report.stages.emplace_back("users_with_dwell", n_dwell);
  report.stages.emplace_back("users_sparse_ok", n_sparse);
  report.stages.emplace_back("users_home_work", n_hw);
  report.stages.emplace_back("users_commute_distance", n_distance);
  report.stages.emplace_back("users_with_samples", n_samples);
  if (!users.empty()) {
    report.home_work_fraction = static_cast<double>(n_hw) / static_cast<double>(users.size());
    report.sample_fraction = static_cast<double>(n_samples) / static_cast<double>(users.size());
  }

  for (auto& [id, status] : pre_rejects) out.push_back(UserResult{id, status, {}, {}, {}});
  std::sort(out.begin(), out.end(),
            [](const UserResult& a, const UserResult& b) { return a.user_id < b.user_id; });
  result.users = std::move(out);
  return result;
}

void write_rank_curve(const RankCurve& curve, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "rank,mean_dwell_seconds\n";
  for (const auto& p : curve.points) out << p.rank << ',' << csv::fixed(p.mean_dwell, 6) << '\n';
}

void write_histogram(const std::vector<HistogramBin>& bins, std::string_view header,
                     const std::filesystem::path& path) {
  auto out = open_output(path);
  out << header << '\n';
  for (const auto& b : bins) {
    out << csv::fixed(b.lo, 3) << ',' << csv::fixed(b.hi, 3) << ',' << b.count << ','
        << csv::fixed(b.density, 9) << '\n';
  }
}

void write_cdf(const std::vector<CdfPoint>& cdf, std::string_view header,
               const std::filesystem::path& path) {
  auto out = open_output(path);
  out << header << '\n';
  for (const auto& p : cdf) out << csv::fixed(p.x, 6) << ',' << csv::fixed(p.cumulative, 9) << '\n';
}

std::vector<double> read_reference_distances(const std::filesystem::path& path) {
  auto in = open_input(path, "reference_distances");
  csv::LineReader reader(in);
  std::string line;
  if (!reader.next(line)) throw DataError("reference distances: empty file");
  const auto header = csv::split(line);
  const auto column = std::find(header.begin(), header.end(), "distance_km");
  if (column == header.end()) throw DataError("reference distances: no distance_km column");
  const auto index = static_cast<std::size_t>(column - header.begin());
  std::vector<double> values;
  while (reader.next(line)) {
    const auto fields = csv::split(line);
    if (index >= fields.size() || csv::trim(fields[index]).empty()) continue;
    const auto v = csv::parse_double(fields[index]);
    if (!v) {
      throw DataError("reference distances line " + std::to_string(reader.line_number()) +
                      ": malformed distance");
    }
    values.push_back(*v);
  }
  return values;
}

struct Peak {
  std::size_t n = 0;
  std::optional<double> value;
};

}  // namespace

void AnalysisConfig::validate() const {
  if (cdr.empty() == gps.empty()) throw ConfigError("exactly one of cdr or gps input must be given");
  if (!gps_mode() && towers.empty()) throw ConfigError("towers input is required with cdr input");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  if (region_name.empty() || region_name.find(',') != std::string::npos) {
    throw ConfigError("region_name must be non-empty and free of commas");
  }
  filters.validate();
  day_night.validate();
  timing.validate();
  timing_bins.validate();
  duration_bins.validate();
  if (!(share_threshold >= 0.0 && share_threshold < 1.0)) {
    throw ConfigError("share_threshold must lie in [0, 1)");
  }
  if (!(distance.min_commute_km >= 0.0)) throw ConfigError("min_commute_km must not be negative");
  if (distance.crow_fly_factor && !(*distance.crow_fly_factor > 0.0)) {
    throw ConfigError("crow_fly_factor must be positive");
  }
  if (!(distance_bin_km > 0.0)) throw ConfigError("distance_bin_km must be positive");
  if (rank_curve_max_rank < 0) throw ConfigError("rank_curve_max_rank must not be negative");
  if (!(gps_cell_km > 0.0)) throw ConfigError("gps_cell_km must be positive");
}

AnalysisConfig analysis_config_from(KeyValues& kv) {
  AnalysisConfig cfg;
  if (auto v = kv.take("cdr")) cfg.cdr = *v;
  if (auto v = kv.take("gps")) cfg.gps = *v;
  if (auto v = kv.take("towers")) cfg.towers = *v;
  if (auto v = kv.take("output_dir")) cfg.output_dir = *v;
  if (auto v = kv.take("reference_distances")) cfg.reference_distances = *v;
  if (auto v = kv.take("region_name")) cfg.region_name = *v;
  cfg.filters = filter_config_from(kv);
  if (auto v = kv.take("day_start")) cfg.day_night.day_start = parse_clock("day_start", *v);
  if (auto v = kv.take("night_start")) cfg.day_night.night_start = parse_clock("night_start", *v);
  if (auto v = kv.take("share_threshold")) cfg.share_threshold = config_double("share_threshold", *v);
  if (auto v = kv.take("min_commute_km")) cfg.distance.min_commute_km = config_double("min_commute_km", *v);
  if (auto v = kv.take("crow_fly_factor"); v && !v->empty()) {
    cfg.distance.crow_fly_factor = config_double("crow_fly_factor", *v);
  }
  if (auto v = kv.take("gyration_weighting")) {
    if (*v == "dwell") cfg.gyration = GyrationWeighting::dwell;
    else if (*v == "visits") cfg.gyration = GyrationWeighting::visits;
    else throw ConfigError("gyration_weighting must be dwell or visits");
  }
  if (auto v = kv.take("distance_bin_km")) cfg.distance_bin_km = config_double("distance_bin_km", *v);
  if (auto v = kv.take("rank_curve_max_rank")) {
    cfg.rank_curve_max_rank = static_cast<int>(config_int("rank_curve_max_rank", *v));
  }
  if (auto v = kv.take("noon")) cfg.timing.noon = parse_clock("noon", *v);
  if (auto v = kv.take("morning_window")) {
    const auto w = parse_window("morning_window", *v);
    cfg.timing.morning_window = {w.start, w.end};
  }
  if (auto v = kv.take("evening_window")) {
    const auto w = parse_window("evening_window", *v);
    cfg.timing.evening_window = {w.start, w.end};
  }
  if (auto v = kv.take("min_call_rate")) cfg.timing.min_call_rate = config_double("min_call_rate", *v);
  if (auto v = kv.take("plausibility_cutoff")) {
    cfg.timing.plausibility_cutoff = parse_clock("plausibility_cutoff", *v);
  }
  if (auto v = kv.take("exclude_flagged")) cfg.timing.exclude_flagged = config_bool("exclude_flagged", *v);
  if (auto v = kv.take("timing_bins")) cfg.timing_bins = DistanceBins::parse(*v);
  if (auto v = kv.take("duration_bins")) cfg.duration_bins = DistanceBins::parse(*v);
  if (auto v = kv.take("morning_fit_window")) cfg.morning_fit = parse_window("morning_fit_window", *v);
  if (auto v = kv.take("evening_fit_window")) cfg.evening_fit = parse_window("evening_fit_window", *v);
  if (auto v = kv.take("gps_cell_km")) cfg.gps_cell_km = config_double("gps_cell_km", *v);
  cfg.validate();
  return cfg;
}

AnalysisConfig parse_analysis_config(std::istream& in) {
  auto kv = KeyValues::parse(in);
  auto cfg = analysis_config_from(kv);
  kv.reject_unconsumed("analysis config");
  return cfg;
}

KeyValues to_key_values(const AnalysisConfig& cfg) {
  KeyValues kv = to_key_values(cfg.filters);
  if (!cfg.cdr.empty()) kv.set("cdr", cfg.cdr.string());
  if (!cfg.gps.empty()) kv.set("gps", cfg.gps.string());
  if (!cfg.towers.empty()) kv.set("towers", cfg.towers.string());
  kv.set("output_dir", cfg.output_dir.string());
  if (cfg.reference_distances) kv.set("reference_distances", cfg.reference_distances->string());
  kv.set("region_name", cfg.region_name);
  kv.set("day_start", format_time_of_day(cfg.day_night.day_start));
  kv.set("night_start", format_time_of_day(cfg.day_night.night_start));
  kv.set("share_threshold", csv::fixed(cfg.share_threshold, 6));
  kv.set("min_commute_km", csv::fixed(cfg.distance.min_commute_km, 6));
  if (cfg.distance.crow_fly_factor) kv.set("crow_fly_factor", csv::fixed(*cfg.distance.crow_fly_factor, 6));
  kv.set("gyration_weighting", cfg.gyration == GyrationWeighting::dwell ? "dwell" : "visits");
  kv.set("distance_bin_km", csv::fixed(cfg.distance_bin_km, 6));
  kv.set("rank_curve_max_rank", std::to_string(cfg.rank_curve_max_rank));
  kv.set("noon", format_time_of_day(cfg.timing.noon));
  kv.set("morning_window", window_text(cfg.timing.morning_window.start, cfg.timing.morning_window.end));
  kv.set("evening_window", window_text(cfg.timing.evening_window.start, cfg.timing.evening_window.end));
  kv.set("min_call_rate", csv::fixed(cfg.timing.min_call_rate, 6));
  kv.set("plausibility_cutoff", format_time_of_day(cfg.timing.plausibility_cutoff));
  kv.set("exclude_flagged", cfg.timing.exclude_flagged ? "true" : "false");
  kv.set("timing_bins", cfg.timing_bins.to_string());
  kv.set("duration_bins", cfg.duration_bins.to_string());
  kv.set("morning_fit_window", window_text(cfg.morning_fit.start, cfg.morning_fit.end));
  kv.set("evening_fit_window", window_text(cfg.evening_fit.start, cfg.evening_fit.end));
  kv.set("gps_cell_km", csv::fixed(cfg.gps_cell_km, 6));
  return kv;
}

std::size_t RunReport::stage(std::string_view name) const {
  for (const auto& [stage_name, count] : stages) {
    if (stage_name == name) return count;
  }
  throw Error("no stage named " + std::string(name));
}

bool RunReport::monotone() const {
  for (std::size_t i = 1; i < stages.size(); ++i) {
    if (stages[i].second > stages[i - 1].second) return false;
  }
  return true;
}

PipelineResult analyze_calls(const std::vector<UserEvents>& users, const TowerRegistry& registry,
                             const AnalysisConfig& cfg, ParseReport parse) {
  return analyze_impl(users, registry, cfg, parse, {}, {});
}

PipelineResult analyze_gps(const std::vector<VehicleTrack>& vehicles, const AnalysisConfig& cfg,
                           ParseReport parse) {
  std::vector<std::pair<std::string, std::string>> rejected;
  std::vector<const VehicleTrack*> kept;
  for (const auto& v : vehicles) {
    if (speed_screen(v.points, cfg.filters).keep) {
      kept.push_back(&v);
    } else {
      rejected.emplace_back(v.vehicle_id, "speed_screen");
    }
  }

  GridSpec grid{{90.0, 180.0}, cfg.gps_cell_km};
  for (const auto* v : kept) {
    for (const auto& p : v->points) {
      grid.anchor.lat = std::min(grid.anchor.lat, p.position.lat);
      grid.anchor.lon = std::min(grid.anchor.lon, p.position.lon);
    }
  }

  std::vector<std::vector<GridCell>> cells(kept.size());
  std::set<std::pair<std::int64_t, std::int64_t>> visited;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    for (const auto& p : kept[i]->points) {
      const auto c = gps_to_grid(p.position, grid);
      cells[i].push_back(c);
      visited.emplace(c.row, c.col);
    }
  }
  TowerRegistry registry;
  std::map<std::pair<std::int64_t, std::int64_t>, LocationId> ids;
  for (const auto& [row, col] : visited) {
    const GridCell c{row, col};
    ids[{row, col}] = registry.add(grid_cell_id(c), grid_cell_center(c, grid));
  }

  std::vector<UserEvents> users;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    UserEvents u{kept[i]->vehicle_id, {}};
    for (std::size_t k = 0; k < cells[i].size(); ++k) {
      u.events.push_back(CallEvent{kept[i]->points[k].time, ids.at({cells[i][k].row, cells[i][k].col})});
    }
    users.push_back(std::move(u));
  }
  return analyze_impl(users, std::move(registry), cfg, parse,
                      {{"vehicles_parsed", vehicles.size()}, {"vehicles_speed_ok", kept.size()}},
                      std::move(rejected));
}

PipelineResult run_pipeline(const AnalysisConfig& cfg) {
  cfg.validate();
  const auto started = Clock::now();
  PipelineResult result;
  if (cfg.gps_mode()) {
    auto in = open_input(cfg.gps, "gps");
    auto data = in_stage("ingest", [&] { return parse_gps_stream(in); });
    const auto loaded = Clock::now();
    result = in_stage("analyze", [&] { return analyze_gps(data.vehicles, cfg, data.report); });
    result.report.stage_seconds.insert(result.report.stage_seconds.begin(),
                                       {"ingest", std::chrono::duration<double>(loaded - started).count()});
  } else {
    auto tower_in = open_input(cfg.towers, "towers");
    const auto registry = in_stage("ingest", [&] { return load_tower_registry(tower_in); });
    auto in = open_input(cfg.cdr, "cdr");
    auto data = in_stage("ingest", [&] { return parse_cdr_stream(in, registry); });
    const auto loaded = Clock::now();
    result = in_stage("analyze", [&] { return analyze_calls(data.users, registry, cfg, data.report); });
    result.report.stage_seconds.insert(result.report.stage_seconds.begin(),
                                       {"ingest", std::chrono::duration<double>(loaded - started).count()});
  }

  std::filesystem::create_directories(cfg.output_dir);
  const auto emit_start = Clock::now();
  in_stage("emit", [&] { emit_tables(result, cfg, cfg.output_dir); });
  result.report.stage_seconds.emplace_back("emit",
                                           std::chrono::duration<double>(Clock::now() - emit_start).count());

  // Wall-clock figures live apart from the deterministic tables.
  auto timing = open_output(cfg.output_dir / "run_timing.txt");
  for (const auto& [stage, seconds] : result.report.stage_seconds) {
    timing << "seconds." << stage << " = " << csv::fixed(seconds, 3) << '\n';
  }
  return result;
}

void emit_tables(const PipelineResult& result, const AnalysisConfig& cfg,
                 const std::filesystem::path& outdir) {
  const auto& reg = result.registry;
  const auto& report = result.report;

  write_rank_curve(result.day_curve, outdir / "fig1_day.csv");
  write_rank_curve(result.night_curve, outdir / "fig1_night.csv");

  {
    auto out = open_output(outdir / "user_status.csv");
    out << "user_id,status\n";
    for (const auto& u : result.users) out << u.user_id << ',' << u.status << '\n';
  }

  std::vector<CommuteDistanceRecord> records;
  {
    auto out = open_output(outdir / "home_work.csv");
    const bool corrected = cfg.distance.crow_fly_factor.has_value();
    out << "user_id,home_id,work_id,night_share,day_share,distance_km" << (corrected ? ",corrected_km" : "")
        << '\n';
    for (const auto& u : result.users) {
      if (!u.assignment) continue;
      out << u.user_id << ',' << reg.id(u.assignment->home) << ',' << reg.id(u.assignment->work) << ','
          << csv::fixed(u.assignment->night_share, 6) << ',' << csv::fixed(u.assignment->day_share, 6)
          << ',' << (u.distance ? csv::fixed(u.distance->distance_km, 6) : "");
      if (corrected) out << ',' << (u.distance ? opt_fixed(u.distance->corrected_km, 6) : "");
      out << '\n';
      if (u.distance) records.push_back(*u.distance);
    }
  }

  {
    auto summary = open_output(outdir / "distance_summary.csv");
    summary << "n,mean_km,mean_corrected_km\n";
    if (records.empty()) {
      summary << "0,,\n";
      write_histogram({}, "lo_km,hi_km,count,density", outdir / "distance_pdf.csv");
      write_cdf({}, "distance_km,cumulative", outdir / "distance_cdf.csv");
    } else {
      const auto dist = distance_population(records, cfg.distance_bin_km);
      std::optional<double> corrected_mean;
      if (cfg.distance.crow_fly_factor) corrected_mean = dist.mean_km * *cfg.distance.crow_fly_factor;
      summary << dist.n << ',' << csv::fixed(dist.mean_km, 6) << ',' << opt_fixed(corrected_mean, 6) << '\n';
      write_histogram(dist.pdf, "lo_km,hi_km,count,density", outdir / "distance_pdf.csv");
      write_cdf(dist.cdf, "distance_km,cumulative", outdir / "distance_cdf.csv");
    }
  }

  if (cfg.reference_distances) {
    std::vector<double> ours;
    for (const auto& r : records) ours.push_back(r.distance_km);
    const auto theirs = read_reference_distances(*cfg.reference_distances);
    auto out = open_output(outdir / "ks_distance.csv");
    out << "n1,n2,d_statistic,p_value\n";
    if (ours.empty() || theirs.empty()) {
      out << ours.size() << ',' << theirs.size() << ",,\n";
    } else {
      const auto ks = stats::ks_two_sample(ours, theirs);
      char p[32];
      std::snprintf(p, sizeof p, "%.6e", ks.p_value);
      out << ks.n1 << ',' << ks.n2 << ',' << csv::fixed(ks.d_statistic, 9) << ',' << p << '\n';
    }
  }

  {
    auto out = open_output(outdir / "gyration.csv");
    out << "user_id,distance_km,radius_of_gyration_km\n";
    std::vector<double> xs, ys;
    for (const auto& u : result.users) {
      if (!u.distance || !u.gyration_km) continue;
      out << u.user_id << ',' << csv::fixed(u.distance->distance_km, 6) << ','
          << csv::fixed(*u.gyration_km, 6) << '\n';
      xs.push_back(u.distance->distance_km);
      ys.push_back(*u.gyration_km);
    }
    auto corr = open_output(outdir / "gyration_correlation.csv");
    corr << "n,rho,p_value,p_method\n";
    try {
      const auto s = stats::spearman(xs, ys);
      char p[32];
      std::snprintf(p, sizeof p, "%.6e", s.p_value);
      corr << s.n << ',' << csv::fixed(s.rho, 6) << ',' << p << ',' << stats::method_name(s.method) << '\n';
    } catch (const DataError&) {
      corr << xs.size() << ",,,\n";
    }
  }

  {
    auto out = open_output(outdir / "commute_samples.csv");
    out << "user_id,date,leg,depart,arrive,duration_min,distance_km,flagged\n";
    for (const auto& s : result.samples) {
      out << s.user_id << ',' << format_date(s.day) << ',' << leg_name(s.leg) << ','
          << format_iso_local(s.depart) << ',' << format_iso_local(s.arrive) << ','
          << csv::fixed(s.duration_min, 3) << ',' << csv::fixed(s.distance_km, 6) << ','
          << (s.flagged ? 1 : 0) << '\n';
    }
  }

  auto fig4 = open_output(outdir / "fig4.csv");
  fig4 << "leg,bin,lo_km,hi_km,method,n,peak_minutes\n";
  auto table2 = open_output(outdir / "table2.csv");
  table2 << "region,leg,method,rho,p_value,n,p_method\n";
  auto s3 = open_output(outdir / "s3_fit.csv");
  s3 << "leg,bin,n,mu_minutes,sigma_minutes,window_lo_minutes,window_hi_minutes,fit_n\n";

  for (const Leg leg : {Leg::morning, Leg::evening}) {
    const std::string leg_text(leg_name(leg));
    const Proxy which = timing_proxy(leg);
    const FitWindow& fw = leg == Leg::morning ? cfg.morning_fit : cfg.evening_fit;
    const double fit_lo = static_cast<double>(fw.start) / kSecondsPerMinute;
    const double fit_hi = static_cast<double>(fw.end) / kSecondsPerMinute;

    const auto histograms = timing_distribution(result.samples, cfg.timing_bins, leg, which);
    for (std::size_t b = 0; b < histograms.size(); ++b) {
      write_histogram(histograms[b].buckets, "bucket_start_minutes,bucket_end_minutes,count,density",
                      outdir / ("fig3_" + leg_text + "_" + cfg.timing_bins.label(b) + ".csv"));
    }

    const auto minutes = proxy_minutes_by_bin(result.samples, cfg.timing_bins, leg, which);
    std::vector<Peak> medians(minutes.size()), gauss(minutes.size());
    for (std::size_t b = 0; b < minutes.size(); ++b) {
      const auto label = cfg.timing_bins.label(b);
      medians[b].n = gauss[b].n = minutes[b].size();
      if (!minutes[b].empty()) medians[b].value = stats::median_peak(minutes[b]);
      s3 << leg_text << ',' << label << ',' << minutes[b].size() << ',';
      try {
        const auto fit = stats::gaussian_fit_window(minutes[b], fit_lo, fit_hi);
        gauss[b].value = fit.mu;
        s3 << csv::fixed(fit.mu, 3) << ',' << csv::fixed(fit.sigma, 3) << ',' << csv::fixed(fit_lo, 1) << ','
           << csv::fixed(fit_hi, 1) << ',' << fit.n << '\n';
      } catch (const DataError&) {
        s3 << ",," << csv::fixed(fit_lo, 1) << ',' << csv::fixed(fit_hi, 1) << ",\n";
      }
    }

    // Pooled over every bin: the Q-Q diagnostic.
    std::vector<double> pooled;
    for (const auto& s : result.samples) {
      if (s.leg == leg) pooled.push_back(minutes_of_day(s.proxy(which)));
    }
    auto qq = open_output(outdir / ("s3_qq_" + leg_text + ".csv"));
    qq << "theoretical_minutes,empirical_minutes\n";
    s3 << leg_text << ",all," << pooled.size() << ',';
    try {
      const auto fit = stats::gaussian_fit_window(pooled, fit_lo, fit_hi);
      s3 << csv::fixed(fit.mu, 3) << ',' << csv::fixed(fit.sigma, 3) << ',' << csv::fixed(fit_lo, 1) << ','
         << csv::fixed(fit_hi, 1) << ',' << fit.n << '\n';
      for (const auto& p : stats::qq_points(pooled, fit)) {
        qq << csv::fixed(p.theoretical, 4) << ',' << csv::fixed(p.empirical, 4) << '\n';
      }
    } catch (const DataError&) {
      s3 << ",," << csv::fixed(fit_lo, 1) << ',' << csv::fixed(fit_hi, 1) << ",\n";
    }

    for (const auto& [method, peaks] :
         {std::pair<std::string, const std::vector<Peak>*>{"median", &medians}, {"gaussian_mean", &gauss}}) {
      std::vector<double> xs, ys;
      for (std::size_t b = 0; b < peaks->size(); ++b) {
        const auto& pk = (*peaks)[b];
        fig4 << leg_text << ',' << cfg.timing_bins.label(b) << ',' << csv::fixed(cfg.timing_bins.edges[b], 3)
             << ',' << csv::fixed(cfg.timing_bins.edges[b + 1], 3) << ',' << method << ',' << pk.n << ','
             << opt_fixed(pk.value, 3) << '\n';
        if (pk.value) {
          xs.push_back(static_cast<double>(b + 1));
          ys.push_back(*pk.value);
        }
      }
      table2 << cfg.region_name << ',' << leg_text << ',' << method << ',';
      try {
        const auto s = stats::spearman(xs, ys);
        char p[32];
        std::snprintf(p, sizeof p, "%.6g", s.p_value);
        table2 << csv::fixed(s.rho, 4) << ',' << p << ',' << s.n << ',' << stats::method_name(s.method) << '\n';
      } catch (const DataError&) {
        table2 << ",," << xs.size() << ",\n";
      }
    }

    const auto summaries =
        duration_by_bin(result.samples, cfg.duration_bins, leg, !cfg.timing.exclude_flagged);
    auto fig5 = open_output(outdir / ("fig5_" + leg_text + ".csv"));
    fig5 << "bin,lo_km,hi_km,n,mean_minutes,stderr_minutes\n";
    for (std::size_t b = 0; b < summaries.size(); ++b) {
      const auto& s = summaries[b];
      const auto label = cfg.duration_bins.label(b);
      fig5 << label << ',' << csv::fixed(s.lo_km, 3) << ',' << csv::fixed(s.hi_km, 3) << ',' << s.n << ','
           << opt_fixed(s.mean_min, 4) << ',' << opt_fixed(s.stderr_min, 4) << '\n';
      write_histogram(s.pdf, "lo_minutes,hi_minutes,count,density",
                      outdir / ("fig6_" + leg_text + "_" + label + ".csv"));
      write_cdf(s.cdf, "duration_minutes,cumulative",
                outdir / ("fig6_" + leg_text + "_" + label + "_cdf.csv"));
    }
  }

  auto out = open_output(outdir / "run_report.txt");
  out << "region = " << cfg.region_name << '\n'
      << "mode = " << (cfg.gps_mode() ? "gps" : "cdr") << '\n'
      << "rows.read = " << report.parse.rows << '\n'
      << "rows.accepted = " << report.parse.accepted << '\n'
      << "rows.malformed = " << report.parse.malformed << '\n'
      << "rows.bad_timestamp = " << report.parse.bad_timestamp << '\n'
      << "rows.unknown_tower = " << report.parse.unknown_tower << '\n'
      << "rows.out_of_bounds = " << report.parse.out_of_bounds << '\n';
  for (const auto& [stage, count] : report.stages) out << "stage." << stage << " = " << count << '\n';
  out << "samples.morning = " << report.morning_samples << '\n'
      << "samples.evening = " << report.evening_samples << '\n'
      << "samples.flagged = " << report.flagged_samples << '\n'
      << "fraction.home_work = " << csv::fixed(report.home_work_fraction, 6) << '\n'
      << "fraction.with_samples = " << csv::fixed(report.sample_fraction, 6) << '\n';
  if (!out) throw ConfigError("cannot write " + (outdir / "run_report.txt").string());
}

synth::AnalysisOutput to_analysis_output(const PipelineResult& result) {
  synth::AnalysisOutput out;
  for (const auto& u : result.users) {
    out.status[u.user_id] = u.status;
    if (u.assignment) {
      out.assignments[u.user_id] = {result.registry.id(u.assignment->home),
                                    result.registry.id(u.assignment->work)};
    }
    if (u.distance) out.distances[u.user_id] = u.distance->distance_km;
  }
  for (const auto& s : result.samples) out.samples.push_back({s.user_id, s.day, s.leg, s.duration_min});
  return out;
}

synth::AnalysisOutput read_analysis_output(const std::filesystem::path& outdir) {
  synth::AnalysisOutput out;
  std::string line;
  auto expect_header = [&](csv::LineReader& reader, const std::filesystem::path& path) {
    if (!reader.next(line)) throw DataError(path.string() + ": empty file");
    return csv::split(line).size();
  };
  auto fail = [](const std::filesystem::path& path, std::size_t n) {
    return DataError(path.string() + " line " + std::to_string(n) + ": malformed row");
  };

  const auto status_path = outdir / "user_status.csv";
  auto status_in = open_input(status_path, "analysis");
  csv::LineReader status(status_in);
  expect_header(status, status_path);
  while (status.next(line)) {
    const auto f = csv::split(line);
    if (f.size() != 2) throw fail(status_path, status.line_number());
    out.status[std::string(f[0])] = std::string(f[1]);
  }

  const auto hw_path = outdir / "home_work.csv";
  auto hw_in = open_input(hw_path, "analysis");
  csv::LineReader hw(hw_in);
  const auto columns = expect_header(hw, hw_path);
  while (hw.next(line)) {
    const auto f = csv::split(line);
    if (f.size() != columns || columns < 6) throw fail(hw_path, hw.line_number());
    out.assignments[std::string(f[0])] = {std::string(f[1]), std::string(f[2])};
    if (!csv::trim(f[5]).empty()) {
      const auto km = csv::parse_double(f[5]);
      if (!km) throw fail(hw_path, hw.line_number());
      out.distances[std::string(f[0])] = *km;
    }
  }

  const auto samples_path = outdir / "commute_samples.csv";
  auto samples_in = open_input(samples_path, "analysis");
  csv::LineReader samples(samples_in);
  expect_header(samples, samples_path);
  while (samples.next(line)) {
    const auto f = csv::split(line);
    if (f.size() != 8) throw fail(samples_path, samples.line_number());
    const auto day = parse_date(f[1]);
    const auto minutes = csv::parse_double(f[5]);
    if (!day || !minutes || (f[2] != "morning" && f[2] != "evening")) {
      throw fail(samples_path, samples.line_number());
    }
    out.samples.push_back({std::string(f[0]), *day, f[2] == "morning" ? Leg::morning : Leg::evening, *minutes});
  }
  return out;
}

}  // namespace commute
