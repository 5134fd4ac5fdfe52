#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "commute/config.hpp"
#include "commute/filters.hpp"
#include "commute/geo.hpp"
#include "commute/timing.hpp"

namespace commute::synth {

enum class Regime { multimodal, car_only };
enum class CallProcess { poisson, regular };

struct WorldConfig {
  std::uint64_t seed = 42;
  int n_towers = 4000;
  double region_km = 100.0;  // side of the square study region
  LatLon center{40.0, -8.0};
  int n_agents = 1000;
  int days = 14;
  std::int64_t start_day = 19723;  // 2024-01-01, a Monday
  WeekdaySet workdays{Weekday::Monday, Weekday::Tuesday, Weekday::Wednesday, Weekday::Thursday,
                      Weekday::Friday};

  double call_rate_min = 2.0;  // calls per hour, drawn per agent
  double call_rate_max = 2.0;
  CallProcess call_process = CallProcess::poisson;

  Regime regime = Regime::multimodal;
  double target_commute_minutes = 40.0;  // multimodal: travel time about this constant
  double commute_sd_minutes = 8.0;
  double speed_kmh = 40.0;               // car_only: travel time = distance / speed

  double commute_min_km = 1.0;  // home-work distance, log-uniform in [min, max]
  double commute_max_km = 60.0;

  double depart_mean_minutes = 8 * 60.0;
  double depart_agent_sd_minutes = 30.0;  // spread of per-agent mean departure
  double depart_day_sd_minutes = 10.0;    // day-to-day jitter about the agent mean
  double work_hours = 9.0;
  double work_hours_sd_minutes = 15.0;

  int n_secondary = 20;            // side-visit places per agent
  double zipf_exponent = 1.0;      // over [work, secondaries...]
  double side_visit_prob = 0.1;    // per work slot
  double slot_minutes = 30.0;
  double secondary_radius_km = 15.0;
  double night_excursion_prob = 0.05;

  // An agent's places are kept farther apart than this, and in-transit calls
  // are served by towers farther than this from both trip endpoints.
  double resolution_km = 1.0;
  int gps_interval_s = 30;

  void validate() const;
};

WorldConfig world_config_from(KeyValues& kv);
WorldConfig parse_world_config(std::istream& in);
KeyValues to_key_values(const WorldConfig& cfg);

// One piece of an agent's timeline: a stay (from == to) or a trip.
struct Segment {
  LocalTime start = 0;
  LocalTime end = 0;
  LocationId from{};
  LocationId to{};

  bool in_transit() const { return from != to; }
};

struct TripTruth {
  std::int64_t day = 0;
  Leg leg = Leg::morning;
  LocalTime depart = 0;
  LocalTime arrive = 0;

  double duration_min() const { return static_cast<double>(arrive - depart) / kSecondsPerMinute; }
};

struct AgentTruth {
  std::string user_id;
  std::string home_id;
  std::string work_id;
  double distance_km = 0.0;
  double call_rate = 0.0;
  std::vector<TripTruth> trips;
};

struct GroundTruth {
  std::vector<AgentTruth> agents;  // ascending user_id
};

struct Agent {
  std::string user_id;
  LocationId home{};
  LocationId work{};
  std::vector<LocationId> places;  // work first, then secondaries
  double call_rate = 0.0;
  std::vector<Segment> timeline;   // contiguous, covering the whole world span

  // Segment active at t (clamped to the span).
  const Segment& segment_at(LocalTime t) const;
};

struct World {
  WorldConfig config;
  TowerRegistry towers;
  std::vector<Agent> agents;
  GroundTruth truth;

  LocalTime span_start() const { return day_start(config.start_day); }
  LocalTime span_end() const { return day_start(config.start_day + config.days); }
};

// Deterministic in cfg.seed. Throws ConfigError when the region cannot host
// distinct home/work places at least commute_min_km apart.
World generate_world(const WorldConfig& cfg);

struct Simulation {
  std::vector<UserEvents> calls;   // ascending user_id, time-sorted
  std::vector<VehicleTrack> gps;   // car_only regime only
};

// Per-agent call process stamped with the scheduled tower; in-transit calls
// go to the tower nearest the interpolated position among those farther than
// resolution_km from both endpoints. GPS points follow every trip at
// gps_interval_s in the car_only regime.
Simulation simulate_calls(const World& world);

// Tower serving an in-transit call at time t of the given trip segment.
LocationId transit_tower(const World& world, const Segment& trip, LocalTime t);

void write_towers_csv(const TowerRegistry& towers, std::ostream& out);
// Rows ordered by (time, user_id) like a raw operator dump.
void write_cdr_csv(const std::vector<UserEvents>& calls, const TowerRegistry& towers, std::ostream& out);
void write_gps_csv(const std::vector<VehicleTrack>& gps, std::ostream& out);
// `user_id,home_id,work_id,distance_km,call_rate`
void write_ground_truth_csv(const GroundTruth& truth, std::ostream& out);
// `user_id,date,leg,depart,arrive,duration_min`
void write_trips_csv(const GroundTruth& truth, std::ostream& out);
GroundTruth read_ground_truth(std::istream& agents_csv, std::istream& trips_csv);

// What the analysis produced, reduced to what recovery scoring needs.
struct AnalysisOutput {
  struct Assignment {
    std::string home_id;
    std::string work_id;
  };
  struct Sample {
    std::string user_id;
    std::int64_t day = 0;
    Leg leg = Leg::morning;
    double duration_min = 0.0;
  };
  std::map<std::string, std::string> status;  // per user stage status
  std::map<std::string, Assignment> assignments;
  std::map<std::string, double> distances;
  std::vector<Sample> samples;
};

struct RecoveryReport {
  std::size_t agents = 0;
  std::size_t eligible = 0;  // reached home/work inference
  std::size_t home_recovered = 0;
  std::size_t work_recovered = 0;
  std::size_t both_recovered = 0;
  double home_rate = 0.0;  // among eligible
  double work_rate = 0.0;
  std::size_t distance_records = 0;
  double distance_mae_km = 0.0;
  std::size_t samples_matched = 0;  // samples of fully recovered agents with a true trip
  std::size_t violations = 0;       // proxy duration below true duration
  double mean_overestimate_min = 0.0;
  std::map<std::string, std::size_t> status_counts;  // eligibility accounting
  std::map<std::string, std::string> agent_status;   // every truth agent
};

bool eligible_status(const std::string& status);

RecoveryReport evaluate_recovery(const AnalysisOutput& output, const GroundTruth& truth);

void write_recovery_report(const RecoveryReport& report, std::ostream& out);

}  // namespace commute::synth
