#include "commute/synth.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <tuple>

#include "commute/csv.hpp"
#include "commute/error.hpp"

namespace commute::synth {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Independent streams per purpose and agent, derived from the world seed.
std::mt19937_64 stream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t index) {
  return std::mt19937_64(splitmix64(splitmix64(seed ^ (purpose * 0x632BE59BD9B4E019ull)) + index));
}

constexpr std::uint64_t kTowerStream = 1;
constexpr std::uint64_t kAgentStream = 2;
constexpr std::uint64_t kCallStream = 3;

double round6(double v) { return *csv::parse_double(csv::fixed(v, 6)); }

std::string numbered_id(char prefix, std::size_t i, int width) {
  std::string digits = std::to_string(i);
  if (static_cast<int>(digits.size()) < width) {
    digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
  }
  return std::string(1, prefix) + digits;
}

// Uniform bucket grid over tower positions in the world's local projection.
class TowerIndex {
 public:
  TowerIndex(const TowerRegistry& towers, const LocalProjection& projection, double cell_km)
      : cell_(cell_km) {
    xy_.reserve(towers.size());
    for (std::size_t i = 0; i < towers.size(); ++i) {
      xy_.push_back(projection.forward(towers.position(static_cast<LocationId>(i))));
    }
    min_x_ = min_y_ = std::numeric_limits<double>::infinity();
    double max_x = -min_x_, max_y = -min_y_;
    for (const auto& p : xy_) {
      min_x_ = std::min(min_x_, p.east_km);
      min_y_ = std::min(min_y_, p.north_km);
      max_x = std::max(max_x, p.east_km);
      max_y = std::max(max_y, p.north_km);
    }
    nx_ = static_cast<long>(std::floor((max_x - min_x_) / cell_)) + 1;
    ny_ = static_cast<long>(std::floor((max_y - min_y_) / cell_)) + 1;
    buckets_.resize(static_cast<std::size_t>(nx_ * ny_));
    for (std::size_t i = 0; i < xy_.size(); ++i) {
      buckets_[bucket(cell_x(xy_[i].east_km), cell_y(xy_[i].north_km))].push_back(
          static_cast<std::uint32_t>(i));
    }
  }

  LocalProjection::Point xy(LocationId loc) const { return xy_[static_cast<std::size_t>(loc)]; }

  template <class Pred>
  std::optional<LocationId> nearest(LocalProjection::Point q, Pred accept) const {
    const long cx = cell_x(q.east_km), cy = cell_y(q.north_km);
    double best = std::numeric_limits<double>::infinity();
    std::optional<LocationId> best_loc;
    const long max_ring = std::max(nx_, ny_);
    for (long r = 0; r <= max_ring; ++r) {
      // every tower in ring r + 1 or beyond is at least r cells away
      if (best_loc && best <= static_cast<double>(r - 1) * cell_) break;
      for (long x = cx - r; x <= cx + r; ++x) {
        for (long y = cy - r; y <= cy + r; ++y) {
          if (std::max(std::abs(x - cx), std::abs(y - cy)) != r) continue;
          if (x < 0 || y < 0 || x >= nx_ || y >= ny_) continue;
          for (auto i : buckets_[bucket(x, y)]) {
            const double d = std::hypot(xy_[i].east_km - q.east_km, xy_[i].north_km - q.north_km);
            const auto loc = static_cast<LocationId>(i);
            if (d < best && accept(loc)) {
              best = d;
              best_loc = loc;
            }
          }
        }
      }
    }
    return best_loc;
  }

 private:
  long cell_x(double x) const {
    return std::clamp(static_cast<long>(std::floor((x - min_x_) / cell_)), 0L, nx_ - 1);
  }
  long cell_y(double y) const {
    return std::clamp(static_cast<long>(std::floor((y - min_y_) / cell_)), 0L, ny_ - 1);
  }
  std::size_t bucket(long x, long y) const { return static_cast<std::size_t>(x * ny_ + y); }

  double cell_;
  double min_x_ = 0.0, min_y_ = 0.0;
  long nx_ = 1, ny_ = 1;
  std::vector<LocalProjection::Point> xy_;
  std::vector<std::vector<std::uint32_t>> buckets_;
};

double index_cell_km(const WorldConfig& cfg) {
  return std::max(0.5, cfg.region_km / std::sqrt(static_cast<double>(cfg.n_towers)));
}

LocationId transit_tower(const TowerIndex& index, const World& world, const Segment& trip, LocalTime t) {
  const auto a = index.xy(trip.from), b = index.xy(trip.to);
  const double f = static_cast<double>(t - trip.start) / static_cast<double>(trip.end - trip.start);
  const LocalProjection::Point q{a.east_km + f * (b.east_km - a.east_km),
                                 a.north_km + f * (b.north_km - a.north_km)};
  const LatLon from = world.towers.position(trip.from), to = world.towers.position(trip.to);
  const double res = world.config.resolution_km;
  const auto tower = index.nearest(q, [&](LocationId c) {
    const LatLon p = world.towers.position(c);
    return haversine_km(p, from) > res && haversine_km(p, to) > res;
  });
  return tower ? *tower : trip.from;
}

std::discrete_distribution<std::size_t> zipf(std::size_t n, double exponent) {
  std::vector<double> weights(n);
  for (std::size_t r = 0; r < n; ++r) weights[r] = std::pow(static_cast<double>(r + 1), -exponent);
  return std::discrete_distribution<std::size_t>(weights.begin(), weights.end());
}

class TimelineBuilder {
 public:
  void stay(LocationId loc, LocalTime start, LocalTime end) {
    if (end <= start) return;
    if (!segments_.empty()) {
      auto& last = segments_.back();
      if (!last.in_transit() && last.to == loc && last.end == start) {
        last.end = end;
        return;
      }
    }
    segments_.push_back(Segment{start, end, loc, loc});
  }
  void trip(LocationId from, LocationId to, LocalTime start, LocalTime end) {
    segments_.push_back(Segment{start, end, from, to});
  }
  std::vector<Segment> take() { return std::move(segments_); }

 private:
  std::vector<Segment> segments_;
};

struct Generator {
  const WorldConfig& cfg;
  World& world;
  LocalProjection projection;
  TowerIndex index;

  Generator(const WorldConfig& c, World& w)
      : cfg(c),
        world(w),
        projection(c.center),
        index(w.towers, projection, index_cell_km(c)) {}

  bool inside_region(LocalProjection::Point p) const {
    const double half = cfg.region_km / 2.0;
    return std::abs(p.east_km) <= half && std::abs(p.north_km) <= half;
  }

  double km(LocationId a, LocationId b) const {
    return haversine_km(world.towers.position(a), world.towers.position(b));
  }

  LocationId pick_work(std::mt19937_64& rng, LocationId home) const {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double log_lo = std::log(cfg.commute_min_km), log_hi = std::log(cfg.commute_max_km);
    const auto home_xy = index.xy(home);
    for (int attempt = 0; attempt < 2000; ++attempt) {
      const double d = std::exp(log_lo + (log_hi - log_lo) * unit(rng));
      const double theta = 2.0 * std::numbers::pi * unit(rng);
      const LocalProjection::Point target{home_xy.east_km + d * std::cos(theta),
                                          home_xy.north_km + d * std::sin(theta)};
      if (!inside_region(target)) continue;
      const auto work = index.nearest(target, [&](LocationId t) { return t != home; });
      if (!work) continue;
      const double sep = km(home, *work);
      if (sep >= cfg.commute_min_km && sep > cfg.resolution_km) return *work;
    }
    throw ConfigError("region too small to place distinct home/work towers at least " +
                      csv::fixed(cfg.commute_min_km, 3) + " km apart");
  }

  std::vector<LocationId> pick_secondaries(std::mt19937_64& rng, LocationId home,
                                           LocationId work) const {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<LocationId> chosen;
    const auto centre = index.xy(work);
    auto far_enough = [&](LocationId t) {
      if (km(t, home) <= cfg.resolution_km || km(t, work) <= cfg.resolution_km) return false;
      return std::all_of(chosen.begin(), chosen.end(),
                         [&](LocationId c) { return km(t, c) > cfg.resolution_km; });
    };
    for (int attempt = 0; attempt < 200 * cfg.n_secondary + 200 &&
                          static_cast<int>(chosen.size()) < cfg.n_secondary;
         ++attempt) {
      const double r = cfg.secondary_radius_km * std::sqrt(unit(rng));
      const double theta = 2.0 * std::numbers::pi * unit(rng);
      const LocalProjection::Point target{centre.east_km + r * std::cos(theta),
                                          centre.north_km + r * std::sin(theta)};
      const auto t = index.nearest(target, [](LocationId) { return true; });
      if (t && far_enough(*t)) chosen.push_back(*t);
    }
    if (static_cast<int>(chosen.size()) < cfg.n_secondary) {
      throw ConfigError("cannot place " + std::to_string(cfg.n_secondary) +
                        " distinct secondary places; raise secondary_radius_km or n_towers");
    }
    return chosen;
  }

  std::int64_t travel_seconds(std::mt19937_64& rng, double distance_km) const {
    if (cfg.regime == Regime::car_only) {
      return std::max<std::int64_t>(60, std::llround(distance_km / cfg.speed_kmh * kSecondsPerHour));
    }
    std::normal_distribution<double> minutes(cfg.target_commute_minutes, cfg.commute_sd_minutes);
    return std::llround(std::max(5.0, minutes(rng)) * kSecondsPerMinute);
  }

  void build_agent(std::size_t i) {
    auto rng = stream(cfg.seed, kAgentStream, i);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    Agent agent;
    agent.user_id = numbered_id('u', i + 1, 5);
    agent.home = static_cast<LocationId>(
        std::uniform_int_distribution<std::size_t>(0, world.towers.size() - 1)(rng));
    agent.work = pick_work(rng, agent.home);
    const auto secondaries = pick_secondaries(rng, agent.home, agent.work);
    agent.places.push_back(agent.work);
    agent.places.insert(agent.places.end(), secondaries.begin(), secondaries.end());
    agent.call_rate = cfg.call_rate_min + (cfg.call_rate_max - cfg.call_rate_min) * unit(rng);

    AgentTruth truth;
    truth.user_id = agent.user_id;
    truth.home_id = world.towers.id(agent.home);
    truth.work_id = world.towers.id(agent.work);
    truth.distance_km = km(agent.home, agent.work);
    truth.call_rate = agent.call_rate;

    auto place_choice = zipf(agent.places.size(), cfg.zipf_exponent);
    auto leisure_choice = zipf(std::max<std::size_t>(1, secondaries.size()), cfg.zipf_exponent);
    auto leisure_place = [&]() {
      return secondaries.empty() ? agent.home : secondaries[leisure_choice(rng)];
    };
    const double agent_mean_depart =
        cfg.depart_mean_minutes + cfg.depart_agent_sd_minutes * normal(rng);
    const std::int64_t slot = std::llround(cfg.slot_minutes * kSecondsPerMinute);

    TimelineBuilder timeline;
    LocalTime cursor = world.span_start();
    for (std::int64_t d = cfg.start_day; d < cfg.start_day + cfg.days; ++d) {
      const LocalTime ds = day_start(d);
      if (cfg.workdays.contains(weekday_of_day(d))) {
        const double depart_min = agent_mean_depart + cfg.depart_day_sd_minutes * normal(rng);
        LocalTime depart = ds + std::llround(std::clamp(depart_min, 4.0 * 60, 11.0 * 60) * 60.0);
        depart = std::max(depart, cursor + 60);
        timeline.stay(agent.home, cursor, depart);
        const LocalTime arrive = depart + travel_seconds(rng, truth.distance_km);
        timeline.trip(agent.home, agent.work, depart, arrive);
        truth.trips.push_back(TripTruth{d, Leg::morning, depart, arrive});

        const LocalTime leave = arrive + std::llround(cfg.work_hours * kSecondsPerHour +
                                                      cfg.work_hours_sd_minutes * 60.0 * normal(rng));
        for (LocalTime t = arrive; t < leave; t += slot) {
          const LocationId where =
              unit(rng) < cfg.side_visit_prob ? agent.places[place_choice(rng)] : agent.work;
          timeline.stay(where, t, std::min(t + slot, leave));
        }
        const LocalTime home_at = leave + travel_seconds(rng, truth.distance_km);
        timeline.trip(agent.work, agent.home, leave, home_at);
        truth.trips.push_back(TripTruth{d, Leg::evening, leave, home_at});
        cursor = home_at;

        if (unit(rng) < cfg.night_excursion_prob) {
          const LocalTime start = std::max(home_at + 30 * kSecondsPerMinute, ds + 20 * kSecondsPerHour + 1800) +
                                  std::llround(unit(rng) * kSecondsPerHour);
          const LocalTime end = start + std::llround((45.0 + 75.0 * unit(rng)) * kSecondsPerMinute);
          timeline.stay(agent.home, cursor, start);
          timeline.stay(leisure_place(), start, end);
          cursor = end;
        }
      } else if (unit(rng) < 0.7) {
        const LocalTime start = ds + 11 * kSecondsPerHour + std::llround(unit(rng) * 2 * kSecondsPerHour);
        const LocalTime end = start + std::llround((1.0 + 2.0 * unit(rng)) * kSecondsPerHour);
        timeline.stay(agent.home, cursor, start);
        timeline.stay(leisure_place(), start, end);
        cursor = end;
      }
    }
    timeline.stay(agent.home, cursor, world.span_end());
    agent.timeline = timeline.take();

    world.agents.push_back(std::move(agent));
    world.truth.agents.push_back(std::move(truth));
  }
};

const char* regime_name(Regime r) { return r == Regime::multimodal ? "multimodal" : "car_only"; }
const char* process_name(CallProcess p) { return p == CallProcess::poisson ? "poisson" : "regular"; }

}  // namespace

void WorldConfig::validate() const {
  if (n_towers < 2) throw ConfigError("n_towers must be at least 2");
  if (n_agents < 1) throw ConfigError("n_agents must be positive");
  if (days < 1) throw ConfigError("days must be positive");
  if (!(region_km > 0.0)) throw ConfigError("region_km must be positive");
  if (!valid_coordinate(center)) throw ConfigError("center is not a valid coordinate");
  if (!(call_rate_min >= 0.0 && call_rate_max >= call_rate_min)) {
    throw ConfigError("call rates must satisfy 0 <= call_rate_min <= call_rate_max");
  }
  if (!(target_commute_minutes > 0.0) || commute_sd_minutes < 0.0) {
    throw ConfigError("target_commute_minutes must be positive");
  }
  if (!(speed_kmh > 0.0)) throw ConfigError("speed_kmh must be positive");
  if (!(commute_min_km > 0.0 && commute_max_km > commute_min_km)) {
    throw ConfigError("commute distances must satisfy 0 < commute_min_km < commute_max_km");
  }
  if (!(work_hours > 0.0 && work_hours < 16.0)) throw ConfigError("work_hours must lie in (0, 16)");
  if (n_secondary < 0) throw ConfigError("n_secondary must not be negative");
  if (zipf_exponent < 0.0) throw ConfigError("zipf_exponent must not be negative");
  if (!(side_visit_prob >= 0.0 && side_visit_prob <= 1.0)) {
    throw ConfigError("side_visit_prob must lie in [0, 1]");
  }
  if (!(slot_minutes > 0.0)) throw ConfigError("slot_minutes must be positive");
  if (!(secondary_radius_km > 0.0)) throw ConfigError("secondary_radius_km must be positive");
  if (!(night_excursion_prob > 0.0 && night_excursion_prob < 0.5)) {
    throw ConfigError("night_excursion_prob must lie in (0, 0.5)");
  }
  if (!(resolution_km >= 0.0)) throw ConfigError("resolution_km must not be negative");
  if (gps_interval_s < 1) throw ConfigError("gps_interval_s must be positive");
  if (workdays.empty()) throw ConfigError("workdays must name at least one day");
}

WorldConfig world_config_from(KeyValues& kv) {
  WorldConfig cfg;
  auto num = [&](std::string_view key, double& field) {
    if (auto v = kv.take(key)) field = config_double(key, *v);
  };
  auto count = [&](std::string_view key, int& field) {
    if (auto v = kv.take(key)) field = static_cast<int>(config_int(key, *v));
  };
  if (auto v = kv.take("seed")) cfg.seed = static_cast<std::uint64_t>(config_int("seed", *v));
  count("n_towers", cfg.n_towers);
  num("region_km", cfg.region_km);
  num("center_lat", cfg.center.lat);
  num("center_lon", cfg.center.lon);
  count("n_agents", cfg.n_agents);
  count("days", cfg.days);
  if (auto v = kv.take("start_date")) {
    const auto day = parse_date(*v);
    if (!day) throw ConfigError("start_date must be YYYY-MM-DD");
    cfg.start_day = *day;
  }
  if (auto v = kv.take("workdays")) cfg.workdays = WeekdaySet::parse(*v);
  if (auto v = kv.take("call_rate")) {
    cfg.call_rate_min = cfg.call_rate_max = config_double("call_rate", *v);
  }
  num("call_rate_min", cfg.call_rate_min);
  num("call_rate_max", cfg.call_rate_max);
  if (auto v = kv.take("call_process")) {
    if (*v == "poisson") cfg.call_process = CallProcess::poisson;
    else if (*v == "regular") cfg.call_process = CallProcess::regular;
    else throw ConfigError("call_process must be poisson or regular");
  }
  if (auto v = kv.take("regime")) {
    if (*v == "multimodal") cfg.regime = Regime::multimodal;
    else if (*v == "car_only") cfg.regime = Regime::car_only;
    else throw ConfigError("regime must be multimodal or car_only");
  }
  num("target_commute_minutes", cfg.target_commute_minutes);
  num("commute_sd_minutes", cfg.commute_sd_minutes);
  num("speed_kmh", cfg.speed_kmh);
  num("commute_min_km", cfg.commute_min_km);
  num("commute_max_km", cfg.commute_max_km);
  if (auto v = kv.take("depart_mean")) {
    const auto t = parse_time_of_day(*v);
    if (!t) throw ConfigError("depart_mean must be HH:MM");
    cfg.depart_mean_minutes = static_cast<double>(*t) / kSecondsPerMinute;
  }
  num("depart_agent_sd_minutes", cfg.depart_agent_sd_minutes);
  num("depart_day_sd_minutes", cfg.depart_day_sd_minutes);
  num("work_hours", cfg.work_hours);
  num("work_hours_sd_minutes", cfg.work_hours_sd_minutes);
  count("n_secondary", cfg.n_secondary);
  num("zipf_exponent", cfg.zipf_exponent);
  num("side_visit_prob", cfg.side_visit_prob);
  num("slot_minutes", cfg.slot_minutes);
  num("secondary_radius_km", cfg.secondary_radius_km);
  num("night_excursion_prob", cfg.night_excursion_prob);
  num("resolution_km", cfg.resolution_km);
  count("gps_interval_s", cfg.gps_interval_s);
  cfg.validate();
  return cfg;
}

WorldConfig parse_world_config(std::istream& in) {
  auto kv = KeyValues::parse(in);
  auto cfg = world_config_from(kv);
  kv.reject_unconsumed("world config");
  return cfg;
}

KeyValues to_key_values(const WorldConfig& cfg) {
  KeyValues kv;
  auto num = [&](std::string key, double v) { kv.set(std::move(key), csv::fixed(v, 6)); };
  kv.set("seed", std::to_string(cfg.seed));
  kv.set("n_towers", std::to_string(cfg.n_towers));
  num("region_km", cfg.region_km);
  num("center_lat", cfg.center.lat);
  num("center_lon", cfg.center.lon);
  kv.set("n_agents", std::to_string(cfg.n_agents));
  kv.set("days", std::to_string(cfg.days));
  kv.set("start_date", format_date(cfg.start_day));
  kv.set("workdays", cfg.workdays.to_string());
  num("call_rate_min", cfg.call_rate_min);
  num("call_rate_max", cfg.call_rate_max);
  kv.set("call_process", process_name(cfg.call_process));
  kv.set("regime", regime_name(cfg.regime));
  num("target_commute_minutes", cfg.target_commute_minutes);
  num("commute_sd_minutes", cfg.commute_sd_minutes);
  num("speed_kmh", cfg.speed_kmh);
  num("commute_min_km", cfg.commute_min_km);
  num("commute_max_km", cfg.commute_max_km);
  kv.set("depart_mean", format_time_of_day(std::llround(cfg.depart_mean_minutes * 60.0)));
  num("depart_agent_sd_minutes", cfg.depart_agent_sd_minutes);
  num("depart_day_sd_minutes", cfg.depart_day_sd_minutes);
  num("work_hours", cfg.work_hours);
  num("work_hours_sd_minutes", cfg.work_hours_sd_minutes);
  kv.set("n_secondary", std::to_string(cfg.n_secondary));
  num("zipf_exponent", cfg.zipf_exponent);
  num("side_visit_prob", cfg.side_visit_prob);
  num("slot_minutes", cfg.slot_minutes);
  num("secondary_radius_km", cfg.secondary_radius_km);
  num("night_excursion_prob", cfg.night_excursion_prob);
  num("resolution_km", cfg.resolution_km);
  kv.set("gps_interval_s", std::to_string(cfg.gps_interval_s));
  return kv;
}

const Segment& Agent::segment_at(LocalTime t) const {
  auto it = std::upper_bound(timeline.begin(), timeline.end(), t,
                             [](LocalTime value, const Segment& s) { return value < s.start; });
  if (it == timeline.begin()) return timeline.front();
  return *std::prev(it);
}

World generate_world(const WorldConfig& cfg) {
  cfg.validate();
  World world;
  world.config = cfg;

  auto rng = stream(cfg.seed, kTowerStream, 0);
  std::uniform_real_distribution<double> coord(-cfg.region_km / 2.0, cfg.region_km / 2.0);
  const LocalProjection projection(cfg.center);
  for (int i = 0; i < cfg.n_towers; ++i) {
    const double east = coord(rng);
    const double north = coord(rng);
    const LatLon p = projection.inverse({east, north});
    world.towers.add(numbered_id('T', static_cast<std::size_t>(i + 1), 5), {round6(p.lat), round6(p.lon)});
  }

  Generator generator(cfg, world);
  for (int i = 0; i < cfg.n_agents; ++i) generator.build_agent(static_cast<std::size_t>(i));
  return world;
}

LocationId transit_tower(const World& world, const Segment& trip, LocalTime t) {
  const TowerIndex index(world.towers, LocalProjection(world.config.center), index_cell_km(world.config));
  return transit_tower(index, world, trip, t);
}

Simulation simulate_calls(const World& world) {
  const auto& cfg = world.config;
  const LocalProjection projection(cfg.center);
  const TowerIndex index(world.towers, projection, index_cell_km(cfg));
  auto locate = [&](const Segment& seg, LocalTime t) {
    return seg.in_transit() ? transit_tower(index, world, seg, t) : seg.to;
  };

  Simulation sim;
  const LocalTime begin = world.span_start(), end = world.span_end();
  for (std::size_t i = 0; i < world.agents.size(); ++i) {
    const auto& agent = world.agents[i];
    auto rng = stream(cfg.seed, kCallStream, i);
    UserEvents user{agent.user_id, {}};
    if (agent.call_rate > 0.0) {
      const double mean_gap = kSecondsPerHour / agent.call_rate;
      if (cfg.call_process == CallProcess::poisson) {
        std::exponential_distribution<double> gap(1.0 / mean_gap);
        for (double t = static_cast<double>(begin) + gap(rng); t < static_cast<double>(end); t += gap(rng)) {
          const auto when = static_cast<LocalTime>(std::floor(t));
          user.events.push_back(CallEvent{when, locate(agent.segment_at(when), when)});
        }
      } else {
        std::uniform_real_distribution<double> phase(0.0, mean_gap);
        for (double t = static_cast<double>(begin) + phase(rng); t < static_cast<double>(end); t += mean_gap) {
          const auto when = static_cast<LocalTime>(std::floor(t));
          user.events.push_back(CallEvent{when, locate(agent.segment_at(when), when)});
        }
      }
    }
    sim.calls.push_back(std::move(user));

    if (cfg.regime == Regime::car_only) {
      VehicleTrack track{agent.user_id, {}};
      for (const auto& seg : agent.timeline) {
        if (!seg.in_transit()) continue;
        const auto a = index.xy(seg.from), b = index.xy(seg.to);
        auto emit = [&](LocalTime t) {
          const double f = static_cast<double>(t - seg.start) / static_cast<double>(seg.end - seg.start);
          const LatLon p = projection.inverse({a.east_km + f * (b.east_km - a.east_km),
                                               a.north_km + f * (b.north_km - a.north_km)});
          track.points.push_back(GpsPoint{t, {round6(p.lat), round6(p.lon)}});
        };
        for (LocalTime t = seg.start; t < seg.end; t += cfg.gps_interval_s) emit(t);
        emit(seg.end);
      }
      sim.gps.push_back(std::move(track));
    }
  }
  return sim;
}

void write_towers_csv(const TowerRegistry& towers, std::ostream& out) {
  out << "tower_id,lat,lon\n";
  for (std::size_t i = 0; i < towers.size(); ++i) {
    const auto loc = static_cast<LocationId>(i);
    const auto p = towers.position(loc);
    out << towers.id(loc) << ',' << csv::fixed(p.lat, 6) << ',' << csv::fixed(p.lon, 6) << '\n';
  }
}

void write_cdr_csv(const std::vector<UserEvents>& calls, const TowerRegistry& towers, std::ostream& out) {
  std::vector<std::tuple<LocalTime, std::size_t, std::size_t>> rows;
  for (std::size_t u = 0; u < calls.size(); ++u) {
    for (std::size_t k = 0; k < calls[u].events.size(); ++k) rows.emplace_back(calls[u].events[k].time, u, k);
  }
  std::sort(rows.begin(), rows.end());
  out << "user_id,timestamp,tower_id\n";
  for (const auto& [time, u, k] : rows) {
    out << calls[u].user_id << ',' << format_iso_local(time) << ','
        << towers.id(calls[u].events[k].location) << '\n';
  }
}

void write_gps_csv(const std::vector<VehicleTrack>& gps, std::ostream& out) {
  std::vector<std::tuple<LocalTime, std::size_t, std::size_t>> rows;
  for (std::size_t v = 0; v < gps.size(); ++v) {
    for (std::size_t k = 0; k < gps[v].points.size(); ++k) rows.emplace_back(gps[v].points[k].time, v, k);
  }
  std::sort(rows.begin(), rows.end());
  out << "vehicle_id,timestamp,lat,lon\n";
  for (const auto& [time, v, k] : rows) {
    const auto& p = gps[v].points[k].position;
    out << gps[v].vehicle_id << ',' << format_iso_local(time) << ',' << csv::fixed(p.lat, 6) << ','
        << csv::fixed(p.lon, 6) << '\n';
  }
}

void write_ground_truth_csv(const GroundTruth& truth, std::ostream& out) {
  out << "user_id,home_id,work_id,distance_km,call_rate\n";
  for (const auto& a : truth.agents) {
    out << a.user_id << ',' << a.home_id << ',' << a.work_id << ',' << csv::fixed(a.distance_km, 6)
        << ',' << csv::fixed(a.call_rate, 6) << '\n';
  }
}

void write_trips_csv(const GroundTruth& truth, std::ostream& out) {
  out << "user_id,date,leg,depart,arrive,duration_min\n";
  for (const auto& a : truth.agents) {
    for (const auto& t : a.trips) {
      out << a.user_id << ',' << format_date(t.day) << ',' << leg_name(t.leg) << ','
          << format_iso_local(t.depart) << ',' << format_iso_local(t.arrive) << ','
          << csv::fixed(t.duration_min(), 4) << '\n';
    }
  }
}

GroundTruth read_ground_truth(std::istream& agents_csv, std::istream& trips_csv) {
  GroundTruth truth;
  std::map<std::string, std::size_t> index;
  csv::LineReader agents(agents_csv);
  std::string line;
  if (!agents.next(line) || !csv::header_matches(line, "user_id,home_id,work_id,distance_km,call_rate")) {
    throw DataError("ground truth: unexpected header");
  }
  while (agents.next(line)) {
    const auto f = csv::split(line);
    const auto where = "ground truth line " + std::to_string(agents.line_number());
    if (f.size() != 5) throw DataError(where + ": expected 5 fields");
    const auto distance = csv::parse_double(f[3]);
    const auto rate = csv::parse_double(f[4]);
    if (!distance || !rate) throw DataError(where + ": malformed number");
    index[std::string(f[0])] = truth.agents.size();
    truth.agents.push_back(AgentTruth{std::string(f[0]), std::string(f[1]), std::string(f[2]),
                                      *distance, *rate, {}});
  }

  csv::LineReader trips(trips_csv);
  if (!trips.next(line) || !csv::header_matches(line, "user_id,date,leg,depart,arrive,duration_min")) {
    throw DataError("ground truth trips: unexpected header");
  }
  while (trips.next(line)) {
    const auto f = csv::split(line);
    const auto where = "ground truth trips line " + std::to_string(trips.line_number());
    if (f.size() != 6) throw DataError(where + ": expected 6 fields");
    const auto it = index.find(std::string(f[0]));
    const auto day = parse_date(f[1]);
    const auto depart = parse_iso_local(f[3]);
    const auto arrive = parse_iso_local(f[4]);
    if (it == index.end() || !day || !depart || !arrive || (f[2] != "morning" && f[2] != "evening")) {
      throw DataError(where + ": malformed row");
    }
    truth.agents[it->second].trips.push_back(
        TripTruth{*day, f[2] == "morning" ? Leg::morning : Leg::evening, *depart, *arrive});
  }
  std::sort(truth.agents.begin(), truth.agents.end(),
            [](const AgentTruth& a, const AgentTruth& b) { return a.user_id < b.user_id; });
  return truth;
}

bool eligible_status(const std::string& status) {
  return status == "ok" || status == "no_commute_samples" || status == "short_commute" ||
         status.rfind("rejected:", 0) == 0;
}

RecoveryReport evaluate_recovery(const AnalysisOutput& output, const GroundTruth& truth) {
  RecoveryReport report;
  report.agents = truth.agents.size();
  double abs_error = 0.0;
  double overestimate = 0.0;

  for (const auto& agent : truth.agents) {
    const auto status_it = output.status.find(agent.user_id);
    const std::string status = status_it == output.status.end() ? "absent" : status_it->second;
    report.agent_status[agent.user_id] = status;
    ++report.status_counts[status];
    if (!eligible_status(status)) continue;
    ++report.eligible;

    const auto assigned = output.assignments.find(agent.user_id);
    if (assigned == output.assignments.end()) continue;
    const bool home_ok = assigned->second.home_id == agent.home_id;
    const bool work_ok = assigned->second.work_id == agent.work_id;
    report.home_recovered += home_ok;
    report.work_recovered += work_ok;
    report.both_recovered += home_ok && work_ok;

    const auto distance = output.distances.find(agent.user_id);
    if (distance != output.distances.end()) {
      ++report.distance_records;
      abs_error += std::abs(distance->second - agent.distance_km);
    }
  }

  std::map<std::string, const AgentTruth*> by_user;
  for (const auto& agent : truth.agents) by_user[agent.user_id] = &agent;
  for (const auto& sample : output.samples) {
    const auto agent_it = by_user.find(sample.user_id);
    if (agent_it == by_user.end()) continue;
    const auto assigned = output.assignments.find(sample.user_id);
    if (assigned == output.assignments.end() || assigned->second.home_id != agent_it->second->home_id ||
        assigned->second.work_id != agent_it->second->work_id) {
      continue;
    }
    for (const auto& trip : agent_it->second->trips) {
      if (trip.day != sample.day || trip.leg != sample.leg) continue;
      ++report.samples_matched;
      const double excess = sample.duration_min - trip.duration_min();
      overestimate += excess;
      if (excess < -1e-9) ++report.violations;
      break;
    }
  }

  if (report.eligible > 0) {
    report.home_rate = static_cast<double>(report.home_recovered) / static_cast<double>(report.eligible);
    report.work_rate = static_cast<double>(report.work_recovered) / static_cast<double>(report.eligible);
  }
  if (report.distance_records > 0) report.distance_mae_km = abs_error / static_cast<double>(report.distance_records);
  if (report.samples_matched > 0) {
    report.mean_overestimate_min = overestimate / static_cast<double>(report.samples_matched);
  }
  return report;
}

void write_recovery_report(const RecoveryReport& r, std::ostream& out) {
  out << "agents = " << r.agents << '\n'
      << "eligible = " << r.eligible << '\n'
      << "home_recovered = " << r.home_recovered << '\n'
      << "work_recovered = " << r.work_recovered << '\n'
      << "both_recovered = " << r.both_recovered << '\n'
      << "home_rate = " << csv::fixed(r.home_rate, 6) << '\n'
      << "work_rate = " << csv::fixed(r.work_rate, 6) << '\n'
      << "distance_records = " << r.distance_records << '\n'
      << "distance_mae_km = " << csv::fixed(r.distance_mae_km, 6) << '\n'
      << "samples_matched = " << r.samples_matched << '\n'
      << "violations = " << r.violations << '\n'
      << "mean_overestimate_min = " << csv::fixed(r.mean_overestimate_min, 4) << '\n';
  for (const auto& [status, n] : r.status_counts) out << "status." << status << " = " << n << '\n';
}

}  // namespace commute::synth
