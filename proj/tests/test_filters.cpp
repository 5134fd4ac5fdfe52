#include <doctest.h>

#include <random>
#include <sstream>

#include "commute/error.hpp"
#include "commute/filters.hpp"
#include "helpers.hpp"

using namespace commute;
using testing::at;
using testing::kMonday;

namespace {

struct Line {
  TowerRegistry reg;
  LocationId a, b, c, far;
};

// A at the origin, B 0.8 km north, C 1.6 km north, FAR 60 km east.
Line line_registry() {
  Line l;
  const LatLon origin{40.0, -8.0};
  l.a = l.reg.add("A", origin);
  l.b = l.reg.add("B", testing::north_of(origin, 0.8));
  l.c = l.reg.add("C", testing::north_of(origin, 1.6));
  l.far = l.reg.add("FAR", testing::east_of(origin, 60.0));
  return l;
}

SampledTrack track_of(std::vector<LocationId> locs, LocalTime start = 0, std::int64_t step = 600) {
  SampledTrack t;
  t.user_id = "u";
  t.segment_starts = {0};
  for (std::size_t i = 0; i < locs.size(); ++i) {
    t.samples.push_back(Sample{start + static_cast<LocalTime>(i) * step, locs[i]});
  }
  return t;
}

std::vector<LocationId> locations(const SampledTrack& t) {
  std::vector<LocationId> out;
  for (const auto& s : t.samples) out.push_back(s.location);
  return out;
}

UserEvents as_events(const SampledTrack& t) {
  UserEvents u{t.user_id, {}};
  for (const auto& s : t.samples) u.events.push_back(CallEvent{s.time, s.location});
  return u;
}

}  // namespace

TEST_CASE("filter config defaults and parsing") {
  const FilterConfig d;
  CHECK(d.resample_interval_s == 600);
  CHECK(d.spatial_radius_km == 1.0);
  CHECK(d.speed_limit_kmh == 120.0);
  CHECK(d.min_segment_seconds == 60);
  CHECK(d.excluded_weekdays == WeekdaySet{Weekday::Saturday, Weekday::Sunday});
  CHECK(d.max_gap_s == 16 * 3600);
  CHECK(d.sparse_tower_km == 50.0);
  CHECK(d.sparse_dwell_share == 0.10);

  std::istringstream in("excluded_weekdays = Thursday, Friday\nmax_gap_hours = 12\n");
  const auto cfg = parse_filter_config(in);
  CHECK(cfg.excluded_weekdays == WeekdaySet{Weekday::Thursday, Weekday::Friday});
  CHECK(cfg.max_gap_s == 12 * 3600);

  std::istringstream unknown("spatial_radius = 2\n");
  CHECK_THROWS_AS(parse_filter_config(unknown), ConfigError);
  std::istringstream bad_share("sparse_dwell_share = 1.0\n");
  CHECK_THROWS_AS(parse_filter_config(bad_share), ConfigError);
  std::istringstream too_many("excluded_weekdays = Mon,Tue,Wed,Thu,Fri,Sat,Sun\n");
  CHECK_THROWS_AS(parse_filter_config(too_many), ConfigError);
  std::istringstream negative("speed_limit_kmh = -5\n");
  CHECK_THROWS_AS(parse_filter_config(negative), ConfigError);

  FilterConfig custom;
  custom.spatial_radius_km = 2.5;
  custom.excluded_weekdays = WeekdaySet{Weekday::Friday};
  auto kv = to_key_values(custom);
  const auto back = filter_config_from(kv);
  CHECK(back.spatial_radius_km == 2.5);
  CHECK(back.excluded_weekdays == custom.excluded_weekdays);
  CHECK(back.resample_interval_s == custom.resample_interval_s);
}

TEST_CASE("resample_uniform examples") {
  const auto l = line_registry();
  const FilterConfig cfg;
  const LocalTime t0 = at(kMonday, 9);

  SUBCASE("stay at tower between calls") {
    const auto track = resample_uniform({"u", {{t0, l.a}, {t0 + 25 * 60, l.a}}}, cfg);
    REQUIRE(track.samples.size() >= 3);
    CHECK(track.samples[0] == Sample{t0, l.a});
    CHECK(track.samples[1] == Sample{t0 + 600, l.a});
    CHECK(track.samples[2] == Sample{t0 + 1200, l.a});
    // the lattice closes at the tick covering the last call
    CHECK(track.samples.back().time == t0 + 1800);
  }
  SUBCASE("most recent call wins") {
    const auto track = resample_uniform({"u", {{t0, l.a}, {t0 + 15 * 60, l.b}}}, cfg);
    REQUIRE(track.samples.size() == 3);
    CHECK(track.samples[0].location == l.a);
    CHECK(track.samples[1].location == l.a);
    CHECK(track.samples[2] == Sample{t0 + 1200, l.b});
  }
  SUBCASE("long silence splits segments") {
    const auto track = resample_uniform({"u", {{t0, l.a}, {t0 + 20 * 3600, l.b}}}, cfg);
    CHECK(track.segment_count() == 2);
    CHECK(track.samples.size() == 2);
    CHECK(track.samples[1] == Sample{t0 + 20 * 3600, l.b});
  }
  SUBCASE("lattice anchored at the first call rounded down") {
    const auto track = resample_uniform({"u", {{t0 + 7 * 60, l.a}, {t0 + 21 * 60, l.b}}}, cfg);
    CHECK(track.samples.front().time == t0);
    CHECK(track.samples.front().location == l.a);
  }
  SUBCASE("empty input") {
    const auto track = resample_uniform({"u", {}}, cfg);
    CHECK(track.samples.empty());
    CHECK(track.segment_count() == 0);
  }
}

TEST_CASE("resample_uniform properties") {
  const auto l = line_registry();
  const FilterConfig cfg;
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> gap_minutes(1, 600), pick(0, 3);
  std::bernoulli_distribution long_gap(0.05);
  const LocationId locs[] = {l.a, l.b, l.c, l.far};
  for (int trial = 0; trial < 500; ++trial) {
    UserEvents u{"u", {}};
    LocalTime t = at(kMonday, 0) + gap_minutes(rng) * 60 + gap_minutes(rng);
    for (int k = 0; k < 40; ++k) {
      u.events.push_back(CallEvent{t, locs[pick(rng)]});
      t += long_gap(rng) ? 17 * 3600 : gap_minutes(rng) * 60 + gap_minutes(rng) % 60;
    }
    const auto once = resample_uniform(u, cfg);
    // exact spacing within segments
    for (std::size_t s = 0; s < once.segment_count(); ++s) {
      const auto seg = once.segment(s);
      for (std::size_t i = 1; i < seg.size(); ++i) CHECK(seg[i].time - seg[i - 1].time == 600);
      if (s > 0) CHECK(seg.front().time - once.segment(s - 1).back().time >= cfg.max_gap_s);
    }
    // idempotent
    CHECK(resample_uniform(as_events(once), cfg) == once);
  }
}

TEST_CASE("spatial noise filter examples") {
  const auto l = line_registry();
  const FilterConfig cfg;
  FilterConfig half;
  half.spatial_radius_km = 1.0;
  SUBCASE("within radius is rewritten to the anchor") {
    // A and B are 0.8 km apart here, inside the 1 km radius
    CHECK(locations(spatial_noise_filter(track_of({l.a, l.b, l.a}), l.reg, cfg)) ==
          std::vector<LocationId>{l.a, l.a, l.a});
  }
  SUBCASE("beyond radius is kept") {
    CHECK(locations(spatial_noise_filter(track_of({l.a, l.c}), l.reg, cfg)) ==
          std::vector<LocationId>{l.a, l.c});
  }
  SUBCASE("drift chain under the sticky anchor") {
    CHECK(locations(spatial_noise_filter(track_of({l.a, l.b, l.c}), l.reg, cfg)) ==
          std::vector<LocationId>{l.a, l.a, l.c});
  }
  SUBCASE("half-kilometre example") {
    TowerRegistry reg;
    const auto a = reg.add("A", {10.0, 10.0});
    const auto b = reg.add("B", testing::east_of({10.0, 10.0}, 0.5));
    CHECK(locations(spatial_noise_filter(track_of({a, b, a}), reg, half)) == std::vector<LocationId>{a, a, a});
  }
}

TEST_CASE("spatial noise filter separates consecutive distinct locations (property)") {
  std::mt19937_64 rng(23);
  TowerRegistry reg;
  std::uniform_real_distribution<double> d(-3.0, 3.0);
  const LatLon origin{45.0, 9.0};
  std::vector<LocationId> ids;
  for (int i = 0; i < 60; ++i) {
    ids.push_back(reg.add("T" + std::to_string(i), testing::east_of(testing::north_of(origin, d(rng)), d(rng))));
  }
  const FilterConfig cfg;
  std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<LocationId> locs(50);
    for (auto& x : locs) x = ids[pick(rng)];
    const auto out = spatial_noise_filter(track_of(locs), reg, cfg);
    for (std::size_t i = 1; i < out.samples.size(); ++i) {
      const auto p = out.samples[i - 1].location, q = out.samples[i].location;
      if (p != q) CHECK(haversine_km(reg.position(p), reg.position(q)) >= cfg.spatial_radius_km);
    }
    CHECK(spatial_noise_filter(out, reg, cfg) == out);
  }
}

TEST_CASE("speed screen") {
  const FilterConfig cfg;
  const LatLon p{45.0, 9.0};
  const LocalTime t0 = at(kMonday, 8);
  SUBCASE("60 km/h is kept") {
    const std::vector<GpsPoint> pts{{t0, p}, {t0 + 60, testing::north_of(p, 1.0)}};
    CHECK(speed_screen(pts, cfg).keep);
  }
  SUBCASE("240 km/h discards the trace") {
    const std::vector<GpsPoint> pts{{t0, p}, {t0 + 60, testing::north_of(p, 4.0)}};
    const auto v = speed_screen(pts, cfg);
    CHECK_FALSE(v.keep);
    CHECK(v.offending_pair == 0u);
    CHECK(v.speed_kmh == doctest::Approx(240.0).epsilon(1e-6));
  }
  SUBCASE("pairs under the time floor are ignored") {
    const std::vector<GpsPoint> pts{{t0, p}, {t0 + 10, testing::north_of(p, 0.5)}};
    CHECK(speed_screen(pts, cfg).keep);
  }
  SUBCASE("exactly at the limit discards") {
    const std::vector<GpsPoint> pts{{t0, p}, {t0 + 60, testing::north_of(p, 2.0)}};
    CHECK_FALSE(speed_screen(pts, cfg).keep);
  }
  SUBCASE("duplicate timestamp at a new position is infinite speed") {
    const std::vector<GpsPoint> pts{{t0, p}, {t0, testing::north_of(p, 0.01)}};
    const auto v = speed_screen(pts, cfg);
    CHECK_FALSE(v.keep);
    CHECK(std::isinf(v.speed_kmh));
  }
  SUBCASE("duplicate point is harmless") {
    const std::vector<GpsPoint> pts{{t0, p}, {t0, p}, {t0 + 120, testing::north_of(p, 1.0)}};
    CHECK(speed_screen(pts, cfg).keep);
  }
}

TEST_CASE("speed floor suppresses jitter spikes in a seeded simulation") {
  // A car at 50 km/h sampled every 5-15 s, with occasional 300 m position
  // spikes: the spikes imply well over 120 km/h over seconds, yet every
  // pair at least a minute apart is honest.
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> step(5, 15);
  std::bernoulli_distribution spike(0.05);
  FilterConfig no_floor;
  no_floor.min_segment_seconds = 1;
  const FilterConfig cfg;
  int kept = 0, kept_without_floor = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<GpsPoint> pts;
    LocalTime t = at(kMonday, 8);
    double km = 0.0;
    for (int i = 0; i < 200; ++i) {
      LatLon pos = testing::north_of({45.0, 9.0}, km);
      if (spike(rng)) pos = testing::east_of(pos, 0.3);
      pts.push_back({t, pos});
      const int dt = step(rng);
      t += dt;
      km += 50.0 * dt / 3600.0;
    }
    kept += speed_screen(pts, cfg).keep;
    kept_without_floor += speed_screen(pts, no_floor).keep;
  }
  CHECK(kept == 200);
  CHECK(kept_without_floor < 10);
}

TEST_CASE("speed screen decision is stable under compliant padding (property)") {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> km(0.0, 4.0);
  std::uniform_int_distribution<int> dt(30, 180);
  const FilterConfig cfg;
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<GpsPoint> pts;
    LocalTime t = at(kMonday, 6);
    LatLon pos{45.0, 9.0};
    for (int i = 0; i < 10; ++i) {
      pts.push_back({t, pos});
      t += dt(rng);
      pos = testing::north_of(pos, km(rng));
    }
    const auto verdict = speed_screen(pts, cfg);
    if (verdict.keep) {
      for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const auto span = pts[i + 1].time - pts[i].time;
        if (span < cfg.min_segment_seconds) continue;
        CHECK(haversine_km(pts[i].position, pts[i + 1].position) / (span / 3600.0) < cfg.speed_limit_kmh);
      }
    }
    auto padded = pts;
    padded.insert(padded.begin(), GpsPoint{pts.front().time - 600, pts.front().position});
    padded.push_back(GpsPoint{pts.back().time + 600, testing::north_of(pts.back().position, 0.5)});
    CHECK(speed_screen(padded, cfg).keep == verdict.keep);
  }
}

TEST_CASE("calendar filter") {
  const auto l = line_registry();
  const std::int64_t saturday = kMonday + 5;
  const std::vector<CallEvent> events{{at(kMonday, 9), l.a}, {at(saturday, 9), l.b}};
  const FilterConfig cfg;
  SUBCASE("default drops Saturday") {
    const auto out = calendar_filter(events, cfg);
    REQUIRE(out.size() == 1);
    CHECK(out[0].location == l.a);
  }
  SUBCASE("Thursday/Friday weekend keeps Saturday") {
    FilterConfig gulf;
    gulf.excluded_weekdays = WeekdaySet{Weekday::Thursday, Weekday::Friday};
    CHECK(calendar_filter(events, gulf).size() == 2);
  }
  SUBCASE("empty exclusion set is the identity") {
    FilterConfig none;
    none.excluded_weekdays = WeekdaySet{};
    const auto out = calendar_filter(events, none);
    REQUIRE(out.size() == 2);
    CHECK(out[1].time == events[1].time);
  }
  SUBCASE("idempotent over random streams") {
    std::mt19937_64 rng(41);
    std::uniform_int_distribution<int> hours(0, 24 * 21);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<CallEvent> ev;
      for (int i = 0; i < 30; ++i) ev.push_back({at(kMonday, 0) + hours(rng) * 3600, l.a});
      const auto once = calendar_filter(ev, cfg);
      const auto twice = calendar_filter(once, cfg);
      REQUIRE(once.size() == twice.size());
      for (std::size_t i = 0; i < once.size(); ++i) CHECK(once[i].time == twice[i].time);
    }
  }
}

TEST_CASE("gap segmenter") {
  const auto l = line_registry();
  const FilterConfig cfg;
  SUBCASE("one interval at the earlier call's location") {
    const auto out = gap_segmenter(std::vector<CallEvent>{{at(kMonday, 9), l.a}, {at(kMonday, 11), l.b}}, cfg);
    REQUIRE(out.size() == 1);
    CHECK(out[0].location == l.a);
    CHECK(out[0].start == at(kMonday, 9));
    CHECK(out[0].end == at(kMonday, 11));
  }
  SUBCASE("seventeen hours apart yields nothing") {
    CHECK(gap_segmenter(std::vector<CallEvent>{{at(kMonday, 0), l.a}, {at(kMonday, 17), l.b}}, cfg).empty());
  }
  SUBCASE("exactly sixteen hours yields nothing") {
    CHECK(gap_segmenter(std::vector<CallEvent>{{at(kMonday, 0), l.a}, {at(kMonday, 16), l.b}}, cfg).empty());
  }
  SUBCASE("three calls make two intervals") {
    CHECK(gap_segmenter(std::vector<CallEvent>{{at(kMonday, 9), l.a}, {at(kMonday, 11), l.b}, {at(kMonday, 13), l.c}},
                        cfg)
              .size() == 2);
  }
  SUBCASE("fewer than two events") {
    CHECK(gap_segmenter(std::vector<CallEvent>{{at(kMonday, 9), l.a}}, cfg).empty());
    CHECK(gap_segmenter(std::vector<CallEvent>{}, cfg).empty());
  }
}

TEST_CASE("gap segmenter intervals are disjoint, ordered and short (property)") {
  const auto l = line_registry();
  const FilterConfig cfg;
  std::mt19937_64 rng(43);
  std::uniform_int_distribution<int> gap(0, 30 * 3600);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<CallEvent> ev;
    LocalTime t = at(kMonday, 0);
    for (int i = 0; i < 25; ++i) {
      ev.push_back({t, i % 2 ? l.a : l.b});
      t += gap(rng) / (1 + (i % 3) * 10);
    }
    const auto out = gap_segmenter(ev, cfg);
    for (std::size_t i = 0; i < out.size(); ++i) {
      CHECK(out[i].start < out[i].end);
      CHECK(out[i].duration() < cfg.max_gap_s);
      if (i > 0) CHECK(out[i - 1].end <= out[i].start);
    }
  }
}

TEST_CASE("sparse tower screen") {
  const auto l = line_registry();
  const FilterConfig cfg;
  const auto towers = find_sparse_towers(l.reg, cfg);
  CHECK(towers.is_sparse(l.far));
  CHECK_FALSE(towers.is_sparse(l.a));
  CHECK(towers.count == 1);
  CHECK(towers.nearest_neighbor_km[static_cast<std::size_t>(l.b)] == doctest::Approx(0.8).epsilon(1e-6));

  const LocalTime t = at(kMonday, 0);
  const std::vector<DwellInterval> all_far{{l.far, t, t + 3600}};
  const std::vector<DwellInterval> five_percent{{l.far, t, t + 5 * 360}, {l.a, t + 5 * 360, t + 36000}};
  const std::vector<DwellInterval> ten_percent{{l.far, t, t + 3600}, {l.a, t + 3600, t + 36000}};
  const std::vector<DwellInterval> city{{l.a, t, t + 3600}, {l.b, t + 3600, t + 7200}};
  const std::vector<std::vector<DwellInterval>> users{all_far, five_percent, city, ten_percent};
  const auto result = sparse_tower_screen(users, l.reg, cfg);
  CHECK(result.keep == std::vector<bool>{false, true, true, true});
  CHECK_FALSE(result.towers.every_tower_sparse);

  TowerRegistry single;
  single.add("ONLY", {0.0, 0.0});
  const auto lonely = find_sparse_towers(single, cfg);
  CHECK(lonely.every_tower_sparse);
  CHECK(std::isinf(lonely.nearest_neighbor_km[0]));
}

TEST_CASE("sparse tower nearest neighbours match brute force") {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> lat(-60.0, 60.0), lon(-180.0, 180.0);
  TowerRegistry reg;
  for (int i = 0; i < 400; ++i) reg.add("T" + std::to_string(i), {lat(rng) / 20.0 + 40.0, lon(rng) / 20.0});
  FilterConfig cfg;
  cfg.sparse_tower_km = 60.0;
  const auto towers = find_sparse_towers(reg, cfg);
  for (std::size_t i = 0; i < reg.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < reg.size(); ++j) {
      if (i != j) {
        best = std::min(best, haversine_km(reg.position(static_cast<LocationId>(i)),
                                           reg.position(static_cast<LocationId>(j))));
      }
    }
    CHECK(towers.nearest_neighbor_km[i] == best);
    CHECK(towers.sparse[i] == (best > 60.0));
  }
}
