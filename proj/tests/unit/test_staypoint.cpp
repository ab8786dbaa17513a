#include <doctest.h>

#include <cmath>
#include <random>
#include <fstream>
#include <sstream>

#include "lifepattern/corpus.hpp"
#include "lifepattern/staypoint.hpp"

using namespace lifepattern;

namespace {

constexpr Seconds kT0 = 15706 * kSecondsPerDay;

std::vector<GpsFix> dwell(LatLon at, Seconds from, Seconds to, Seconds step, double sigma,
                          std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, sigma);
  std::vector<GpsFix> out;
  for (Seconds t = from; t <= to; t += step) {
    const LatLon p = sigma > 0 ? offset_m(at, n(rng), n(rng)) : at;
    out.push_back({t, p.lat, p.lon});
  }
  return out;
}

void check_stay_properties(std::span<const GpsFix> fixes, std::span<const StayPoint> stays,
                           const StayParams& params) {
  for (std::size_t k = 0; k < stays.size(); ++k) {
    const auto& s = stays[k];
    CHECK(s.duration() >= params.min_duration_s);
    REQUIRE(s.first_fix + s.n_fixes <= fixes.size());
    const LatLon anchor{fixes[s.first_fix].lat, fixes[s.first_fix].lon};
    for (std::size_t j = s.first_fix; j < s.first_fix + s.n_fixes; ++j)
      CHECK(haversine_m(anchor, {fixes[j].lat, fixes[j].lon}) <= params.max_radius_m);
    CHECK(s.arv_t == fixes[s.first_fix].t);
    CHECK(s.lev_t == fixes[s.first_fix + s.n_fixes - 1].t);
    if (k > 0) {
      CHECK(stays[k - 1].lev_t < s.arv_t);
      CHECK(stays[k - 1].first_fix + stays[k - 1].n_fixes <= s.first_fix);
    }
  }
}

}  // namespace

TEST_CASE("noise filter leaves stationary and tiny streams alone") {
  CHECK(filter_noise({}, 3.0).empty());
  std::vector<GpsFix> still;
  for (int i = 0; i < 50; ++i) still.push_back({kT0 + i * 300, 35.0, 139.0});
  CHECK(filter_noise(still, 3.0) == still);
  const std::vector<GpsFix> two{{kT0, 35.0, 139.0}, {kT0 + 1, 36.0, 139.0}};
  CHECK(filter_noise(two, 3.0) == two);
}

TEST_CASE("noise filter removes exactly a teleported fix") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> step(300.0, 500.0), heading(0.0, 6.283185307179586);
  std::vector<GpsFix> fixes;
  LatLon p{35.6, 139.6};
  for (int i = 0; i < 101; ++i) {
    fixes.push_back({kT0 + i * 300, p.lat, p.lon});
    const double d = step(rng), h = heading(rng);
    p = offset_m(p, d * std::cos(h), d * std::sin(h));
  }
  const LatLon far = offset_m({fixes[60].lat, fixes[60].lon}, 50000.0, 0.0);
  fixes.insert(fixes.begin() + 61, GpsFix{kT0 + 60 * 300 + 150, far.lat, far.lon});

  // Independent threshold: mean + 3 sd of positive consecutive speeds.
  std::vector<double> speeds;
  for (std::size_t i = 1; i < fixes.size(); ++i) {
    const double v = haversine_m({fixes[i - 1].lat, fixes[i - 1].lon}, {fixes[i].lat, fixes[i].lon}) /
                     static_cast<double>(fixes[i].t - fixes[i - 1].t);
    if (v > 0) speeds.push_back(v);
  }
  double mean = 0;
  for (double v : speeds) mean += v;
  mean /= static_cast<double>(speeds.size());
  double var = 0;
  for (double v : speeds) var += (v - mean) * (v - mean);
  const double limit = mean + 3.0 * std::sqrt(var / static_cast<double>(speeds.size()));
  CHECK(limit < 50000.0 / 150.0);
  CHECK(limit > 500.0 / 300.0);

  const auto kept = filter_noise(fixes, 3.0);
  REQUIRE(kept.size() == fixes.size() - 1);
  auto expected = fixes;
  expected.erase(expected.begin() + 61);
  CHECK(kept == expected);
}

TEST_CASE("a 30-minute dwell of seven fixes is one stay") {
  std::mt19937_64 rng(1);
  const auto fixes = dwell({35.0, 139.0}, kT0, kT0 + 1800, 300, 0.0, rng);
  REQUIRE(fixes.size() == 7);
  const auto stays = extract_stay_points(fixes, StayParams{});
  REQUIRE(stays.size() == 1);
  CHECK(stays[0].n_fixes == 7);
  CHECK(stays[0].duration() == 1800);
}

TEST_CASE("one second short of the threshold is not a stay") {
  std::vector<GpsFix> fixes{{kT0, 35.0, 139.0}, {kT0 + 1799, 35.0, 139.0}};
  CHECK(extract_stay_points(fixes, StayParams{}).empty());
}

TEST_CASE("fixes 1 km apart never form a stay") {
  const LatLon a{35.0, 139.0};
  const LatLon b = offset_m(a, 1000.0, 0.0);
  std::vector<GpsFix> fixes{{kT0, a.lat, a.lon}, {kT0 + 7200, b.lat, b.lon}};
  CHECK(extract_stay_points(fixes, StayParams{}).empty());
}

TEST_CASE("commuter day yields home and work stays near the true places") {
  std::mt19937_64 rng(11);
  const double sigma = 10.0;
  const LatLon home{35.65, 139.70};
  const LatLon work = offset_m(home, 6000.0, 3000.0);
  auto fixes = dwell(home, kT0, kT0 + 10 * 3600, 300, sigma, rng);
  for (Seconds t = kT0 + 10 * 3600 + 300; t < kT0 + 10 * 3600 + 1800; t += 300) {
    const double f = static_cast<double>(t - (kT0 + 10 * 3600)) / 1800.0;
    fixes.push_back({t, home.lat + f * (work.lat - home.lat), home.lon + f * (work.lon - home.lon)});
  }
  const auto at_work = dwell(work, kT0 + 10 * 3600 + 1800, kT0 + 18 * 3600 + 1800, 300, sigma, rng);
  fixes.insert(fixes.end(), at_work.begin(), at_work.end());
  for (Seconds t = kT0 + 18 * 3600 + 2100; t <= kT0 + 19 * 3600; t += 300) {
    const double f = static_cast<double>(t - (kT0 + 18 * 3600 + 1800)) / 1800.0;
    fixes.push_back({t, work.lat + f * (home.lat - work.lat), work.lon + f * (home.lon - work.lon)});
  }

  const auto clean = filter_noise(fixes, 3.0);
  const auto stays = extract_stay_points(clean, StayParams{});
  REQUIRE(stays.size() == 2);
  CHECK(haversine_m(stays[0].centroid, home) <= 2 * sigma);
  CHECK(haversine_m(stays[1].centroid, work) <= 2 * sigma);
  check_stay_properties(clean, stays, StayParams{});
}

TEST_CASE("stay invariants hold on synthetic tracks") {
  SyntheticSpec spec;
  spec.n_users = 14;
  spec.n_days = 6;
  spec.dropout_prob = 0.2;
  spec.gps_noise_sigma_m = 25.0;
  spec.seed = 5;
  const auto syn = generate_synthetic(spec);
  for (const StayParams params : {StayParams{}, StayParams{80.0, 900, 2.0}}) {
    for (const auto& track : syn.tracks) {
      const auto clean = filter_noise(track.fixes, params.speed_sigma_mult);
      const auto stays = extract_stay_points(clean, params);
      CHECK_FALSE(stays.empty());
      check_stay_properties(clean, stays, params);
    }
  }
}

TEST_CASE("extraction after a second filter pass matches on outlier-free data") {
  SyntheticSpec spec;
  spec.n_users = 7;
  spec.n_days = 4;
  spec.seed = 8;
  const auto syn = generate_synthetic(spec);
  for (const auto& track : syn.tracks) {
    const auto once = filter_noise(track.fixes, 3.0);
    const auto twice = filter_noise(once, 3.0);
    const auto a = extract_stay_points(once, StayParams{});
    const auto b = extract_stay_points(twice, StayParams{});
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
      CHECK(a[k].arv_t == b[k].arv_t);
      CHECK(a[k].lev_t == b[k].lev_t);
      CHECK(haversine_m(a[k].centroid, b[k].centroid) < 1.0);
    }
  }
}

TEST_CASE("coverage counts fixes per local date") {
  std::vector<GpsFix> fixes{{kT0 + 10, 0, 0}, {kT0 + 20, 0, 0}, {kT0 + kSecondsPerDay * 2, 0, 0}};
  const auto c = coverage_days(fixes);
  REQUIRE(c.size() == 2);
  CHECK(c[0].date == 15706);
  CHECK(c[0].n_fixes == 2);
  CHECK(c[1].date == 15708);
  CHECK(c[1].n_fixes == 1);
}

TEST_CASE("stays CSV round trip") {
  std::mt19937_64 rng(2);
  auto fixes = dwell({35.0, 139.0}, kT0, kT0 + 7200, 300, 5.0, rng);
  const auto more = dwell({35.1, 139.1}, kT0 + 9000, kT0 + 16000, 300, 5.0, rng);
  fixes.insert(fixes.end(), more.begin(), more.end());
  std::vector<UserStays> users{{"a", extract_stay_points(fixes, StayParams{})}, {"b", {}}};
  const auto path = std::filesystem::temp_directory_path() / "lifepattern_stays_test.csv";
  {
    std::ofstream out(path);
    write_stays_csv(out, users);
  }
  const auto back = read_stays_csv(path);
  std::filesystem::remove(path);
  REQUIRE(back.size() == 1);
  REQUIRE(back[0].stays.size() == users[0].stays.size());
  for (std::size_t k = 0; k < back[0].stays.size(); ++k) {
    CHECK(back[0].stays[k].centroid == users[0].stays[k].centroid);
    CHECK(back[0].stays[k].arv_t == users[0].stays[k].arv_t);
    CHECK(back[0].stays[k].n_fixes == users[0].stays[k].n_fixes);
  }
}

TEST_CASE("parameter validation") {
  CHECK_NOTHROW(StayParams{}.validate());
  CHECK_THROWS(StayParams{0.0, 1800, 3.0}.validate());
  CHECK_THROWS(StayParams{200.0, 0, 3.0}.validate());
  CHECK_THROWS(StayParams{200.0, 1800, -1.0}.validate());
}
