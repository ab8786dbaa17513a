#include <doctest.h>

#include <sstream>

#include "lifepattern/config.hpp"
#include "lifepattern/errors.hpp"
#include "lifepattern/seed.hpp"

using namespace lifepattern;

namespace {

RunConfig parse(const std::string& text, const std::filesystem::path& base = "/cfg") {
  std::istringstream in(text);
  return parse_config(in, base);
}

}  // namespace

TEST_CASE("seed mixing matches frozen values") {
  CHECK(mix64(0) == 16294208416658607535ULL);
  CHECK(fnv1a64("corpus") == 11201867187162024097ULL);
  CHECK(derive_seed(42, "corpus") == 16260618309651503083ULL);
  CHECK(derive_seed(42, "nmf") == 1982778212648464050ULL);
  CHECK(derive_seed(42, "kmeans") == 14877363372866764979ULL);
  CHECK(derive_seed(7, "kmeans", 3) == 15356610572403996894ULL);
}

TEST_CASE("defaults and derived module seeds") {
  const auto c = parse("seed = 42\n");
  CHECK(c.seed == 42);
  CHECK(c.corpus.seed == derive_seed(42, "corpus"));
  CHECK(c.nmf.seed == derive_seed(42, "nmf"));
  CHECK(c.kmeans.seed == derive_seed(42, "kmeans"));
  CHECK(c.nmf.rank == 3);
  CHECK(c.kmeans.k == 7);
  CHECK(c.dbscan.eps_m == 30.0);
  CHECK(c.dbscan.min_pts == 10);
  CHECK(c.mode == MatrixMode::kAllDays);
  CHECK(c.output_dir == std::filesystem::path("/cfg/lifegraph_out"));
  CHECK(c.gps_path() == std::filesystem::path("/cfg/lifegraph_out/gps.csv"));
}

TEST_CASE("section keys are applied") {
  const auto c = parse(
      "seed = 5\nmode = split\noutput_dir = ../runs/a\ninput_path = /data/gps.csv\n"
      "[corpus]\nn_users = 12\nn_days = 9\nstart_date = 2013-01-07\narchetype_mix = home-stayer:0.25, "
      "traveler:0.75\nbbox = 35.0, 139.0, 35.5, 139.5\nseed = 77\n"
      "[staypoint]\nmax_radius_m = 150\nmin_duration_s = 1200\n"
      "[dbscan]\neps_m = 40\nmin_pts = 6\n"
      "[places]\nnight_window = 21:00-05:30\nworkdays = mon, tue, wed\nexcluded_dates = 2013-01-09, 2013-01-08\n"
      "[lifegraph]\nempty_day_policy = label-u\ndistinct_others = 3\n"
      "[nmf]\nrank = 4\ninner_iters = 2\n"
      "[kmeans]\nk = 5\nn_restarts = 3\nseed = 9\n"
      "[analysis]\ncell_size_m = 250\nmin_cell_population = 3\n",
      "/home/x/cfg");
  CHECK(c.mode == MatrixMode::kSplit);
  CHECK(c.output_dir == std::filesystem::path("/home/x/runs/a"));
  CHECK(c.gps_path() == std::filesystem::path("/data/gps.csv"));
  CHECK(c.corpus.n_users == 12);
  CHECK(c.corpus.start_day == *parse_date("2013-01-07"));
  REQUIRE(c.corpus.archetype_mix.size() == 2);
  CHECK(c.corpus.archetype_mix[1].first == Archetype::Traveler);
  CHECK(c.corpus.archetype_mix[1].second == 0.75);
  CHECK(c.corpus.region.max_lon == 139.5);
  CHECK(c.corpus.seed == 77);
  CHECK(c.staypoint.min_duration_s == 1200);
  CHECK(c.dbscan.min_pts == 6);
  CHECK(c.places.night_window.start_s == 21 * 3600);
  CHECK(c.places.night_window.end_s == 5 * 3600 + 1800);
  CHECK(c.places.calendar.workdays == std::array<bool, 7>{false, true, true, true, false, false, false});
  CHECK(c.places.calendar.excluded_dates == std::vector<DayNumber>{*parse_date("2013-01-08"), *parse_date("2013-01-09")});
  CHECK(c.lifegraph.empty_day_policy == EmptyDayPolicy::kLabelU);
  CHECK(c.lifegraph.distinct_others == 3);
  CHECK(c.nmf.rank == 4);
  CHECK(c.nmf.seed == derive_seed(5, "nmf"));
  CHECK(c.kmeans.seed == 9);
  CHECK(c.analysis.grid.cell_size_m == 250.0);
}

TEST_CASE("invalid configurations are rejected") {
  for (const char* text : {"colour = blue\n", "[nmf]\nranks = 3\n", "[unknown]\nx = 1\n", "[nmf]\nrank = three\n",
                           "[nmf]\nrank = 0\n", "[kmeans]\nk = -1\n", "mode = weekly\n", "seed = -3\n",
                           "[places]\nnight_window = 25:00-06:00\n", "[places]\nworkdays = mon, funday\n",
                           "[corpus]\narchetype_mix = astronaut:1\n", "[corpus]\nbbox = 1, 2, 3\n",
                           "[corpus]\ndropout_prob = 1.5\n", "[dbscan]\neps_m = 0\n",
                           "[lifegraph]\nempty_day_policy = drop\n", "[analysis]\ndisplay_threshold = 2\n",
                           "[nmf\nrank = 3\n"}) {
    CAPTURE(text);
    CHECK_THROWS_AS(parse(text), ConfigError);
  }
  CHECK_THROWS_AS(load_config("/nonexistent/config.ini"), ConfigError);
}

TEST_CASE("snapshot records resolved values") {
  const auto c = parse("seed = 3\n[kmeans]\nk = 4\n");
  const auto j = config_snapshot(c);
  CHECK(j["seed"] == 3);
  CHECK(j["kmeans"]["k"] == 4);
  CHECK(j["kmeans"]["seed"] == derive_seed(3, "kmeans"));
  CHECK(j["analysis"]["stddev_divisor"] == "population");
  CHECK(j["places"]["night_window"] == "20:00-06:00");
  CHECK(j["output_dir"] == "/cfg/lifegraph_out");
}
