#include <doctest.h>

#include <boost/math/special_functions/beta.hpp>
#include <filesystem>
#include <fstream>
#include <random>

#include "../support/simulate.hpp"
#include "lifepattern/analysis.hpp"
#include "lifepattern/errors.hpp"

using namespace lifepattern;

namespace {

DayPath path_of(const std::string& codes, DayNumber date = 0) {
  DayPath p;
  p.date = date;
  for (int h = 0; h < 24; ++h) p.labels[h] = *parse_label_token(std::string(1, codes[h]));
  return p;
}

double occupancy_of(const GroupProfile& p, int hour, Category c) {
  double sum = 0;
  for (std::size_t l = 0; l < p.labels.size(); ++l)
    if (p.labels[l].category == c) sum += p.occupancy[hour][l];
  return sum;
}

GridCell cell_with(std::vector<double> shares) {
  GridCell c;
  c.shares = std::move(shares);
  c.total = 10;
  return c;
}

// Two-tailed p through the regularized incomplete beta function.
double p_by_beta(double r, std::size_t m) {
  const double df = static_cast<double>(m - 2);
  const double t2 = r * r * df / (1.0 - r * r);
  return boost::math::ibeta(df / 2.0, 0.5, df / (df + t2));
}

}  // namespace

TEST_CASE("a full day at home gives home occupancy one") {
  const std::vector<UserDays> users{{"u", {path_of(std::string(24, 'H'))}}};
  const auto g = build_support_graph(users);
  const auto t = assemble_total_matrix(users, g, MatrixMode::kAllDays, Calendar{});
  const auto profiles = group_profiles(std::vector<int>{0}, 1, t.matrix, g);
  REQUIRE(profiles.size() == 1);
  CHECK(profiles[0].members == 1);
  for (int h = 0; h < 24; ++h) CHECK(occupancy_of(profiles[0], h, Category::H) == doctest::Approx(1.0));
}

TEST_CASE("profile rows sum to one and match a direct label count") {
  std::mt19937_64 rng(1);
  const std::string alphabet = "HWNDOU";
  std::uniform_int_distribution<int> pick(0, 5), ndays(1, 4);
  std::vector<UserDays> users;
  for (int u = 0; u < 40; ++u) {
    UserDays ud{"u" + std::to_string(u), {}};
    for (int d = ndays(rng); d > 0; --d) {
      std::string codes(24, 'H');
      for (auto& ch : codes) ch = alphabet[pick(rng)];
      ud.days.push_back(path_of(codes, d));
    }
    users.push_back(std::move(ud));
  }
  const auto g = build_support_graph(users);
  const auto t = assemble_total_matrix(users, g, MatrixMode::kAllDays, Calendar{});
  REQUIRE(t.owners.size() == 40);
  std::vector<int> groups(40);
  for (int u = 0; u < 40; ++u) groups[u] = u % 3;
  std::vector<int> user_of(40);
  for (int j = 0; j < 40; ++j) user_of[j] = std::stoi(t.owners[j].substr(1));
  const auto profiles = group_profiles(groups, 3, t.matrix, g);
  REQUIRE(profiles.size() == 3);
  for (const auto& p : profiles) {
    CHECK(p.members > 0);
    for (int h = 0; h < 24; ++h) {
      double row = 0;
      for (double v : p.occupancy[h]) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0 + 1e-12);
        row += v;
      }
      CHECK(row == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
  // Occupancy equals the averaged per-user fraction of days holding each label.
  for (int gi = 0; gi < 3; ++gi)
    for (int h = 0; h < 24; h += 5)
      for (char ch : alphabet) {
        const auto cat = parse_label_token(std::string(1, ch))->category;
        double expected = 0;
        std::size_t members = 0;
        for (int j = 0; j < 40; ++j) {
          if (groups[j] != gi) continue;
          ++members;
          double hits = 0;
          const auto& u = users[user_of[j]];
          for (const auto& d : u.days) hits += d.labels[h].category == cat;
          expected += hits / static_cast<double>(u.days.size());
        }
        CHECK(occupancy_of(profiles[gi], h, cat) == doctest::Approx(expected / members).epsilon(1e-9));
      }
}

TEST_CASE("regular office profile follows its template") {
  SyntheticSpec spec;
  spec.n_users = 30;
  spec.n_days = 28;
  spec.seed = 2;
  spec.archetype_mix = {{Archetype::RegularOffice, 1.0}};
  const auto sim = oracle::simulate(spec);
  std::vector<UserDays> users;
  double workday_share = 0;
  for (const auto& s : sim) {
    REQUIRE(s.home.has_value());
    REQUIRE_FALSE(s.days.days.empty());
    double wd = 0;
    for (const auto& d : s.days.days) wd += Calendar{}.is_workday(d.date);
    workday_share += wd / static_cast<double>(s.days.days.size());
    users.push_back(s.days);
  }
  workday_share /= static_cast<double>(users.size());
  const auto g = build_support_graph(users);
  const auto t = assemble_total_matrix(users, g, MatrixMode::kAllDays, Calendar{});
  const auto profiles = group_profiles(std::vector<int>(users.size(), 0), 1, t.matrix, g);
  const auto& p = profiles[0];
  const double w_prob = archetype_template(Archetype::RegularOffice).workday[0].prob;
  for (int h : {0, 1, 2, 3, 4, 5, 6, 22, 23}) CHECK(occupancy_of(p, h, Category::H) >= 0.9);
  for (int h = 10; h < 17; ++h) {
    CHECK(std::abs(occupancy_of(p, h, Category::W) - w_prob * workday_share) <= 0.1);
    CHECK(occupancy_of(p, h, Category::W) > occupancy_of(p, 3, Category::W));
  }
}

TEST_CASE("regional shares and their spread") {
  const LatLon sw{35.6, 139.6};
  std::vector<LatLon> homes;
  std::vector<int> groups;
  // Cell (0, 0): one member per group.
  for (int g = 0; g < 7; ++g) {
    homes.push_back(offset_m(sw, 100.0 + 10 * g, 100.0));
    groups.push_back(g);
  }
  // Cell (2, 0): six members of group 3.
  for (int i = 0; i < 6; ++i) {
    homes.push_back(offset_m(sw, 1100.0 + 10 * i, 50.0));
    groups.push_back(3);
  }
  // Cell (0, 3): four members, dropped.
  for (int i = 0; i < 4; ++i) {
    homes.push_back(offset_m(sw, 50.0, 1600.0 + 10 * i));
    groups.push_back(i);
  }
  homes.push_back(sw);
  groups.push_back(0);
  const auto cells = regional_stats(homes, groups, 7, GridParams{});
  REQUIRE(cells.size() == 2);
  CHECK(cells[0].row == 0);
  CHECK(cells[0].col == 0);
  CHECK(cells[0].total == 8);
  CHECK(cells[1].row == 2);
  CHECK(cells[1].col == 0);
  CHECK(cells[1].total == 6);
  for (const auto& c : cells) {
    double sum = 0;
    for (double s : c.shares) sum += s;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(cells[1].shares[3] == 1.0);
  CHECK(cells[1].stddev == doctest::Approx(std::sqrt(6.0) / 7.0).epsilon(1e-12));

  std::vector<LatLon> uniform(homes.begin(), homes.begin() + 7);
  std::vector<int> ug(groups.begin(), groups.begin() + 7);
  const auto one = regional_stats(uniform, ug, 7, GridParams{});
  REQUIRE(one.size() == 1);
  CHECK(one[0].stddev <= 1e-15);

  GridParams loose;
  loose.min_cell_population = 4;
  CHECK(regional_stats(homes, groups, 7, loose).size() == 3);
}

TEST_CASE("grid counts of homes and workplaces") {
  const LatLon sw{35.6, 139.6};
  const std::vector<LatLon> homes{sw, offset_m(sw, 10, 10), offset_m(sw, 700, 20)};
  const std::vector<LatLon> work{offset_m(sw, 720, 30), offset_m(sw, 705, 5)};
  const auto counts = grid_counts(homes, work, GridParams{});
  std::size_t h = 0, w = 0;
  for (const auto& c : counts) {
    h += c.homes;
    w += c.workplaces;
    if (c.row == 1 && c.col == 0) {
      CHECK(c.homes == 1);
      CHECK(c.workplaces == 2);
    }
  }
  CHECK(h == 3);
  CHECK(w == 2);
}

TEST_CASE("correlations between group shares") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<GridCell> cells;
  for (int m = 0; m < 100; ++m) {
    std::vector<double> s(4);
    double sum = 0;
    for (auto& v : s) sum += (v = unit(rng));
    for (auto& v : s) v /= sum;
    cells.push_back(cell_with(s));
  }
  const auto corr = group_share_correlations(cells, 4);
  REQUIRE(corr.size() == 16);
  std::size_t nontrivial_p = 0;
  for (const auto& c : corr) {
    const auto& sym = corr[c.group_b * 4 + c.group_a];
    REQUIRE(c.r.has_value());
    CHECK(*c.r == doctest::Approx(*sym.r).epsilon(1e-12));
    if (c.group_a == c.group_b) {
      CHECK(*c.r == 1.0);
      CHECK_FALSE(c.p.has_value());
      continue;
    }
    double ma = 0, mb = 0;
    for (const auto& cell : cells) {
      ma += cell.shares[c.group_a];
      mb += cell.shares[c.group_b];
    }
    ma /= 100;
    mb /= 100;
    double sab = 0, saa = 0, sbb = 0;
    for (const auto& cell : cells) {
      sab += (cell.shares[c.group_a] - ma) * (cell.shares[c.group_b] - mb);
      saa += (cell.shares[c.group_a] - ma) * (cell.shares[c.group_a] - ma);
      sbb += (cell.shares[c.group_b] - mb) * (cell.shares[c.group_b] - mb);
    }
    const double r = sab / std::sqrt(saa * sbb);
    CHECK(*c.r == doctest::Approx(r).epsilon(1e-12));
    CHECK(std::abs(r) <= 0.6);
    REQUIRE(c.p.has_value());
    CHECK(*c.p > 0.0);
    CHECK(*c.p <= 1.0);
    CHECK(*c.p == doctest::Approx(p_by_beta(r, 100)).epsilon(1e-9));
    nontrivial_p += *c.p > 1e-6 && *c.p < 1.0;
  }
  CHECK(nontrivial_p > 0);
}

TEST_CASE("complementary shares are perfectly anticorrelated") {
  std::vector<GridCell> cells;
  for (double x : {0.1, 0.3, 0.35, 0.8, 0.9}) cells.push_back(cell_with({x, 1.0 - x}));
  const auto corr = group_share_correlations(cells, 2);
  CHECK(*corr[1].r == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(*corr[2].r == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("undefined correlations are missing") {
  std::vector<GridCell> cells;
  for (double x : {0.1, 0.3, 0.6}) cells.push_back(cell_with({x, 1.0 - x, 0.0}));
  const auto corr = group_share_correlations(cells, 3);
  for (const auto& c : corr)
    if (c.group_a == 2 || c.group_b == 2) {
      CHECK_FALSE(c.r.has_value());
      CHECK_FALSE(c.p.has_value());
    }
  cells.pop_back();
  for (const auto& c : group_share_correlations(cells, 3)) CHECK_FALSE(c.r.has_value());
}

TEST_CASE("weekday to weekend transitions") {
  DenseMatrix centroids(3, 2);
  centroids(0, 0) = 1.0;
  centroids(1, 1) = 1.0;
  centroids(2, 0) = 1.0;
  centroids(2, 1) = 1.0;
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> pick(0, 2);
  std::normal_distribution<double> jitter(0.0, 0.05);
  DenseMatrix wd(2, 60), we(2, 60);
  std::vector<std::vector<std::size_t>> expected(3, std::vector<std::size_t>(3, 0));
  for (std::size_t j = 0; j < 60; ++j) {
    const int a = pick(rng), b = j < 20 ? a : pick(rng);
    for (std::size_t r = 0; r < 2; ++r) {
      wd(r, j) = centroids(a, r) + jitter(rng);
      we(r, j) = centroids(b, r) + jitter(rng);
    }
    ++expected[a][b];
  }
  const auto t = weekday_weekend_transitions(wd, we, centroids);
  CHECK(t.counts == expected);
  std::size_t total = 0;
  for (std::size_t a = 0; a < 3; ++a) {
    double row = 0;
    for (std::size_t b = 0; b < 3; ++b) {
      total += t.counts[a][b];
      row += t.row_percent[a][b];
    }
    CHECK(row == doctest::Approx(100.0).epsilon(1e-11));
  }
  CHECK(total == 60);

  const auto same = weekday_weekend_transitions(wd, wd, centroids);
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b)
      if (a != b) CHECK(same.counts[a][b] == 0);
      else if (same.counts[a][a] > 0) CHECK(same.row_percent[a][a] == 100.0);
  CHECK_THROWS_AS(weekday_weekend_transitions(wd, DenseMatrix(2, 59), centroids), InvariantError);
}

TEST_CASE("analysis files") {
  const auto dir = std::filesystem::temp_directory_path() / "lifepattern_analysis_test";
  std::filesystem::create_directories(dir);
  const std::vector<UserDays> users{{"u", {path_of("HHHHHHHHWWWWWWWWWWHHHHHH")}}};
  const auto g = build_support_graph(users);
  const auto t = assemble_total_matrix(users, g, MatrixMode::kAllDays, Calendar{});
  const auto profiles = group_profiles(std::vector<int>{0}, 1, t.matrix, g);
  write_profiles_csv(dir / "p.csv", profiles, 0.01);
  std::ifstream in(dir / "p.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == kProfilesCsvHeader);
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 24 * profiles[0].labels.size());
  std::filesystem::remove_all(dir);
}
