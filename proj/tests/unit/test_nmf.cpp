#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <random>
#include <set>

#include "../support/matrices.hpp"
#include "lifepattern/corpus.hpp"
#include "lifepattern/errors.hpp"
#include "lifepattern/nmf.hpp"
#include "lifepattern/parallel.hpp"

using namespace lifepattern;

namespace {

void check_monotone(const Factorization& f) {
  for (std::size_t i = 1; i < f.objective_trace.size(); ++i)
    CHECK(f.objective_trace[i] <= f.objective_trace[i - 1] * (1.0 + 1e-10));
}

void check_nonnegative(const Factorization& f) {
  CHECK(std::all_of(f.W.data().begin(), f.W.data().end(), [](double v) { return v >= 0.0; }));
  CHECK(std::all_of(f.H.data().begin(), f.H.data().end(), [](double v) { return v >= 0.0; }));
}

// Day paths taken straight from ground-truth labels.
std::vector<UserDays> truth_users(const SyntheticCorpus& syn) {
  std::vector<UserDays> users;
  for (const auto& t : syn.truth) {
    UserDays u{t.user_id, {}};
    for (const auto& d : t.days) {
      DayPath p;
      p.date = d.date;
      for (int h = 0; h < 24; ++h) p.labels[h] = {d.labels[h], 0};
      u.days.push_back(p);
    }
    users.push_back(std::move(u));
  }
  return users;
}

TotalMatrix truth_matrix(const SyntheticCorpus& syn, SupportGraph& g) {
  const auto users = truth_users(syn);
  g = build_support_graph(users);
  return assemble_total_matrix(users, g, MatrixMode::kAllDays, Calendar{});
}

}  // namespace

TEST_CASE("rank-one product is recovered") {
  std::mt19937_64 rng(1);
  const auto lr = oracle::low_rank_product(50, 80, 1, rng, 0.0);
  NmfConfig cfg;
  cfg.rank = 1;
  const auto f = nmf(lr.t, cfg);
  CHECK(relative_error(lr.t, f) <= 1e-3);
  check_monotone(f);
}

TEST_CASE("zero matrix gives zero factors") {
  SparseMatrix zero(10, std::vector<SparseVector>(6));
  const auto f = nmf(zero, NmfConfig{});
  CHECK(f.W.rows() == 10);
  CHECK(f.H.cols() == 6);
  CHECK(std::all_of(f.W.data().begin(), f.W.data().end(), [](double v) { return v == 0.0; }));
  CHECK(std::all_of(f.H.data().begin(), f.H.data().end(), [](double v) { return v == 0.0; }));
  for (double v : f.objective_trace) CHECK(v == 0.0);
  CHECK(relative_error(zero, f) == 0.0);
}

TEST_CASE("objective is nonincreasing on random matrices") {
  std::mt19937_64 rng(2);
  const auto t = oracle::random_matrix(100, 200, rng);
  NmfConfig cfg;
  const auto f = nmf(t, cfg);
  CHECK(f.iterations() > 1);
  check_monotone(f);
  check_nonnegative(f);
  for (std::size_t shape = 0; shape < 8; ++shape) {
    const auto m = oracle::random_matrix(20 + 17 * shape, 30 + 11 * shape, rng, 0.3 * (shape % 3));
    NmfConfig c;
    c.rank = 1 + static_cast<int>(shape % 4);
    c.seed = shape;
    c.inner_iters = 1 + static_cast<int>(shape % 3) * 4;
    const auto g = nmf(m, c);
    check_monotone(g);
    check_nonnegative(g);
  }
}

TEST_CASE("trace objective equals the direct residual") {
  std::mt19937_64 rng(3);
  const auto t = oracle::random_matrix(40, 70, rng, 0.5);
  NmfConfig cfg;
  cfg.max_iters = 30;
  const auto f = nmf(t, cfg);
  const double direct = oracle::dense_relative_error(t, f.W, f.H);
  CHECK(relative_error(t, f) == doctest::Approx(direct).epsilon(1e-9));
  CHECK(f.objective_trace.back() == doctest::Approx(direct * direct * t.squared_frobenius()).epsilon(1e-8));
}

TEST_CASE("exact rank-3 products with sparse factors are recovered") {
  int recovered = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    std::mt19937_64 rng(500 + s);
    const auto lr = oracle::low_rank_product(80, 150, 3, rng, 0.5);
    NmfConfig cfg;
    cfg.seed = s;
    const auto f = nmf(lr.t, cfg);
    recovered += relative_error(lr.t, f) <= 1e-3;
  }
  CHECK(recovered >= 9);
}

TEST_CASE("results do not depend on the thread count") {
  std::mt19937_64 rng(4);
  const auto t = oracle::random_matrix(300, 2500, rng, 0.8);
  NmfConfig cfg;
  cfg.max_iters = 20;
  set_thread_count(1);
  const auto a = nmf(t, cfg);
  set_thread_count(4);
  const auto b = nmf(t, cfg);
  set_thread_count(0);
  CHECK(a.W == b.W);
  CHECK(a.H == b.H);
  CHECK(a.objective_trace == b.objective_trace);
  const auto c = nmf(t, cfg);
  CHECK(a.W == c.W);
}

TEST_CASE("rank is validated against the matrix shape") {
  std::mt19937_64 rng(5);
  const auto t = oracle::random_matrix(5, 3, rng);
  NmfConfig cfg;
  cfg.rank = 4;
  CHECK_THROWS_AS(nmf(t, cfg), ConfigError);
  cfg.rank = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = NmfConfig{};
  cfg.rel_tol = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("embedding") {
  std::mt19937_64 rng(6);
  const auto lr = oracle::low_rank_product(60, 100, 3, rng, 0.5);
  NmfConfig cfg;
  cfg.max_iters = 2000;
  cfg.rel_tol = 1e-9;
  const auto f = nmf(lr.t, cfg);

  const auto zero = embed(SparseVector{}, f.W, cfg);
  for (double v : zero) CHECK(v == 0.0);

  for (std::size_t j = 0; j < 100; j += 7) {
    const auto col = lr.t.column(j);
    const auto c = embed(col, f.W, cfg);
    const auto h = f.coordinate(j);
    double num = 0, den = 0;
    for (std::size_t r = 0; r < 3; ++r) {
      num += (c[r] - h[r]) * (c[r] - h[r]);
      den += h[r] * h[r];
    }
    if (den > 0.0)
      CHECK(std::sqrt(num / den) <= 1e-3);
    else
      CHECK(num <= 1e-12);

    auto doubled = col;
    for (auto& v : doubled.value) v *= 2.0;
    const auto c2 = embed(doubled, f.W, cfg);
    for (std::size_t r = 0; r < 3; ++r) CHECK(c2[r] == doctest::Approx(2.0 * c[r]).epsilon(1e-3).scale(1e-6));
  }

  const auto all = embed_columns(lr.t, f.W, cfg);
  CHECK(all.rows() == 3);
  CHECK(all.cols() == 100);
  const auto c5 = embed(lr.t.column(5), f.W, cfg);
  for (std::size_t r = 0; r < 3; ++r) CHECK(all(r, 5) == c5[r]);

  SparseMatrix wrong(61, std::vector<SparseVector>(2));
  CHECK_THROWS_AS(embed_columns(wrong, f.W, cfg), InvariantError);
}

TEST_CASE("strong patterns") {
  std::vector<DayPath> paths(2);
  for (int h = 0; h < 24; ++h) {
    paths[0].labels[h] = {Category::H, 0};
    paths[1].labels[h] = {h >= 9 && h < 18 ? Category::W : Category::H, 0};
  }
  const auto g = build_support_graph(paths);
  std::vector<double> zero(g.size(), 0.0);
  CHECK(strong_pattern(zero, g).empty());

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.1, 3.0);
  std::vector<double> col(g.size());
  for (auto& v : col) v = unit(rng);
  const auto all = strong_pattern(col, g, -1e300);
  CHECK(all.size() == g.size());
  for (std::size_t i = 1; i < all.size(); ++i) {
    const int ha = g.edges()[all[i - 1].edge_index].hour, hb = g.edges()[all[i].edge_index].hour;
    CHECK(ha <= hb);
    if (ha == hb) CHECK(all[i - 1].weight >= all[i].weight);
  }
  const auto some = strong_pattern(col, g, 1.0);
  for (const auto& e : some) CHECK(e.weight > 1.0);
  CHECK(static_cast<std::size_t>(std::count_if(col.begin(), col.end(), [](double v) { return v > 1.0; })) ==
        some.size());
  CHECK_THROWS_AS(strong_pattern(std::vector<double>(3), g), InvariantError);
}

TEST_CASE("three-archetype bases are self-loop patterns of distinct categories") {
  SyntheticSpec spec;
  spec.n_users = 90;
  spec.n_days = 30;
  spec.seed = 8;
  spec.archetype_mix = {{Archetype::HomeStayer, 1.0 / 3}, {Archetype::Traveler, 1.0 / 3},
                        {Archetype::LongHoursOffice, 1.0 / 3}};
  SupportGraph g;
  const auto t = truth_matrix(generate_synthetic(spec), g);
  const auto f = nmf(t.matrix, NmfConfig{});
  std::set<Category> dominant;
  for (std::size_t c = 0; c < 3; ++c) {
    const auto strong = strong_pattern(basis_column(f.W, c), g, 1.0);
    REQUIRE_FALSE(strong.empty());
    std::size_t n_loops = 0;
    std::map<Category, std::size_t> away;
    for (const auto& e : strong) {
      const auto& edge = g.edges()[e.edge_index];
      if (edge.src != edge.dst) continue;
      ++n_loops;
      if (edge.src.category != Category::H) ++away[edge.src.category];
    }
    CHECK(static_cast<double>(n_loops) >= 0.8 * static_cast<double>(strong.size()));
    CHECK(away.size() <= 1);
    dominant.insert(away.empty() ? Category::H : away.begin()->first);
  }
  CHECK(dominant == std::set<Category>{Category::H, Category::W, Category::O});
}

TEST_CASE("basis matching recovers a column permutation") {
  std::mt19937_64 rng(9);
  DenseMatrix a(40, 4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto& v : a.data()) v = unit(rng) < 0.6 ? 0.0 : unit(rng);
  const std::vector<int> perm{2, 0, 3, 1};
  DenseMatrix b(40, 4);
  for (std::size_t i = 0; i < 40; ++i)
    for (std::size_t c = 0; c < 4; ++c) b(i, perm[c]) = a(i, c) * (1.0 + c);
  const auto m = match_bases(a, b);
  CHECK(m.mapping == perm);
  for (double c : m.cosine) CHECK(c == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == 0.0);
  CHECK(cosine_similarity(std::vector<double>{0, 0}, std::vector<double>{0, 1}) == 0.0);
}

TEST_CASE("rank scan covers ranks up to the limit") {
  std::mt19937_64 rng(10);
  const auto lr = oracle::low_rank_product(30, 40, 2, rng, 0.3);
  const auto scan = rank_scan(lr.t, NmfConfig{}, 4);
  REQUIRE(scan.size() == 4);
  for (int r = 0; r < 4; ++r) CHECK(scan[r].rank == r + 1);
  CHECK(scan[1].relative_error < scan[0].relative_error);
  CHECK(rank_scan(oracle::random_matrix(3, 2, rng), NmfConfig{}, 8).size() == 2);
}

TEST_CASE("factor files round trip") {
  std::mt19937_64 rng(11);
  const auto t = oracle::random_matrix(12, 5, rng);
  const auto f = nmf(t, NmfConfig{});
  const auto dir = std::filesystem::temp_directory_path() / "lifepattern_nmf_test";
  std::filesystem::create_directories(dir);
  const std::vector<std::string> owners{"a", "b", "c", "d", "e"};
  write_w_csv(dir / "w.csv", f.W);
  write_h_csv(dir / "h.csv", f.H, owners);
  CHECK(read_w_csv(dir / "w.csv") == f.W);
  std::vector<std::string> back_owners;
  CHECK(read_h_csv(dir / "h.csv", back_owners) == f.H);
  CHECK(back_owners == owners);
  std::filesystem::remove_all(dir);
}

TEST_CASE("all-days and split factorizations share their bases") {
  SyntheticSpec spec;
  spec.n_users = 140;
  spec.n_days = 28;
  spec.seed = 12;
  const auto syn = generate_synthetic(spec);
  SupportGraph g;
  const auto all = truth_matrix(syn, g);
  const auto users = truth_users(syn);
  const auto split = assemble_total_matrix(users, g, MatrixMode::kSplit, Calendar{});
  CHECK(split.matrix.cols() == 2 * all.matrix.cols());
  const auto fa = nmf(all.matrix, NmfConfig{});
  const auto fs = nmf(split.matrix, NmfConfig{});
  const auto m = match_bases(fa.W, fs.W);
  for (double c : m.cosine) CHECK(c >= 0.9);
}
