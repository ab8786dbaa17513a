#include "lifepattern/kmeans.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

#include "lifepattern/errors.hpp"
#include "lifepattern/io.hpp"
#include "lifepattern/parallel.hpp"
#include "lifepattern/seed.hpp"

namespace lifepattern {

void KmeansConfig::validate() const {
  if (k < 1) throw ConfigError("kmeans.k must be >= 1");
  if (n_restarts < 1) throw ConfigError("kmeans.n_restarts must be >= 1");
  if (max_iters < 1) throw ConfigError("kmeans.max_iters must be >= 1");
}

namespace {

struct DensePoints {
  const DenseMatrix& m;

  std::size_t size() const { return m.rows(); }
  std::size_t dim() const { return m.cols(); }
  double sq_dist(std::size_t i, std::span<const double> c, double /*c_norm2*/) const {
    const auto x = m.row(i);
    double s = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) s += (x[d] - c[d]) * (x[d] - c[d]);
    return s;
  }
  void accumulate(std::size_t i, double* acc) const {
    const auto x = m.row(i);
    for (std::size_t d = 0; d < x.size(); ++d) acc[d] += x[d];
  }
  void copy_to(std::size_t i, std::span<double> out) const {
    const auto x = m.row(i);
    std::copy(x.begin(), x.end(), out.begin());
  }
};

struct SparsePoints {
  const SparseMatrix& m;
  std::vector<double> norm2;

  explicit SparsePoints(const SparseMatrix& s) : m(s), norm2(s.cols()) {
    for (std::size_t j = 0; j < s.cols(); ++j)
      for (double v : s.column_values(j)) norm2[j] += v * v;
  }
  std::size_t size() const { return m.cols(); }
  std::size_t dim() const { return m.rows(); }
  double sq_dist(std::size_t i, std::span<const double> c, double c_norm2) const {
    const auto idx = m.column_indices(i);
    const auto val = m.column_values(i);
    double dot = 0.0;
    for (std::size_t p = 0; p < idx.size(); ++p) dot += val[p] * c[idx[p]];
    return std::max(0.0, norm2[i] - 2.0 * dot + c_norm2);
  }
  void accumulate(std::size_t i, double* acc) const {
    const auto idx = m.column_indices(i);
    const auto val = m.column_values(i);
    for (std::size_t p = 0; p < idx.size(); ++p) acc[idx[p]] += val[p];
  }
  void copy_to(std::size_t i, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    accumulate(i, out.data());
  }
};

double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

template <class Points>
class Lloyd {
 public:
  Lloyd(const Points& pts, std::size_t k)
      : pts_(pts), k_(k), centroids_(k, pts.dim()), c_norm2_(k), assignment_(pts.size(), -1),
        dist_(pts.size()) {}

  void seed_plus_plus(std::mt19937_64& rng) {
    const std::size_t n = pts_.size();
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::size_t chosen = pick(rng);
    for (std::size_t c = 0; c < k_; ++c) {
      if (c > 0) {
        double total = 0.0;
        for (double v : d2) total += v;
        if (total > 0.0) {
          const double r = std::uniform_real_distribution<double>(0.0, total)(rng);
          double cum = 0.0;
          chosen = n;
          for (std::size_t i = 0; i < n; ++i) {
            if (d2[i] <= 0.0) continue;
            cum += d2[i];
            chosen = i;
            if (cum > r) break;
          }
        } else {
          chosen = pick(rng);
        }
      }
      set_centroid_to_point(c, chosen);
      parallel_for(n, [&](std::size_t i) {
        d2[i] = std::min(d2[i], pts_.sq_dist(i, centroids_.row(c), c_norm2_[c]));
      });
    }
  }

  // Returns the number of points whose group changed.
  std::size_t assign() {
    std::vector<std::uint8_t> changed(pts_.size(), 0);
    parallel_for(pts_.size(), [&](std::size_t i) {
      int best = 0;
      double best_d = pts_.sq_dist(i, centroids_.row(0), c_norm2_[0]);
      for (std::size_t c = 1; c < k_; ++c) {
        const double d = pts_.sq_dist(i, centroids_.row(c), c_norm2_[c]);
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      changed[i] = assignment_[i] != best;
      assignment_[i] = best;
      dist_[i] = best_d;
    });
    return static_cast<std::size_t>(std::count(changed.begin(), changed.end(), 1));
  }

  void repair_empty() {
    for (std::size_t round = 0; round < k_; ++round) {
      std::vector<std::size_t> members(k_, 0);
      for (int a : assignment_) ++members[a];
      const auto empty = std::find(members.begin(), members.end(), 0);
      if (empty == members.end()) return;
      const auto c = static_cast<std::size_t>(empty - members.begin());
      std::size_t far = pts_.size();
      for (std::size_t i = 0; i < pts_.size(); ++i) {
        if (members[assignment_[i]] < 2) continue;
        if (far == pts_.size() || dist_[i] > dist_[far]) far = i;
      }
      if (far == pts_.size()) return;
      set_centroid_to_point(c, far);
      assignment_[far] = static_cast<int>(c);
      dist_[far] = 0.0;
    }
  }

  void update_means() {
    const std::size_t d = pts_.dim();
    const auto sums = blocked_sum(pts_.size(), k_ * d + k_, [&](std::size_t i, double* acc) {
      const auto a = static_cast<std::size_t>(assignment_[i]);
      pts_.accumulate(i, acc + a * d);
      acc[k_ * d + a] += 1.0;
    });
    for (std::size_t c = 0; c < k_; ++c) {
      const double count = sums[k_ * d + c];
      if (count == 0.0) continue;
      auto row = centroids_.row(c);
      for (std::size_t j = 0; j < d; ++j) row[j] = sums[c * d + j] / count;
      c_norm2_[c] = squared_norm(row);
    }
  }

  void refresh_distances() {
    parallel_for(pts_.size(), [&](std::size_t i) {
      const auto a = static_cast<std::size_t>(assignment_[i]);
      dist_[i] = pts_.sq_dist(i, centroids_.row(a), c_norm2_[a]);
    });
  }

  double distortion() const {
    return blocked_sum(dist_.size(), 1, [&](std::size_t i, double* acc) { acc[0] += dist_[i]; })[0] /
           static_cast<double>(dist_.size());
  }

  ClusterResult run(std::mt19937_64& rng, int max_iters) {
    ClusterResult r;
    seed_plus_plus(rng);
    assign();
    r.distortion_trace.push_back(distortion());
    int iter = 0;
    bool stable = false;
    while (iter < max_iters) {
      repair_empty();
      update_means();
      ++iter;
      stable = assign() == 0;
      r.distortion_trace.push_back(distortion());
      if (stable) break;
    }
    if (!stable) {
      repair_empty();
      update_means();
      refresh_distances();
    }
    r.assignment = assignment_;
    r.centroids = centroids_;
    r.distortion = distortion();
    r.iterations_run = iter;
    return r;
  }

 private:
  void set_centroid_to_point(std::size_t c, std::size_t i) {
    pts_.copy_to(i, centroids_.row(c));
    c_norm2_[c] = squared_norm(centroids_.row(c));
  }

  const Points& pts_;
  std::size_t k_;
  DenseMatrix centroids_;
  std::vector<double> c_norm2_;
  std::vector<int> assignment_;
  std::vector<double> dist_;
};

template <class Points>
ClusterResult run_kmeans(const Points& pts, const KmeansConfig& cfg) {
  cfg.validate();
  if (static_cast<std::size_t>(cfg.k) > pts.size())
    throw ConfigError(fmt::format("kmeans.k = {} exceeds the number of points ({})", cfg.k, pts.size()));
  ClusterResult best;
  for (int r = 0; r < cfg.n_restarts; ++r) {
    std::mt19937_64 rng(derive_seed(cfg.seed, "kmeans", static_cast<std::uint64_t>(r)));
    Lloyd<Points> lloyd(pts, static_cast<std::size_t>(cfg.k));
    auto res = lloyd.run(rng, cfg.max_iters);
    res.restart = r;
    if (r == 0 || res.distortion < best.distortion) best = std::move(res);
  }
  return best;
}

}  // namespace

ClusterResult kmeans(const DenseMatrix& points, const KmeansConfig& cfg) {
  return run_kmeans(DensePoints{points}, cfg);
}

ClusterResult kmeans(const SparseMatrix& points, const KmeansConfig& cfg) {
  return run_kmeans(SparsePoints(points), cfg);
}

int nearest_centroid(std::span<const double> point, const DenseMatrix& centroids) {
  if (point.size() != centroids.cols()) throw InvariantError("point and centroid dimensions differ");
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows(); ++c) {
    double d = 0.0;
    for (std::size_t j = 0; j < point.size(); ++j) d += (point[j] - centroids(c, j)) * (point[j] - centroids(c, j));
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

std::vector<ElbowPoint> elbow_curve(const DenseMatrix& points, int k_max, const KmeansConfig& cfg) {
  if (k_max < 1 || static_cast<std::size_t>(k_max) > points.rows())
    throw ConfigError(fmt::format("elbow k_max = {} must lie in [1, {}]", k_max, points.rows()));
  std::vector<ElbowPoint> curve;
  for (int k = 1; k <= k_max; ++k) {
    KmeansConfig c = cfg;
    c.k = k;
    curve.push_back({k, kmeans(points, c).distortion});
  }
  return curve;
}

std::optional<int> suggest_k(std::span<const ElbowPoint> curve) {
  if (curve.size() < 3) return std::nullopt;
  std::optional<int> best;
  double best_v = 0.0;
  for (std::size_t i = 1; i + 1 < curve.size(); ++i) {
    const double v = curve[i - 1].distortion - 2.0 * curve[i].distortion + curve[i + 1].distortion;
    if (!best || v > best_v) {
      best = curve[i].k;
      best_v = v;
    }
  }
  return best;
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw InvariantError("adjusted_rand_index: labelings differ in length");
  auto pairs = [](double x) { return x * (x - 1.0) / 2.0; };
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> ca, cb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0;
    ca[a[i]] += 1.0;
    cb[b[i]] += 1.0;
  }
  double index = 0.0, sa = 0.0, sb = 0.0;
  for (const auto& [key, v] : joint) index += pairs(v);
  for (const auto& [key, v] : ca) sa += pairs(v);
  for (const auto& [key, v] : cb) sb += pairs(v);
  const double total = pairs(static_cast<double>(a.size()));
  if (total == 0.0) return 1.0;
  const double expected = sa * sb / total;
  const double max_index = 0.5 * (sa + sb);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

double matched_purity(std::span<const int> clusters, std::span<const int> classes) {
  if (clusters.size() != classes.size()) throw InvariantError("matched_purity: labelings differ in length");
  if (clusters.empty()) return 1.0;
  const int kc = *std::max_element(clusters.begin(), clusters.end()) + 1;
  const int kt = *std::max_element(classes.begin(), classes.end()) + 1;
  const int m = std::max(kc, kt);
  if (m > 10) throw std::invalid_argument("matched_purity supports at most 10 labels");
  std::vector<double> table(static_cast<std::size_t>(m * m), 0.0);
  for (std::size_t i = 0; i < clusters.size(); ++i) table[clusters[i] * m + classes[i]] += 1.0;
  std::vector<int> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0.0;
  do {
    double s = 0.0;
    for (int c = 0; c < m; ++c) s += table[c * m + perm[c]];
    best = std::max(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(clusters.size());
}

ComparisonReport compare_direct_vs_metagraph(const SparseMatrix& t, const NmfConfig& nmf_cfg,
                                             const KmeansConfig& km_cfg) {
  using clock = std::chrono::steady_clock;
  auto seconds = [](clock::duration d) { return std::chrono::duration<double>(d).count(); };
  ComparisonReport r;

  auto t0 = clock::now();
  const auto direct = kmeans(t, km_cfg);
  r.direct_runtime_s = seconds(clock::now() - t0);

  t0 = clock::now();
  const auto f = nmf(t, nmf_cfg);
  r.nmf_runtime_s = seconds(clock::now() - t0);

  t0 = clock::now();
  const auto meta = kmeans(f.H.transposed(), km_cfg);
  r.metagraph_kmeans_runtime_s = seconds(clock::now() - t0);

  r.speedup = r.direct_runtime_s / r.metagraph_kmeans_runtime_s;
  r.total_speedup = r.direct_runtime_s / (r.nmf_runtime_s + r.metagraph_kmeans_runtime_s);
  r.ari = adjusted_rand_index(direct.assignment, meta.assignment);
  r.direct_distortion = direct.distortion;
  r.metagraph_distortion = meta.distortion;
  r.direct_assignment = direct.assignment;
  r.metagraph_assignment = meta.assignment;
  return r;
}

void write_assignments_csv(const std::filesystem::path& path, std::span<const std::string> owners,
                           std::span<const int> groups) {
  if (owners.size() != groups.size()) throw InvariantError("assignment owner count mismatch");
  io::write_atomic(path, [&](std::ostream& out) {
    out << kAssignmentsCsvHeader << '\n';
    for (std::size_t i = 0; i < owners.size(); ++i) out << owners[i] << ',' << groups[i] << '\n';
  });
}

std::vector<int> read_assignments_csv(const std::filesystem::path& path, std::vector<std::string>& owners) {
  std::vector<int> groups;
  io::read_csv(path, kAssignmentsCsvHeader, [&](const std::vector<std::string_view>& f) {
    if (f.size() != 2) throw InputError(fmt::format("{}: expected 2 fields", path.string()));
    owners.emplace_back(f[0]);
    groups.push_back(static_cast<int>(io::parse_int(f[1])));
  });
  return groups;
}

void write_elbow_csv(const std::filesystem::path& path, std::span<const ElbowPoint> curve) {
  io::write_atomic(path, [&](std::ostream& out) {
    out << kElbowCsvHeader << '\n';
    for (const auto& p : curve) out << p.k << ',' << io::fmt_double(p.distortion) << '\n';
  });
}

void write_centroids_csv(const std::filesystem::path& path, const DenseMatrix& centroids) {
  io::write_atomic(path, [&](std::ostream& out) {
    out << "group";
    for (std::size_t c = 0; c < centroids.cols(); ++c) out << ",coord_" << c;
    out << '\n';
    for (std::size_t g = 0; g < centroids.rows(); ++g) {
      out << g;
      for (double v : centroids.row(g)) out << ',' << io::fmt_double(v);
      out << '\n';
    }
  });
}

DenseMatrix read_centroids_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError(fmt::format("missing artifact: {}", path.string()));
  std::string header;
  std::getline(in, header);
  const std::size_t d = io::split_csv_line(header).size() - 1;
  std::string expected = "group";
  for (std::size_t c = 0; c < d; ++c) expected += fmt::format(",coord_{}", c);
  std::vector<double> data;
  std::size_t rows = 0;
  io::read_csv(path, expected, [&](const std::vector<std::string_view>& f) {
    if (f.size() != d + 1 || static_cast<std::size_t>(io::parse_int(f[0])) != rows)
      throw InputError(fmt::format("{}: malformed row", path.string()));
    for (std::size_t c = 0; c < d; ++c) data.push_back(io::parse_double(f[c + 1]));
    ++rows;
  });
  DenseMatrix m(rows, d);
  std::copy(data.begin(), data.end(), m.data().begin());
  return m;
}

void write_comparison_json(const std::filesystem::path& path, const ComparisonReport& r) {
  nlohmann::ordered_json j;
  j["direct_runtime_s"] = r.direct_runtime_s;
  j["nmf_runtime_s"] = r.nmf_runtime_s;
  j["metagraph_kmeans_runtime_s"] = r.metagraph_kmeans_runtime_s;
  j["speedup"] = r.speedup;
  j["total_speedup"] = r.total_speedup;
  j["ari"] = r.ari;
  j["direct_distortion"] = r.direct_distortion;
  j["metagraph_distortion"] = r.metagraph_distortion;
  io::write_atomic(path, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

}  // namespace lifepattern
