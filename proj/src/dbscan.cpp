#include "lifepattern/dbscan.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <unordered_map>

#include <fmt/format.h>

#include "lifepattern/errors.hpp"
#include "lifepattern/io.hpp"

namespace lifepattern {

void DbscanParams::validate() const {
  if (!(eps_m > 0.0)) throw ConfigError("dbscan.eps_m must be positive");
  if (min_pts < 1) throw ConfigError("dbscan.min_pts must be >= 1");
}

namespace {

constexpr int kUnvisited = -2;

class QuadraticNeighbors {
 public:
  QuadraticNeighbors(std::span<const LatLon> points, double eps) : points_(points), eps_(eps) {}

  void query(std::size_t p, std::vector<std::size_t>& out) const {
    out.clear();
    for (std::size_t j = 0; j < points_.size(); ++j)
      if (haversine_m(points_[p], points_[j]) <= eps_) out.push_back(j);
  }

 private:
  std::span<const LatLon> points_;
  double eps_;
};

// Uniform lat/lon grid whose cells are at least eps wide in both directions
// everywhere in the data, so the 3x3 block around a point covers its
// eps-ball. Candidates are filtered by exact distance and returned sorted.
class GridNeighbors {
 public:
  GridNeighbors(std::span<const LatLon> points, double eps) : points_(points), eps_(eps) {
    constexpr double kDeg = std::numbers::pi / 180.0;
    double max_abs_lat = 0.0;
    for (const auto& p : points) max_abs_lat = std::max(max_abs_lat, std::abs(p.lat));
    max_abs_lat = std::min(max_abs_lat, 89.9);
    constexpr double kPad = 1.001;
    cell_lat_ = kPad * eps / (kEarthRadiusM * kDeg);
    cell_lon_ = kPad * eps / (kEarthRadiusM * std::cos(max_abs_lat * kDeg) * kDeg);
    for (std::size_t i = 0; i < points.size(); ++i) cells_[key(cell_of(points[i]))].push_back(i);
  }

  void query(std::size_t p, std::vector<std::size_t>& out) const {
    out.clear();
    const auto [r, c] = cell_of(points_[p]);
    for (std::int64_t dr = -1; dr <= 1; ++dr)
      for (std::int64_t dc = -1; dc <= 1; ++dc) {
        const auto it = cells_.find(key({r + dr, c + dc}));
        if (it == cells_.end()) continue;
        for (std::size_t j : it->second)
          if (haversine_m(points_[p], points_[j]) <= eps_) out.push_back(j);
      }
    std::sort(out.begin(), out.end());
  }

 private:
  using Cell = std::pair<std::int64_t, std::int64_t>;

  Cell cell_of(LatLon p) const {
    return {static_cast<std::int64_t>(std::floor(p.lat / cell_lat_)),
            static_cast<std::int64_t>(std::floor(p.lon / cell_lon_))};
  }
  static std::uint64_t key(Cell c) {
    return (static_cast<std::uint64_t>(c.first) << 32) ^ static_cast<std::uint32_t>(c.second);
  }

  std::span<const LatLon> points_;
  double eps_;
  double cell_lat_ = 1.0;
  double cell_lon_ = 1.0;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

template <class Index>
ClusterLabeling run_dbscan(std::size_t n, const Index& index, std::size_t min_pts) {
  ClusterLabeling out;
  out.labels.assign(n, kUnvisited);
  std::vector<std::size_t> neighbors;
  std::vector<std::size_t> queue;
  for (std::size_t p = 0; p < n; ++p) {
    if (out.labels[p] != kUnvisited) continue;
    index.query(p, neighbors);
    if (neighbors.size() < min_pts) {
      out.labels[p] = kNoise;
      continue;
    }
    const int cluster = out.n_clusters++;
    out.labels[p] = cluster;
    queue.assign(neighbors.begin(), neighbors.end());
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const std::size_t q = queue[head];
      if (out.labels[q] == kNoise) out.labels[q] = cluster;  // border point
      if (out.labels[q] != kUnvisited) continue;
      out.labels[q] = cluster;
      index.query(q, neighbors);
      if (neighbors.size() >= min_pts) queue.insert(queue.end(), neighbors.begin(), neighbors.end());
    }
  }
  return out;
}

}  // namespace

ClusterLabeling dbscan(std::span<const LatLon> points, const DbscanParams& params,
                       NeighborSearch search) {
  params.validate();
  if (search == NeighborSearch::kAuto)
    search = points.size() <= kQuadraticLimit ? NeighborSearch::kQuadratic : NeighborSearch::kGrid;
  if (search == NeighborSearch::kQuadratic)
    return run_dbscan(points.size(), QuadraticNeighbors(points, params.eps_m), params.min_pts);
  return run_dbscan(points.size(), GridNeighbors(points, params.eps_m), params.min_pts);
}

UserClusters cluster_user_stays(std::span<const StayPoint> stays, const DbscanParams& params) {
  std::vector<LatLon> points;
  points.reserve(stays.size());
  for (const auto& s : stays) points.push_back(s.centroid);

  UserClusters out;
  out.labeling = dbscan(points, params);
  const auto k = static_cast<std::size_t>(out.labeling.n_clusters);
  std::vector<double> lat(k, 0.0), lon(k, 0.0);
  out.sizes.assign(k, 0);
  for (std::size_t i = 0; i < stays.size(); ++i) {
    const int c = out.labeling.labels[i];
    if (c == kNoise) continue;
    lat[c] += points[i].lat;
    lon[c] += points[i].lon;
    ++out.sizes[c];
  }
  for (std::size_t c = 0; c < k; ++c) {
    const auto m = static_cast<double>(out.sizes[c]);
    out.centroids.push_back({lat[c] / m, lon[c] / m});
  }
  return out;
}

void write_clusters_csv(std::ostream& out, std::span<const UserLabels> users) {
  out << kClustersCsvHeader << '\n';
  for (const auto& u : users)
    for (std::size_t i = 0; i < u.labels.size(); ++i)
      out << u.user_id << ',' << i << ',' << u.labels[i] << '\n';
}

std::vector<UserLabels> read_clusters_csv(const std::filesystem::path& path) {
  std::vector<UserLabels> users;
  io::read_csv(path, kClustersCsvHeader, [&](const std::vector<std::string_view>& f) {
    if (f.size() != 3) throw InputError(fmt::format("{}: expected 3 fields", path.string()));
    if (users.empty() || users.back().user_id != f[0]) users.push_back({std::string(f[0]), {}});
    users.back().labels.push_back(static_cast<int>(io::parse_int(f[2])));
  });
  return users;
}

}  // namespace lifepattern
