#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lifepattern/geo.hpp"
#include "lifepattern/staypoint.hpp"

namespace lifepattern {

struct DbscanParams {
  double eps_m = 30.0;
  std::size_t min_pts = 10;

  void validate() const;
};

inline constexpr int kNoise = -1;

/// Per-point cluster id (consecutive from 0 in discovery order) or kNoise.
struct ClusterLabeling {
  std::vector<int> labels;
  int n_clusters = 0;
};

enum class NeighborSearch {
  kAuto,       // quadratic up to kQuadraticLimit points, grid above
  kQuadratic,
  kGrid,
};

inline constexpr std::size_t kQuadraticLimit = 2000;

/// Classic DBSCAN over haversine distance. The eps-neighborhood includes the
/// point itself. Points are visited in input order and a border point joins
/// the first cluster that reaches it.
ClusterLabeling dbscan(std::span<const LatLon> points, const DbscanParams& params,
                       NeighborSearch search = NeighborSearch::kAuto);

struct UserClusters {
  ClusterLabeling labeling;          // one label per stay
  std::vector<LatLon> centroids;     // mean of member stay centroids
  std::vector<std::size_t> sizes;
};

UserClusters cluster_user_stays(std::span<const StayPoint> stays, const DbscanParams& params);

inline constexpr std::string_view kClustersCsvHeader = "user_id,stay_idx,cluster_id";

struct UserLabels {
  std::string user_id;
  std::vector<int> labels;
};
void write_clusters_csv(std::ostream& out, std::span<const UserLabels> users);
std::vector<UserLabels> read_clusters_csv(const std::filesystem::path& path);

}  // namespace lifepattern
