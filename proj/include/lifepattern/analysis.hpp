#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "lifepattern/geo.hpp"
#include "lifepattern/kmeans.hpp"
#include "lifepattern/lifegraph.hpp"

namespace lifepattern {

struct GroupProfile {
  int group = 0;
  std::size_t members = 0;
  std::vector<Label> labels;                // columns of occupancy, canonical order
  std::vector<std::vector<double>> occupancy;  // 24 x labels.size()
};

/// Hour-h occupancy of a label is the probability mass on edges leaving it at
/// h (h <= 22) or entering it at hour 23; groups average their members.
std::vector<GroupProfile> group_profiles(std::span<const int> groups, int k, const SparseMatrix& vectors,
                                         const SupportGraph& g);

struct GridCell {
  long row = 0;
  long col = 0;
  std::size_t total = 0;
  std::vector<double> shares;  // per group
  double stddev = 0.0;         // population standard deviation of shares
};

struct GridParams {
  double cell_size_m = 500.0;
  std::size_t min_cell_population = 5;
};

/// Homes binned into square cells of a local equirectangular grid anchored at
/// the southwest corner of the homes' bounding box; cells below the
/// population threshold are dropped.
std::vector<GridCell> regional_stats(std::span<const LatLon> homes, std::span<const int> groups, int k,
                                     const GridParams& params);

/// Cell index of a point in the grid anchored at the homes' southwest corner.
class GridFrame {
 public:
  GridFrame(std::span<const LatLon> homes, double cell_size_m);
  std::pair<long, long> cell(const LatLon& p) const;

 private:
  double lat0_ = 0.0;
  double lon0_ = 0.0;
  double lon_scale_ = 1.0;
  double cell_size_m_ = 500.0;
};

struct GridCount {
  long row = 0;
  long col = 0;
  std::size_t homes = 0;
  std::size_t workplaces = 0;
};

/// Home and workplace counts per cell, for comparison with external
/// population grids.
std::vector<GridCount> grid_counts(std::span<const LatLon> homes, std::span<const LatLon> workplaces,
                                   const GridParams& params);

struct Correlation {
  int group_a = 0;
  int group_b = 0;
  std::optional<double> r;
  std::optional<double> p;  // two-tailed, Student t with m - 2 degrees of freedom
};

/// All k x k pairs in row-major order. Needs at least 3 cells; otherwise
/// every entry is missing.
std::vector<Correlation> group_share_correlations(std::span<const GridCell> cells, int k);

struct TransitionMatrix {
  std::vector<std::vector<std::size_t>> counts;  // [weekday group][weekend group]
  std::vector<std::vector<double>> row_percent;
};

/// Coordinates are k_dim x u matrices with matching columns.
TransitionMatrix weekday_weekend_transitions(const DenseMatrix& weekday, const DenseMatrix& weekend,
                                             const DenseMatrix& centroids);

inline constexpr std::string_view kProfilesCsvHeader = "group,hour,label,probability,above_threshold";
inline constexpr std::string_view kCorrelationsCsvHeader = "group_a,group_b,r,p";
inline constexpr std::string_view kTransitionsCsvHeader = "from_group,to_group,count,row_percent";

void write_profiles_csv(const std::filesystem::path& path, std::span<const GroupProfile> profiles,
                        double display_threshold);
void write_grid_csv(const std::filesystem::path& path, std::span<const GridCell> cells, int k);
void write_grid_counts_csv(const std::filesystem::path& path, std::span<const GridCount> counts);
void write_correlations_csv(const std::filesystem::path& path, std::span<const Correlation> corr);
void write_transitions_csv(const std::filesystem::path& path, const TransitionMatrix& t);

}  // namespace lifepattern
