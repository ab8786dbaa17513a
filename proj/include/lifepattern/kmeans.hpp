#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lifepattern/nmf.hpp"
#include "lifepattern/sparse.hpp"

namespace lifepattern {

struct KmeansConfig {
  int k = 7;
  int n_restarts = 10;
  int max_iters = 300;
  std::uint64_t seed = 1;

  void validate() const;
};

struct ClusterResult {
  std::vector<int> assignment;
  DenseMatrix centroids;  // k x d
  double distortion = 0.0;  // mean squared distance to the assigned centroid
  int iterations_run = 0;
  std::vector<double> distortion_trace;  // per Lloyd iteration of the winning restart
  int restart = 0;
};

/// Points are the rows of a dense matrix.
ClusterResult kmeans(const DenseMatrix& points, const KmeansConfig& cfg);
/// Points are the columns of a sparse matrix; centroids stay dense.
ClusterResult kmeans(const SparseMatrix& points, const KmeansConfig& cfg);

/// Nearest centroid, ties to the lowest group id.
int nearest_centroid(std::span<const double> point, const DenseMatrix& centroids);

struct ElbowPoint {
  int k = 0;
  double distortion = 0.0;
};

std::vector<ElbowPoint> elbow_curve(const DenseMatrix& points, int k_max, const KmeansConfig& cfg);

/// Interior k maximizing d(k-1) - 2 d(k) + d(k+1); ties to the lowest k.
std::optional<int> suggest_k(std::span<const ElbowPoint> curve);

double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

/// Fraction of points whose cluster maps to their class under the best
/// one-to-one matching of clusters to classes.
double matched_purity(std::span<const int> clusters, std::span<const int> classes);

struct ComparisonReport {
  double direct_runtime_s = 0.0;
  double nmf_runtime_s = 0.0;
  double metagraph_kmeans_runtime_s = 0.0;
  double speedup = 0.0;        // direct / metagraph k-means
  double total_speedup = 0.0;  // direct / (nmf + metagraph k-means)
  double ari = 0.0;
  double direct_distortion = 0.0;
  double metagraph_distortion = 0.0;
  std::vector<int> direct_assignment;
  std::vector<int> metagraph_assignment;
};

ComparisonReport compare_direct_vs_metagraph(const SparseMatrix& t, const NmfConfig& nmf_cfg,
                                             const KmeansConfig& km_cfg);

inline constexpr std::string_view kAssignmentsCsvHeader = "owner,group";
inline constexpr std::string_view kElbowCsvHeader = "k,distortion";

void write_assignments_csv(const std::filesystem::path& path, std::span<const std::string> owners,
                           std::span<const int> groups);
std::vector<int> read_assignments_csv(const std::filesystem::path& path, std::vector<std::string>& owners);
void write_elbow_csv(const std::filesystem::path& path, std::span<const ElbowPoint> curve);
void write_centroids_csv(const std::filesystem::path& path, const DenseMatrix& centroids);
DenseMatrix read_centroids_csv(const std::filesystem::path& path);
void write_comparison_json(const std::filesystem::path& path, const ComparisonReport& r);

}  // namespace lifepattern
