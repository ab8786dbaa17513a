#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lifepattern/lifegraph.hpp"
#include "lifepattern/sparse.hpp"

namespace lifepattern {

struct NmfConfig {
  int rank = 3;
  int max_iters = 500;
  double rel_tol = 1e-5;
  double epsilon = 1e-12;
  std::uint64_t seed = 1;
  int inner_iters = 5;  // repeats of each update against the cached products

  /// Throws ConfigError. Pass the matrix shape to also check rank <= min(n, u).
  void validate() const;
  void validate(std::size_t n, std::size_t u) const;
};

struct Factorization {
  DenseMatrix W;  // n x k, columns are metagraphs
  DenseMatrix H;  // k x u, columns are coordinates
  std::vector<double> objective_trace;  // trace[0] is the initial objective

  int rank() const { return static_cast<int>(W.cols()); }
  int iterations() const { return static_cast<int>(objective_trace.size()) - 1; }
  std::vector<double> coordinate(std::size_t j) const;
};

/// Lee-Seung multiplicative updates on ||T - WH||_F^2.
Factorization nmf(const SparseMatrix& t, const NmfConfig& cfg);

/// ||T - WH||_F / ||T||_F, or 0 for an all-zero T.
double relative_error(const SparseMatrix& t, const Factorization& f);

/// Nonnegative least-squares coordinate of one column against a frozen basis.
std::vector<double> embed(const SparseVector& column, const DenseMatrix& w, const NmfConfig& cfg);
/// embed() applied to every column; result is k x u.
DenseMatrix embed_columns(const SparseMatrix& t, const DenseMatrix& w, const NmfConfig& cfg);

struct RankScanEntry {
  int rank = 0;
  double relative_error = 0.0;
  int iterations = 0;
};

std::vector<RankScanEntry> rank_scan(const SparseMatrix& t, const NmfConfig& cfg, int max_rank = 8);

struct StrongEdge {
  std::uint32_t edge_index = 0;
  double weight = 0.0;
};

/// Edges whose basis weight exceeds the threshold, by layer then weight
/// descending.
std::vector<StrongEdge> strong_pattern(std::span<const double> basis_column, const SupportGraph& g,
                                       double threshold = 1.0);

std::vector<double> basis_column(const DenseMatrix& w, std::size_t c);
double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct BasisMatch {
  std::vector<int> mapping;        // column of `a` -> column of `b`
  std::vector<double> cosine;      // per column of `a`
};

/// Permutation of columns maximizing the summed cosine similarity.
BasisMatch match_bases(const DenseMatrix& a, const DenseMatrix& b);

inline constexpr std::string_view kStrongPatternCsvHeader = "basis,hour,src_label,dst_label,weight";
inline constexpr std::string_view kRankScanCsvHeader = "rank,relative_error,iterations";

void write_w_csv(const std::filesystem::path& path, const DenseMatrix& w);
void write_h_csv(const std::filesystem::path& path, const DenseMatrix& h,
                 std::span<const std::string> owners);
DenseMatrix read_w_csv(const std::filesystem::path& path);
/// Returns H as k x u; owners are appended to `owners`.
DenseMatrix read_h_csv(const std::filesystem::path& path, std::vector<std::string>& owners);
void write_strong_patterns_csv(const std::filesystem::path& path, const DenseMatrix& w,
                               const SupportGraph& g, double threshold);
void write_rank_scan_csv(const std::filesystem::path& path, std::span<const RankScanEntry> scan);

}  // namespace lifepattern
