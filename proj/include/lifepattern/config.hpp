#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include <json.hpp>

#include "lifepattern/analysis.hpp"
#include "lifepattern/corpus.hpp"
#include "lifepattern/dbscan.hpp"
#include "lifepattern/kmeans.hpp"
#include "lifepattern/lifegraph.hpp"
#include "lifepattern/nmf.hpp"
#include "lifepattern/places.hpp"
#include "lifepattern/staypoint.hpp"

namespace lifepattern {

struct LifegraphParams {
  EmptyDayPolicy empty_day_policy = EmptyDayPolicy::kSkip;
  int distinct_others = 0;
};

struct AnalysisParams {
  double display_threshold = 0.01;
  GridParams grid;
  int elbow_k_max = 10;
  double strong_pattern_threshold = 1.0;
  int rank_scan_max = 8;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::filesystem::path input_path;  // empty: the synth stage's gps.csv
  std::filesystem::path output_dir = "lifegraph_out";
  MatrixMode mode = MatrixMode::kAllDays;

  SyntheticSpec corpus;  // tz_offset_s here also applies to ingestion
  StayParams staypoint;
  DbscanParams dbscan;
  PlaceParams places;
  LifegraphParams lifegraph;
  NmfConfig nmf;
  KmeansConfig kmeans;
  AnalysisParams analysis;

  std::filesystem::path gps_path() const { return input_path.empty() ? output_dir / "gps.csv" : input_path; }
  /// Throws ConfigError.
  void validate() const;
};

/// Sectioned key = value text. Relative paths resolve against `base_dir`.
/// Module seeds left unset are derived from the global seed.
RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

nlohmann::ordered_json config_snapshot(const RunConfig& cfg);

}  // namespace lifepattern
