#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lifepattern/config.hpp"

namespace lifepattern {

inline constexpr std::string_view kToolVersion = "1.0.0";

enum class Stage {
  kSynth,
  kExtractStays,
  kDetectPlaces,
  kBuildGraph,
  kFactorize,
  kCluster,
  kAnalyze,
  kCompareBaseline,
  kPipeline,
};

std::optional<Stage> parse_stage(std::string_view name);
std::string_view stage_name(Stage s);

/// Per-user steps shared by the stage runners and in-process drivers.
struct TrackStays {
  std::vector<StayPoint> stays;
  std::vector<CoverageDay> coverage;
};
TrackStays extract_track_stays(const UserTrack& track, const StayParams& params);

struct TrackPlaces {
  UserClusters clusters;
  std::vector<SignificantPlace> places;
};
TrackPlaces detect_track_places(std::span<const StayPoint> stays, const DbscanParams& dbscan,
                                const PlaceParams& places);

UserDays track_days(const std::string& user_id, std::span<const StayPoint> stays,
                    std::span<const int> cluster_labels, std::span<const SignificantPlace> places,
                    std::span<const CoverageDay> coverage, const LifegraphParams& params);

/// Runs one stage, or every stage in order for kPipeline, writing artifacts
/// under cfg.output_dir and updating manifest.json there. Throws the error
/// types of errors.hpp.
void run_stage(Stage stage, const RunConfig& cfg);

inline constexpr std::string_view kCoverageCsvHeader = "user_id,date,n_fixes";

}  // namespace lifepattern
