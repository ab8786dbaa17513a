#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lifepattern/category.hpp"
#include "lifepattern/dbscan.hpp"
#include "lifepattern/geo.hpp"
#include "lifepattern/staypoint.hpp"
#include "lifepattern/timeutil.hpp"

namespace lifepattern {

/// Local clock interval in seconds of day; wraps midnight when start > end.
struct ClockWindow {
  Seconds start_s = 0;
  Seconds end_s = 0;

  bool wraps() const { return start_s > end_s; }
};

std::optional<ClockWindow> parse_clock_window(std::string_view text);  // "20:00-06:00"

/// Calendar rules shared with the day-class split of the life graph.
struct Calendar {
  std::array<bool, 7> workdays{false, true, true, true, true, true, false};  // Sunday first
  std::vector<DayNumber> excluded_dates;  // holidays, sorted

  bool is_workday(DayNumber d) const;
  /// Weekend day class: not a workday (so holidays count as weekend).
  bool is_weekend_class(DayNumber d) const { return !is_workday(d); }
};

struct PlaceParams {
  ClockWindow night_window{20 * kSecondsPerHour, 6 * kSecondsPerHour};
  ClockWindow day_window{9 * kSecondsPerHour, 19 * kSecondsPerHour};
  Seconds min_candidate_duration_s = 5400;
  int min_candidate_days = 10;  // qualification needs strictly more days
  Calendar calendar;

  void validate() const;
};

struct CandidateStats {
  int night_days = 0;
  Seconds night_duration_s = 0;
  int day_days = 0;
  Seconds day_duration_s = 0;

  friend bool operator==(const CandidateStats&, const CandidateStats&) = default;
};

/// Whether [arv, lev) intersects the window on some calendar date; for
/// `workdays_only` the date must be a workday.
bool overlaps_window(Seconds arv, Seconds lev, const ClockWindow& w, const Calendar* workdays_only);

/// Candidate statistics of one cluster's stays. A candidate overlaps the
/// window and lasts strictly longer than min_candidate_duration_s; days are
/// distinct arrival dates and durations are full stay durations.
CandidateStats candidate_stats(std::span<const StayPoint> stays, const PlaceParams& params);

struct ClusterSummary {
  int place_id = 0;
  LatLon centroid;
  std::size_t n_stays = 0;
  CandidateStats stats;
};

struct SignificantPlace {
  int place_id = 0;
  Category category = Category::O;
  LatLon centroid;
  std::size_t n_stays = 0;
  CandidateStats stats;
};

/// Home is the night-qualified cluster with the most (night days, night
/// duration), lowest place id on ties; work is chosen the same way among the
/// remaining day-qualified clusters. Other qualified clusters become N or D
/// (both-qualified goes by more days, then duration, then N); the rest are O.
std::vector<SignificantPlace> classify_places(std::span<const ClusterSummary> clusters,
                                              const PlaceParams& params);

struct UserPlaces {
  std::string user_id;
  std::vector<SignificantPlace> places;  // indexed by place_id == DBSCAN cluster id

  const SignificantPlace* home() const;
  const SignificantPlace* work() const;
};

/// Summaries of every DBSCAN cluster, then classification.
std::vector<SignificantPlace> detect_places(std::span<const StayPoint> stays,
                                            const UserClusters& clusters, const PlaceParams& params);

inline constexpr std::string_view kPlacesCsvHeader =
    "user_id,place_id,category,lat,lon,night_days,day_days";
void write_places_csv(std::ostream& out, std::span<const UserPlaces> users);
std::vector<UserPlaces> read_places_csv(const std::filesystem::path& path);

}  // namespace lifepattern
