#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lifepattern/corpus.hpp"
#include "lifepattern/geo.hpp"
#include "lifepattern/timeutil.hpp"

namespace lifepattern {

struct StayParams {
  double max_radius_m = 200.0;
  Seconds min_duration_s = 1800;
  double speed_sigma_mult = 3.0;

  void validate() const;
};

/// A contiguous dwell. Constituent fixes are [first_fix, first_fix + n_fixes)
/// of the cleaned fix list it was extracted from.
struct StayPoint {
  LatLon centroid;
  Seconds arv_t = 0;
  Seconds lev_t = 0;
  std::size_t n_fixes = 0;
  std::size_t first_fix = 0;

  Seconds duration() const { return lev_t - arv_t; }
};

struct UserStays {
  std::string user_id;
  std::vector<StayPoint> stays;
};

/// Removes isolated speed spikes. A fix's implied speed is the smaller of the
/// speeds of its two adjacent segments (one at the ends); it is removed when
/// that exceeds mean + mult * stddev of the user's positive segment speeds.
/// Zero variance keeps everything; at most two fixes are returned unchanged.
std::vector<GpsFix> filter_noise(std::span<const GpsFix> fixes, double speed_sigma_mult);

/// Anchor scan: from anchor i, extend m while every fix j in (i, m] lies within
/// max_radius_m of fix i; emit a stay if t_m - t_i >= min_duration_s and jump
/// to m + 1, otherwise advance the anchor by one.
std::vector<StayPoint> extract_stay_points(std::span<const GpsFix> fixes, const StayParams& params);

/// Dates (local) on which the track has at least one fix, ascending, with counts.
struct CoverageDay {
  DayNumber date = 0;
  std::size_t n_fixes = 0;
};
std::vector<CoverageDay> coverage_days(std::span<const GpsFix> fixes);

inline constexpr std::string_view kStaysCsvHeader = "user_id,stay_idx,lat,lon,arv_t,lev_t,n_fixes";
void write_stays_csv(std::ostream& out, std::span<const UserStays> users);
std::vector<UserStays> read_stays_csv(const std::filesystem::path& path);

}  // namespace lifepattern
