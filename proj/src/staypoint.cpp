#include "lifepattern/staypoint.hpp"

#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "lifepattern/errors.hpp"
#include "lifepattern/io.hpp"

namespace lifepattern {

void StayParams::validate() const {
  if (!(max_radius_m > 0.0)) throw ConfigError("staypoint.max_radius_m must be positive");
  if (min_duration_s <= 0) throw ConfigError("staypoint.min_duration_s must be positive");
  if (!(speed_sigma_mult > 0.0)) throw ConfigError("staypoint.speed_sigma_mult must be positive");
}

namespace {

double segment_speed(const GpsFix& a, const GpsFix& b) {
  const double d = haversine_m({a.lat, a.lon}, {b.lat, b.lon});
  const auto dt = b.t - a.t;
  if (dt <= 0) return d > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return d / static_cast<double>(dt);
}

}  // namespace

std::vector<GpsFix> filter_noise(std::span<const GpsFix> fixes, double speed_sigma_mult) {
  if (fixes.size() <= 2) return {fixes.begin(), fixes.end()};

  std::vector<double> seg(fixes.size() - 1);
  for (std::size_t i = 1; i < fixes.size(); ++i) seg[i - 1] = segment_speed(fixes[i - 1], fixes[i]);

  double sum = 0.0, sumsq = 0.0;
  std::size_t count = 0;
  for (double s : seg) {
    if (!(s > 0.0) || !std::isfinite(s)) continue;
    sum += s;
    sumsq += s * s;
    ++count;
  }
  if (count == 0) return {fixes.begin(), fixes.end()};
  const double mean = sum / static_cast<double>(count);
  const double var = std::max(0.0, sumsq / static_cast<double>(count) - mean * mean);
  const double sd = std::sqrt(var);
  if (sd == 0.0) return {fixes.begin(), fixes.end()};
  const double limit = mean + speed_sigma_mult * sd;

  std::vector<GpsFix> kept;
  kept.reserve(fixes.size());
  for (std::size_t i = 0; i < fixes.size(); ++i) {
    const double in = i > 0 ? seg[i - 1] : std::numeric_limits<double>::infinity();
    const double out = i + 1 < fixes.size() ? seg[i] : std::numeric_limits<double>::infinity();
    if (std::min(in, out) <= limit) kept.push_back(fixes[i]);
  }
  return kept;
}

std::vector<StayPoint> extract_stay_points(std::span<const GpsFix> fixes, const StayParams& params) {
  std::vector<StayPoint> stays;
  std::size_t i = 0;
  while (i < fixes.size()) {
    const LatLon anchor{fixes[i].lat, fixes[i].lon};
    std::size_t m = i;
    while (m + 1 < fixes.size() &&
           haversine_m(anchor, {fixes[m + 1].lat, fixes[m + 1].lon}) <= params.max_radius_m)
      ++m;
    if (fixes[m].t - fixes[i].t >= params.min_duration_s) {
      StayPoint s;
      double lat = 0.0, lon = 0.0;
      for (std::size_t j = i; j <= m; ++j) {
        lat += fixes[j].lat;
        lon += fixes[j].lon;
      }
      s.n_fixes = m - i + 1;
      s.centroid = {lat / static_cast<double>(s.n_fixes), lon / static_cast<double>(s.n_fixes)};
      s.arv_t = fixes[i].t;
      s.lev_t = fixes[m].t;
      s.first_fix = i;
      stays.push_back(s);
      i = m + 1;
    } else {
      ++i;
    }
  }
  return stays;
}

std::vector<CoverageDay> coverage_days(std::span<const GpsFix> fixes) {
  std::vector<CoverageDay> out;
  for (const auto& f : fixes) {
    const DayNumber d = day_of(f.t);
    if (out.empty() || out.back().date != d)
      out.push_back({d, 1});
    else
      ++out.back().n_fixes;
  }
  return out;
}

void write_stays_csv(std::ostream& out, std::span<const UserStays> users) {
  out << kStaysCsvHeader << '\n';
  for (const auto& u : users)
    for (std::size_t k = 0; k < u.stays.size(); ++k) {
      const auto& s = u.stays[k];
      out << u.user_id << ',' << k << ',' << io::fmt_double(s.centroid.lat) << ','
          << io::fmt_double(s.centroid.lon) << ',' << s.arv_t << ',' << s.lev_t << ','
          << s.n_fixes << '\n';
    }
}

std::vector<UserStays> read_stays_csv(const std::filesystem::path& path) {
  std::vector<UserStays> users;
  io::read_csv(path, kStaysCsvHeader, [&](const std::vector<std::string_view>& f) {
    if (f.size() != 7) throw InputError(fmt::format("{}: expected 7 fields", path.string()));
    if (users.empty() || users.back().user_id != f[0]) users.push_back({std::string(f[0]), {}});
    auto& stays = users.back().stays;
    if (static_cast<std::size_t>(io::parse_int(f[1])) != stays.size())
      throw InputError(fmt::format("{}: stay_idx out of sequence for {}", path.string(), f[0]));
    StayPoint s;
    s.centroid = {io::parse_double(f[2]), io::parse_double(f[3])};
    s.arv_t = io::parse_int(f[4]);
    s.lev_t = io::parse_int(f[5]);
    s.n_fixes = static_cast<std::size_t>(io::parse_int(f[6]));
    stays.push_back(s);
  });
  return users;
}

}  // namespace lifepattern
