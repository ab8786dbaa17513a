#include "lifepattern/places.hpp"

#include <algorithm>
#include <ostream>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "lifepattern/errors.hpp"
#include "lifepattern/io.hpp"

namespace lifepattern {

std::optional<ClockWindow> parse_clock_window(std::string_view text) {
  auto clock = [](std::string_view s) -> std::optional<Seconds> {
    if (s.size() != 5 || s[2] != ':') return std::nullopt;
    try {
      const auto h = io::parse_int(s.substr(0, 2));
      const auto m = io::parse_int(s.substr(3, 2));
      if (h < 0 || h > 24 || m < 0 || m > 59 || (h == 24 && m != 0)) return std::nullopt;
      return h * kSecondsPerHour + m * 60;
    } catch (const InputError&) {
      return std::nullopt;
    }
  };
  const auto dash = text.find('-');
  if (dash == std::string_view::npos) return std::nullopt;
  const auto a = clock(text.substr(0, dash));
  const auto b = clock(text.substr(dash + 1));
  if (!a || !b || *a == *b) return std::nullopt;
  return ClockWindow{*a, *b};
}

bool Calendar::is_workday(DayNumber d) const {
  if (!workdays[static_cast<std::size_t>(weekday_of(d))]) return false;
  return !std::binary_search(excluded_dates.begin(), excluded_dates.end(), d);
}

void PlaceParams::validate() const {
  if (min_candidate_duration_s <= 0)
    throw ConfigError("places.min_candidate_duration_s must be positive");
  if (min_candidate_days < 0) throw ConfigError("places.min_candidate_days must be >= 0");
  if (day_window.wraps()) throw ConfigError("places.day_window must not wrap midnight");
  if (!std::is_sorted(calendar.excluded_dates.begin(), calendar.excluded_dates.end()))
    throw ConfigError("places.excluded_dates must be sorted");
}

bool overlaps_window(Seconds arv, Seconds lev, const ClockWindow& w, const Calendar* workdays_only) {
  if (lev <= arv) return false;
  // A wrapping window anchored on date d runs into d + 1, so start one day early.
  const DayNumber first = day_of(arv) - (w.wraps() ? 1 : 0);
  const DayNumber last = day_of(lev - 1);
  for (DayNumber d = first; d <= last; ++d) {
    if (workdays_only && !workdays_only->is_workday(d)) continue;
    const Seconds a = day_start(d) + w.start_s;
    const Seconds b = day_start(d + (w.wraps() ? 1 : 0)) + w.end_s;
    if (arv < b && a < lev) return true;
  }
  return false;
}

CandidateStats candidate_stats(std::span<const StayPoint> stays, const PlaceParams& params) {
  CandidateStats out;
  std::set<DayNumber> night_dates, day_dates;
  for (const auto& s : stays) {
    if (s.duration() <= params.min_candidate_duration_s) continue;
    if (overlaps_window(s.arv_t, s.lev_t, params.night_window, nullptr)) {
      night_dates.insert(day_of(s.arv_t));
      out.night_duration_s += s.duration();
    }
    if (overlaps_window(s.arv_t, s.lev_t, params.day_window, &params.calendar)) {
      day_dates.insert(day_of(s.arv_t));
      out.day_duration_s += s.duration();
    }
  }
  out.night_days = static_cast<int>(night_dates.size());
  out.day_days = static_cast<int>(day_dates.size());
  return out;
}

std::vector<SignificantPlace> classify_places(std::span<const ClusterSummary> clusters,
                                              const PlaceParams& params) {
  std::vector<SignificantPlace> out;
  out.reserve(clusters.size());
  for (const auto& c : clusters) out.push_back({c.place_id, Category::O, c.centroid, c.n_stays, c.stats});
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.place_id < b.place_id; });

  auto night_ok = [&](const SignificantPlace& p) { return p.stats.night_days > params.min_candidate_days; };
  auto day_ok = [&](const SignificantPlace& p) { return p.stats.day_days > params.min_candidate_days; };

  // Higher key wins; place ids are negated so the lowest id wins ties.
  SignificantPlace* home = nullptr;
  for (auto& p : out) {
    if (!night_ok(p)) continue;
    auto key = [](const SignificantPlace& q) {
      return std::make_tuple(q.stats.night_days, q.stats.night_duration_s, -q.place_id);
    };
    if (!home || key(p) > key(*home)) home = &p;
  }
  if (home) home->category = Category::H;

  SignificantPlace* work = nullptr;
  for (auto& p : out) {
    if (&p == home || !day_ok(p)) continue;
    auto key = [](const SignificantPlace& q) {
      return std::make_tuple(q.stats.day_days, q.stats.day_duration_s, -q.place_id);
    };
    if (!work || key(p) > key(*work)) work = &p;
  }
  if (work) work->category = Category::W;

  for (auto& p : out) {
    if (&p == home || &p == work) continue;
    const bool n = night_ok(p), d = day_ok(p);
    if (n && d) {
      const auto night_key = std::make_tuple(p.stats.night_days, p.stats.night_duration_s);
      const auto day_key = std::make_tuple(p.stats.day_days, p.stats.day_duration_s);
      p.category = day_key > night_key ? Category::D : Category::N;
    } else if (n) {
      p.category = Category::N;
    } else if (d) {
      p.category = Category::D;
    } else {
      p.category = Category::O;
    }
  }
  return out;
}

const SignificantPlace* UserPlaces::home() const {
  for (const auto& p : places)
    if (p.category == Category::H) return &p;
  return nullptr;
}

const SignificantPlace* UserPlaces::work() const {
  for (const auto& p : places)
    if (p.category == Category::W) return &p;
  return nullptr;
}

std::vector<SignificantPlace> detect_places(std::span<const StayPoint> stays,
                                            const UserClusters& clusters, const PlaceParams& params) {
  const auto k = static_cast<std::size_t>(clusters.labeling.n_clusters);
  std::vector<std::vector<StayPoint>> members(k);
  for (std::size_t i = 0; i < stays.size(); ++i) {
    const int c = clusters.labeling.labels[i];
    if (c != kNoise) members[c].push_back(stays[i]);
  }
  std::vector<ClusterSummary> summaries;
  for (std::size_t c = 0; c < k; ++c)
    summaries.push_back({static_cast<int>(c), clusters.centroids[c], members[c].size(),
                         candidate_stats(members[c], params)});
  return classify_places(summaries, params);
}

void write_places_csv(std::ostream& out, std::span<const UserPlaces> users) {
  out << kPlacesCsvHeader << '\n';
  for (const auto& u : users)
    for (const auto& p : u.places)
      out << u.user_id << ',' << p.place_id << ',' << category_code(p.category) << ','
          << io::fmt_double(p.centroid.lat) << ',' << io::fmt_double(p.centroid.lon) << ','
          << p.stats.night_days << ',' << p.stats.day_days << '\n';
}

std::vector<UserPlaces> read_places_csv(const std::filesystem::path& path) {
  std::vector<UserPlaces> users;
  io::read_csv(path, kPlacesCsvHeader, [&](const std::vector<std::string_view>& f) {
    if (f.size() != 7) throw InputError(fmt::format("{}: expected 7 fields", path.string()));
    if (users.empty() || users.back().user_id != f[0]) users.push_back({std::string(f[0]), {}});
    SignificantPlace p;
    p.place_id = static_cast<int>(io::parse_int(f[1]));
    const auto cat = parse_category(f[2]);
    if (!cat || *cat == Category::U) throw InputError(fmt::format("{}: bad category", path.string()));
    p.category = *cat;
    p.centroid = {io::parse_double(f[3]), io::parse_double(f[4])};
    p.stats.night_days = static_cast<int>(io::parse_int(f[5]));
    p.stats.day_days = static_cast<int>(io::parse_int(f[6]));
    users.back().places.push_back(p);
  });
  return users;
}

}  // namespace lifepattern
