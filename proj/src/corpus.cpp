#include "lifepattern/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>

#include <fmt/format.h>

#include "lifepattern/errors.hpp"
#include "lifepattern/io.hpp"
#include "lifepattern/parallel.hpp"
#include "lifepattern/seed.hpp"

namespace lifepattern {

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

namespace {

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::optional<Seconds> parse_timestamp(std::string_view field, Seconds tz_offset_s) {
  if (all_digits(field)) {
    try {
      return static_cast<Seconds>(io::parse_int(field)) + tz_offset_s;
    } catch (const InputError&) {
      return std::nullopt;
    }
  }
  const auto parsed = parse_iso8601(field);
  if (!parsed) return std::nullopt;
  return parsed->has_zone ? parsed->seconds + tz_offset_s : parsed->seconds;
}

}  // namespace

Corpus parse_gps_csv(std::istream& in, Seconds tz_offset_s) {
  Corpus corpus;
  std::string line;
  if (!std::getline(in, line)) return corpus;
  if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kGpsCsvHeader)
    throw InputError(fmt::format("GPS CSV header must be '{}', got '{}'", kGpsCsvHeader, line));

  std::map<std::string, std::vector<GpsFix>, std::less<>> grouped;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++corpus.report.rows;
    const auto fields = io::split_csv_line(line);
    if (fields.size() != 4 || fields[0].empty()) {
      ++corpus.report.malformed;
      continue;
    }
    const auto local = parse_timestamp(fields[1], tz_offset_s);
    double lat = 0.0, lon = 0.0;
    try {
      lat = io::parse_double(fields[2]);
      lon = io::parse_double(fields[3]);
    } catch (const InputError&) {
      ++corpus.report.malformed;
      continue;
    }
    if (!local || *local - tz_offset_s <= 0) {
      ++corpus.report.malformed;
      continue;
    }
    if (!valid_coordinate(lat, lon)) {
      ++corpus.report.out_of_range;
      continue;
    }
    auto it = grouped.find(fields[0]);
    if (it == grouped.end()) it = grouped.emplace(std::string(fields[0]), std::vector<GpsFix>{}).first;
    it->second.push_back({*local, lat, lon});
  }

  corpus.users.reserve(grouped.size());
  for (auto& [id, fixes] : grouped) {
    std::stable_sort(fixes.begin(), fixes.end(),
                     [](const GpsFix& a, const GpsFix& b) { return a.t < b.t; });
    corpus.users.push_back({id, std::move(fixes)});
  }
  return corpus;
}

Corpus parse_gps_csv(const std::filesystem::path& path, Seconds tz_offset_s) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError(fmt::format("missing input: {}", path.string()));
  return parse_gps_csv(in, tz_offset_s);
}

void write_gps_rows(std::ostream& out, const UserTrack& user, Seconds tz_offset_s) {
  for (const auto& f : user.fixes)
    out << user.user_id << ',' << (f.t - tz_offset_s) << ',' << io::fmt_double(f.lat) << ','
        << io::fmt_double(f.lon) << '\n';
}

void write_gps_csv(std::ostream& out, std::span<const UserTrack> users, Seconds tz_offset_s) {
  out << kGpsCsvHeader << '\n';
  for (const auto& user : users) write_gps_rows(out, user, tz_offset_s);
}

// ---------------------------------------------------------------------------
// Archetypes
// ---------------------------------------------------------------------------

namespace {

constexpr std::array<std::string_view, 7> kArchetypeNames{
    "home-stayer", "telework", "home-other", "traveler",
    "balanced",    "regular-office", "long-hours-office"};

// Single errands last 40-80 min and hop visits 50-85 min, so no errand ever
// exceeds the 90-minute candidate threshold and "other" places stay O.
std::vector<ArchetypeTemplate> make_templates() {
  const Outing errand{Category::O, 0.85, 13.0, 3.0, 1.0, 1.0 / 3.0};
  const Outing late_errand{Category::O, 0.3, 17.0, 0.5, 1.0, 1.0 / 3.0};
  const std::vector<Outing> homebound{errand, late_errand};

  std::vector<ArchetypeTemplate> t(7);
  t[0] = {Archetype::HomeStayer, 2, false, homebound, homebound};
  t[1] = {Archetype::Telework, 1, true,
          {{Category::W, 0.4, 9.0, 0.5, 9.0, 0.5}, {Category::O, 0.5, 14.0, 2.0, 1.0, 1.0 / 3.0}},
          homebound};
  t[2] = {Archetype::HomeOther, 3, false,
          {{Category::O, 1.0, 10.5, 0.5, 7.0, 0.5, true}},
          {{Category::O, 1.0, 10.5, 0.5, 7.0, 0.5, true}}};
  t[3] = {Archetype::Traveler, 5, false,
          {{Category::O, 1.0, 8.0, 0.5, 12.5, 0.5, true}},
          {{Category::O, 1.0, 8.0, 0.5, 12.5, 0.5, true}}};
  t[4] = {Archetype::Balanced, 3, true,
          {{Category::W, 0.75, 9.5, 0.5, 4.0, 0.5}, {Category::O, 1.0, 15.5, 0.5, 4.0, 0.5, true}},
          {{Category::O, 1.0, 11.0, 1.0, 6.0, 0.5, true}}};
  t[5] = {Archetype::RegularOffice, 1, true,
          {{Category::W, 0.95, 9.0, 1.0 / 3.0, 9.0, 1.0 / 3.0},
           {Category::O, 0.2, 19.25, 0.25, 1.0, 0.25}},
          homebound};
  t[6] = {Archetype::LongHoursOffice, 1, true,
          {{Category::W, 0.95, 8.0, 1.0 / 3.0, 13.5, 1.0 / 3.0}},
          {{Category::O, 0.9, 13.0, 3.0, 1.0, 1.0 / 3.0}, {Category::O, 0.5, 17.0, 0.5, 1.0, 1.0 / 3.0}}};
  return t;
}

}  // namespace

std::string_view archetype_name(Archetype a) { return kArchetypeNames[static_cast<std::size_t>(a)]; }

std::optional<Archetype> parse_archetype(std::string_view name) {
  for (auto a : kAllArchetypes)
    if (archetype_name(a) == name) return a;
  return std::nullopt;
}

const ArchetypeTemplate& archetype_template(Archetype a) {
  static const std::vector<ArchetypeTemplate> templates = make_templates();
  return templates[static_cast<std::size_t>(a)];
}

// ---------------------------------------------------------------------------
// Synthetic generation
// ---------------------------------------------------------------------------

std::vector<std::pair<Archetype, double>> SyntheticSpec::effective_mix() const {
  if (!archetype_mix.empty()) return archetype_mix;
  std::vector<std::pair<Archetype, double>> mix;
  for (auto a : kAllArchetypes) mix.emplace_back(a, 1.0 / kAllArchetypes.size());
  return mix;
}

void SyntheticSpec::validate() const {
  if (n_days <= 0) throw ConfigError("corpus.n_days must be positive");
  if (sample_interval_s <= 0) throw ConfigError("corpus.sample_interval_s must be positive");
  if (!(gps_noise_sigma_m >= 0.0)) throw ConfigError("corpus.gps_noise_sigma_m must be >= 0");
  if (!(dropout_prob >= 0.0 && dropout_prob < 1.0))
    throw ConfigError("corpus.dropout_prob must be in [0,1)");
  if (!(region.min_lat < region.max_lat && region.min_lon < region.max_lon) ||
      !valid_coordinate(region.min_lat, region.min_lon) ||
      !valid_coordinate(region.max_lat, region.max_lon))
    throw ConfigError("corpus.bbox is not a valid lat/lon rectangle");
  double sum = 0.0;
  for (const auto& [a, f] : effective_mix()) {
    if (!(f >= 0.0)) throw ConfigError("corpus.archetype_mix fractions must be >= 0");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("corpus.archetype_mix fractions must sum to 1");
  if (day_start(start_day) - tz_offset_s <= 0)
    throw ConfigError("corpus.start_date must map to a positive UTC timestamp");
}

std::vector<std::size_t> apportion(std::span<const double> fractions, std::size_t total) {
  std::vector<std::size_t> counts(fractions.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    const double quota = fractions[i] * static_cast<double>(total);
    counts[i] = static_cast<std::size_t>(std::floor(quota));
    assigned += counts[i];
    remainders.emplace_back(quota - std::floor(quota), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < total && r < remainders.size(); ++r, ++assigned)
    ++counts[remainders[r].second];
  return counts;
}

std::vector<Archetype> assign_archetypes(const SyntheticSpec& spec) {
  const auto mix = spec.effective_mix();
  std::vector<double> fractions;
  for (const auto& m : mix) fractions.push_back(m.second);
  const auto counts = apportion(fractions, spec.n_users);
  std::vector<Archetype> out;
  out.reserve(spec.n_users);
  for (std::size_t i = 0; i < mix.size(); ++i) out.insert(out.end(), counts[i], mix[i].first);
  std::mt19937_64 rng(derive_seed(spec.seed, "corpus.assign"));
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

std::string synthetic_user_id(std::size_t index) { return fmt::format("u{:06d}", index); }

namespace {

constexpr double kTravelSpeedMps = 30000.0 / 3600.0;
constexpr double kMinSeparationM = 500.0;
constexpr Seconds kMinHomeGap = 30 * 60;

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

bool inside(const BoundingBox& b, LatLon p) {
  return p.lat >= b.min_lat && p.lat <= b.max_lat && p.lon >= b.min_lon && p.lon <= b.max_lon;
}

std::vector<TruePlace> place_user(const SyntheticSpec& spec, const ArchetypeTemplate& tmpl,
                                  std::mt19937_64& rng) {
  const auto& box = spec.region;
  std::vector<TruePlace> places;
  auto far_enough = [&](LatLon p) {
    return std::all_of(places.begin(), places.end(), [&](const TruePlace& q) {
      return haversine_m(p, q.centroid) >= kMinSeparationM;
    });
  };
  auto add = [&](Category cat, double min_m, double max_m) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
      LatLon p;
      if (places.empty() || attempt >= 500) {
        p = {uniform(rng, box.min_lat, box.max_lat), uniform(rng, box.min_lon, box.max_lon)};
      } else {
        const double bearing = uniform(rng, 0.0, 2.0 * std::numbers::pi);
        const double dist = uniform(rng, min_m, max_m);
        p = offset_m(places.front().centroid, dist * std::cos(bearing), dist * std::sin(bearing));
      }
      if (inside(box, p) && far_enough(p)) {
        places.push_back({static_cast<int>(places.size()), cat, p});
        return;
      }
    }
    throw ConfigError(fmt::format(
        "corpus.bbox too small to place {} places at least {} m apart",
        1 + tmpl.n_other_places + (tmpl.has_work ? 1 : 0), kMinSeparationM));
  };
  add(Category::H, 0.0, 0.0);
  if (tmpl.has_work) add(Category::W, 2000.0, 12000.0);
  for (int i = 0; i < tmpl.n_other_places; ++i) add(Category::O, 600.0, 4000.0);
  return places;
}

class Planner {
 public:
  Planner(const std::vector<TruePlace>& places, Seconds t0) : places_(places) {
    dwells_.push_back({0, t0, 0});
  }

  Seconds travel(int from, int to) const {
    const double d = haversine_m(places_[from].centroid, places_[to].centroid);
    return std::max<Seconds>(60, static_cast<Seconds>(std::ceil(d / kTravelSpeedMps)));
  }

  int current() const { return dwells_.back().place_id; }
  Seconds arrived() const { return dwells_.back().arrive; }

  // Leaves the current place so as to arrive at `to` at time `arrive`.
  bool go(int to, Seconds arrive, Seconds min_stay) {
    const Seconds depart = arrive - travel(current(), to);
    if (depart < arrived() + min_stay) return false;
    dwells_.back().leave = depart;
    dwells_.push_back({to, arrive, 0});
    return true;
  }

  void leave_for(int to, Seconds depart) {
    dwells_.back().leave = depart;
    dwells_.push_back({to, depart + travel(current(), to), 0});
  }

  std::vector<TrueDwell> finish(Seconds end) {
    dwells_.back().leave = end;
    return std::move(dwells_);
  }

 private:
  const std::vector<TruePlace>& places_;
  std::vector<TrueDwell> dwells_;
};

std::vector<int> places_of(const std::vector<TruePlace>& places, Category c) {
  std::vector<int> ids;
  for (const auto& p : places)
    if (p.category == c) ids.push_back(p.place_id);
  return ids;
}

std::vector<TrueDwell> plan_schedule(const SyntheticSpec& spec, const ArchetypeTemplate& tmpl,
                                     const std::vector<TruePlace>& places, std::mt19937_64& rng) {
  const auto others = places_of(places, Category::O);
  const auto works = places_of(places, Category::W);
  Planner plan(places, day_start(spec.start_day));
  auto pick_other = [&](int exclude) {
    std::vector<int> pool;
    for (int id : others)
      if (id != exclude) pool.push_back(id);
    if (pool.empty()) return others.front();
    return pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
  };

  for (int d = 0; d < spec.n_days; ++d) {
    const DayNumber day = spec.start_day + d;
    const Seconds midnight = day_start(day);
    const bool workday = !is_weekend(day);
    for (const Outing& o : workday ? tmpl.workday : tmpl.weekend) {
      const double u = uniform(rng, 0.0, 1.0);
      const double start_h = o.start_h + uniform(rng, -o.start_jitter_h, o.start_jitter_h);
      const double dur_h = o.duration_h + uniform(rng, -o.duration_jitter_h, o.duration_jitter_h);
      if (u >= o.prob) continue;
      const auto& pool = o.kind == Category::W ? works : others;
      if (pool.empty()) continue;
      const Seconds start = midnight + static_cast<Seconds>(start_h * kSecondsPerHour);
      const Seconds end = start + static_cast<Seconds>(dur_h * kSecondsPerHour);
      int target = o.kind == Category::W ? pool.front() : pick_other(-1);
      if (!plan.go(target, start, kMinHomeGap)) continue;
      if (!o.hop) {
        plan.leave_for(0, end);
        continue;
      }
      while (true) {
        const Seconds stay = static_cast<Seconds>(uniform(rng, 50.0, 85.0) * 60.0);
        const Seconds leave = plan.arrived() + stay;
        const int next = pick_other(plan.current());
        if (next == plan.current() || leave + plan.travel(plan.current(), next) + 50 * 60 > end) {
          plan.leave_for(0, leave);
          break;
        }
        plan.leave_for(next, leave);
      }
    }
  }
  return plan.finish(day_start(spec.start_day + spec.n_days));
}

LatLon position_at(const std::vector<TrueDwell>& dwells, const std::vector<TruePlace>& places,
                   std::size_t& cursor, Seconds t) {
  while (cursor + 1 < dwells.size() && dwells[cursor + 1].arrive <= t) ++cursor;
  const auto& cur = dwells[cursor];
  const LatLon here = places[cur.place_id].centroid;
  if (t < cur.leave || cursor + 1 == dwells.size()) return here;
  const auto& next = dwells[cursor + 1];
  const LatLon there = places[next.place_id].centroid;
  const double f = static_cast<double>(t - cur.leave) / static_cast<double>(next.arrive - cur.leave);
  return {here.lat + f * (there.lat - here.lat), here.lon + f * (there.lon - here.lon)};
}

}  // namespace

std::vector<TrueDay> label_true_days(std::span<const TrueDwell> dwells,
                                     std::span<const TruePlace> places, DayNumber first_day,
                                     int n_days) {
  std::vector<TrueDay> days;
  days.reserve(n_days);
  std::size_t lo = 0;
  for (int d = 0; d < n_days; ++d) {
    TrueDay day;
    day.date = first_day + d;
    for (int h = 0; h < 24; ++h) {
      const Seconds a = day_start(day.date) + h * kSecondsPerHour;
      const Seconds b = a + kSecondsPerHour;
      while (lo < dwells.size() && dwells[lo].leave <= a) ++lo;
      const TrueDwell* best = nullptr;
      Seconds best_overlap = 0;
      for (std::size_t i = lo; i < dwells.size() && dwells[i].arrive < b; ++i) {
        const Seconds overlap = std::min(b, dwells[i].leave) - std::max(a, dwells[i].arrive);
        if (overlap <= 0) continue;
        auto key = [&](const TrueDwell& w, Seconds ov) {
          return std::make_tuple(-ov, w.arrive, places[w.place_id].category, w.place_id);
        };
        if (!best || key(dwells[i], overlap) < key(*best, best_overlap)) {
          best = &dwells[i];
          best_overlap = overlap;
        }
      }
      day.labels[h] = best ? places[best->place_id].category : Category::U;
      day.place_ids[h] = best ? best->place_id : -1;
    }
    days.push_back(day);
  }
  return days;
}

SyntheticUser generate_user(const SyntheticSpec& spec, std::size_t index, Archetype archetype,
                            bool emit_fixes) {
  const auto& tmpl = archetype_template(archetype);
  std::mt19937_64 plan_rng(derive_seed(spec.seed, "corpus.plan", index));

  SyntheticUser user;
  user.truth.user_id = synthetic_user_id(index);
  user.truth.archetype = archetype;
  user.truth.places = place_user(spec, tmpl, plan_rng);
  user.truth.dwells = plan_schedule(spec, tmpl, user.truth.places, plan_rng);
  user.truth.days = label_true_days(user.truth.dwells, user.truth.places, spec.start_day, spec.n_days);
  user.track.user_id = user.truth.user_id;
  if (!emit_fixes) return user;

  std::mt19937_64 fix_rng(derive_seed(spec.seed, "corpus.fixes", index));
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Seconds begin = day_start(spec.start_day);
  const Seconds end = day_start(spec.start_day + spec.n_days);
  std::size_t cursor = 0;
  user.track.fixes.reserve(static_cast<std::size_t>((end - begin) / spec.sample_interval_s));
  for (Seconds t = begin; t < end; t += spec.sample_interval_s) {
    const double dn = noise(fix_rng) * spec.gps_noise_sigma_m;
    const double de = noise(fix_rng) * spec.gps_noise_sigma_m;
    const bool dropped = unit(fix_rng) < spec.dropout_prob;
    const LatLon p = position_at(user.truth.dwells, user.truth.places, cursor, t);
    if (dropped) continue;
    const LatLon q = spec.gps_noise_sigma_m > 0.0 ? offset_m(p, dn, de) : p;
    user.track.fixes.push_back({t, q.lat, q.lon});
  }
  return user;
}

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const auto archetypes = assign_archetypes(spec);
  std::vector<SyntheticUser> users(spec.n_users);
  parallel_for(spec.n_users, [&](std::size_t i) { users[i] = generate_user(spec, i, archetypes[i]); });
  SyntheticCorpus out;
  out.tracks.reserve(users.size());
  out.truth.reserve(users.size());
  for (auto& u : users) {
    out.tracks.push_back(std::move(u.track));
    out.truth.push_back(std::move(u.truth));
  }
  return out;
}

void write_truth_archetypes(std::ostream& out, std::span<const UserTruth> truth) {
  out << "user_id,archetype\n";
  for (const auto& u : truth) out << u.user_id << ',' << archetype_name(u.archetype) << '\n';
}

void write_truth_labels(std::ostream& out, std::span<const UserTruth> truth) {
  out << "user_id,date,hour,label\n";
  for (const auto& u : truth)
    for (const auto& d : u.days) {
      const auto date = format_date(d.date);
      for (int h = 0; h < 24; ++h)
        out << u.user_id << ',' << date << ',' << h << ',' << category_code(d.labels[h]) << '\n';
    }
}

void write_truth_places(std::ostream& out, std::span<const UserTruth> truth) {
  out << "user_id,place_id,category,lat,lon\n";
  for (const auto& u : truth)
    for (const auto& p : u.places)
      out << u.user_id << ',' << p.place_id << ',' << category_code(p.category) << ','
          << io::fmt_double(p.centroid.lat) << ',' << io::fmt_double(p.centroid.lon) << '\n';
}

}  // namespace lifepattern
