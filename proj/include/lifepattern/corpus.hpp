#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lifepattern/category.hpp"
#include "lifepattern/geo.hpp"
#include "lifepattern/timeutil.hpp"

namespace lifepattern {

/// One GPS fix. `t` is local civil epoch seconds.
struct GpsFix {
  Seconds t = 0;
  double lat = 0.0;
  double lon = 0.0;
  friend bool operator==(const GpsFix&, const GpsFix&) = default;
};

/// All fixes of one user, sorted by time.
struct UserTrack {
  std::string user_id;
  std::vector<GpsFix> fixes;
  friend bool operator==(const UserTrack&, const UserTrack&) = default;
};

struct ParseReport {
  std::size_t rows = 0;
  std::size_t malformed = 0;
  std::size_t out_of_range = 0;
};

struct Corpus {
  std::vector<UserTrack> users;  // ascending user_id
  ParseReport report;
};

inline constexpr std::string_view kGpsCsvHeader = "user_id,timestamp,lat,lon";

/// Reads `user_id,timestamp,lat,lon`. Epoch integers and zoned ISO-8601 values
/// are UTC and get `tz_offset_s` added; naive ISO-8601 values are taken as
/// local wall-clock time already. Bad rows are counted and skipped; a missing
/// or wrong header throws InputError.
Corpus parse_gps_csv(std::istream& in, Seconds tz_offset_s);
Corpus parse_gps_csv(const std::filesystem::path& path, Seconds tz_offset_s);

/// Writes UTC epoch integers (local time minus the offset). The row writer
/// emits no header.
void write_gps_rows(std::ostream& out, const UserTrack& user, Seconds tz_offset_s);
void write_gps_csv(std::ostream& out, std::span<const UserTrack> users, Seconds tz_offset_s);

// ---------------------------------------------------------------------------
// Synthetic populations
// ---------------------------------------------------------------------------

enum class Archetype : std::uint8_t {
  HomeStayer,
  Telework,
  HomeOther,
  Traveler,
  Balanced,
  RegularOffice,
  LongHoursOffice,
};

inline constexpr std::array kAllArchetypes{
    Archetype::HomeStayer, Archetype::Telework,      Archetype::HomeOther,
    Archetype::Traveler,   Archetype::Balanced,      Archetype::RegularOffice,
    Archetype::LongHoursOffice};

std::string_view archetype_name(Archetype a);
std::optional<Archetype> parse_archetype(std::string_view name);

/// One planned activity inside a day. Hours are local clock hours; jitter is
/// the half-width of a uniform perturbation. A `hop` outing fills its window
/// with a chain of short visits to distinct other places.
struct Outing {
  Category kind = Category::O;
  double prob = 1.0;
  double start_h = 0.0;
  double start_jitter_h = 0.0;
  double duration_h = 1.0;
  double duration_jitter_h = 0.0;
  bool hop = false;
};

struct ArchetypeTemplate {
  Archetype id{};
  int n_other_places = 1;
  bool has_work = false;
  std::vector<Outing> workday;
  std::vector<Outing> weekend;
};

const ArchetypeTemplate& archetype_template(Archetype a);

struct SyntheticSpec {
  std::size_t n_users = 100;
  std::vector<std::pair<Archetype, double>> archetype_mix;  // empty = uniform over all 7
  int n_days = 60;
  DayNumber start_day = 15706;  // 2013-01-01
  Seconds sample_interval_s = 300;
  double gps_noise_sigma_m = 10.0;
  double dropout_prob = 0.0;
  BoundingBox region{35.55, 139.45, 35.85, 139.85};
  Seconds tz_offset_s = 32400;
  std::uint64_t seed = 1;

  /// Throws ConfigError.
  void validate() const;
  std::vector<std::pair<Archetype, double>> effective_mix() const;
};

struct TruePlace {
  int place_id = 0;
  Category category = Category::O;
  LatLon centroid;
};

struct TrueDwell {
  int place_id = 0;
  Seconds arrive = 0;
  Seconds leave = 0;
};

struct TrueDay {
  DayNumber date = 0;
  std::array<Category, 24> labels{};
  std::array<int, 24> place_ids{};  // -1 where the label is U
};

struct UserTruth {
  std::string user_id;
  Archetype archetype{};
  std::vector<TruePlace> places;  // place 0 is home
  std::vector<TrueDwell> dwells;
  std::vector<TrueDay> days;
};

struct SyntheticUser {
  UserTruth truth;
  UserTrack track;
};

struct SyntheticCorpus {
  std::vector<UserTrack> tracks;
  std::vector<UserTruth> truth;
};

/// Largest-remainder apportionment of `total` items over `fractions`;
/// remainder ties go to the lower index.
std::vector<std::size_t> apportion(std::span<const double> fractions, std::size_t total);

/// Archetype of every user index, counts fixed by apportionment, order shuffled
/// by the spec seed.
std::vector<Archetype> assign_archetypes(const SyntheticSpec& spec);

std::string synthetic_user_id(std::size_t index);

/// Generates one user independently of all others. With `emit_fixes` false
/// only the ground truth is produced (same schedule, no GPS stream).
SyntheticUser generate_user(const SyntheticSpec& spec, std::size_t index, Archetype archetype,
                            bool emit_fixes = true);

SyntheticCorpus generate_synthetic(const SyntheticSpec& spec);

/// Hour-by-hour labels from dwells: longest overlap wins, ties go to the
/// earlier arrival, then category order, then place id.
std::vector<TrueDay> label_true_days(std::span<const TrueDwell> dwells,
                                     std::span<const TruePlace> places, DayNumber first_day,
                                     int n_days);

void write_truth_archetypes(std::ostream& out, std::span<const UserTruth> truth);
void write_truth_labels(std::ostream& out, std::span<const UserTruth> truth);
void write_truth_places(std::ostream& out, std::span<const UserTruth> truth);

}  // namespace lifepattern
