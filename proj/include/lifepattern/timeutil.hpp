#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace lifepattern {

// All times after ingestion are local civil epoch seconds: UTC epoch plus the
// configured offset. Hour-of-day and calendar logic never sees UTC again.
using Seconds = std::int64_t;
// Days since 1970-01-01 in local civil time.
using DayNumber = std::int64_t;

inline constexpr Seconds kSecondsPerHour = 3600;
inline constexpr Seconds kSecondsPerDay = 86400;

constexpr DayNumber day_of(Seconds t) {
  return t >= 0 ? t / kSecondsPerDay : -((-t + kSecondsPerDay - 1) / kSecondsPerDay);
}
constexpr Seconds day_start(DayNumber d) { return d * kSecondsPerDay; }
constexpr int hour_of(Seconds t) {
  return static_cast<int>((t - day_start(day_of(t))) / kSecondsPerHour);
}

/// 0 = Sunday ... 6 = Saturday.
int weekday_of(DayNumber d);
bool is_weekend(DayNumber d);

std::string format_date(DayNumber d);
std::optional<DayNumber> parse_date(std::string_view text);

/// Parses `YYYY-MM-DD[T| ]HH:MM[:SS]` with an optional `Z` or `+HH:MM` suffix.
/// Returns epoch seconds of the civil time and whether a zone designator was
/// present (in which case the value is UTC rather than wall-clock).
struct ParsedTimestamp {
  Seconds seconds = 0;
  bool has_zone = false;
};
std::optional<ParsedTimestamp> parse_iso8601(std::string_view text);

}  // namespace lifepattern
