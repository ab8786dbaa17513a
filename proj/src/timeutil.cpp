#include "lifepattern/timeutil.hpp"

#include <chrono>
#include <charconv>

#include <fmt/format.h>

namespace lifepattern {

namespace {

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  const char* first = s.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + len, out);
  return ec == std::errc{} && ptr == first + len;
}

std::optional<DayNumber> civil_day(int y, int m, int d) {
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return sys_days{ymd}.time_since_epoch().count();
}

}  // namespace

int weekday_of(DayNumber d) {
  using namespace std::chrono;
  return static_cast<int>(weekday{sys_days{days{d}}}.c_encoding());
}

bool is_weekend(DayNumber d) {
  const int w = weekday_of(d);
  return w == 0 || w == 6;
}

std::string format_date(DayNumber d) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{days{d}}};
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

std::optional<DayNumber> parse_date(std::string_view text) {
  int y = 0, m = 0, d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  if (!read_int(text, 0, 4, y) || !read_int(text, 5, 2, m) || !read_int(text, 8, 2, d))
    return std::nullopt;
  return civil_day(y, m, d);
}

std::optional<ParsedTimestamp> parse_iso8601(std::string_view text) {
  if (text.size() < 16) return std::nullopt;
  const auto date = parse_date(text.substr(0, 10));
  if (!date || (text[10] != 'T' && text[10] != ' ') || text[13] != ':') return std::nullopt;
  int hh = 0, mm = 0, ss = 0;
  if (!read_int(text, 11, 2, hh) || !read_int(text, 14, 2, mm)) return std::nullopt;
  std::size_t pos = 16;
  if (pos < text.size() && text[pos] == ':') {
    if (!read_int(text, pos + 1, 2, ss)) return std::nullopt;
    pos += 3;
  }
  if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
  ParsedTimestamp out;
  out.seconds = day_start(*date) + hh * kSecondsPerHour + mm * 60 + ss;
  const auto zone = text.substr(pos);
  if (zone.empty()) return out;
  out.has_zone = true;
  if (zone == "Z") return out;
  int zh = 0, zm = 0;
  if (zone.size() != 6 || (zone[0] != '+' && zone[0] != '-') || zone[3] != ':' ||
      !read_int(zone, 1, 2, zh) || !read_int(zone, 4, 2, zm))
    return std::nullopt;
  const Seconds shift = zh * kSecondsPerHour + zm * 60;
  out.seconds -= zone[0] == '+' ? shift : -shift;
  return out;
}

}  // namespace lifepattern
