#include "fieldlog/core/time.h"

#include <charconv>
#include <cstdio>
#include <limits>

#include "fieldlog/core/error.h"

namespace fieldlog {
namespace {

using std::chrono::days;
using std::chrono::sys_days;
using std::chrono::year_month_day;

bool parse_fixed(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  int v = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    v = v * 10 + (s[i] - '0');
  }
  out = v;
  return true;
}

std::optional<year_month_day> parse_ymd(std::string_view s) {
  int y = 0, m = 0, d = 0;
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  if (!parse_fixed(s, 0, 4, y) || !parse_fixed(s, 5, 2, m) || !parse_fixed(s, 8, 2, d)) {
    return std::nullopt;
  }
  year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                     std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return ymd;
}

}  // namespace

Timestamp from_civil(int year, unsigned month, unsigned day, int hour, int minute, int second) {
  const sys_days date{std::chrono::year{year} / std::chrono::month{month} / std::chrono::day{day}};
  return Timestamp{date.time_since_epoch().count() * 86400LL + hour * 3600LL + minute * 60LL +
                   second};
}

std::string format_timestamp(Timestamp t) {
  const std::int64_t day_count = t.seconds >= 0 ? t.seconds / 86400 : (t.seconds - 86399) / 86400;
  const std::int64_t rem = t.seconds - day_count * 86400;
  const year_month_day ymd{sys_days{days{day_count}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60),
                static_cast<int>(rem % 60));
  return buf;
}

std::optional<Timestamp> parse_timestamp(std::string_view s) {
  if (s.size() != 20 || s[10] != 'T' || s[13] != ':' || s[16] != ':' || s[19] != 'Z') {
    return std::nullopt;
  }
  const auto ymd = parse_ymd(s);
  int hh = 0, mm = 0, ss = 0;
  if (!ymd || !parse_fixed(s, 11, 2, hh) || !parse_fixed(s, 14, 2, mm) ||
      !parse_fixed(s, 17, 2, ss)) {
    return std::nullopt;
  }
  if (hh > 23 || mm > 59 || ss > 59) return std::nullopt;
  const auto base = sys_days{*ymd}.time_since_epoch().count();
  return Timestamp{base * 86400LL + hh * 3600LL + mm * 60LL + ss};
}

std::optional<Timestamp> parse_date(std::string_view s) {
  if (s.size() != 10) return std::nullopt;
  const auto ymd = parse_ymd(s);
  if (!ymd) return std::nullopt;
  return Timestamp{sys_days{*ymd}.time_since_epoch().count() * 86400LL};
}

Timestamp parse_instant(std::string_view text, std::string_view field) {
  if (auto t = parse_timestamp(text)) return *t;
  if (auto d = parse_date(text)) return *d;
  fail_validation("expected YYYY-MM-DDTHH:MM:SSZ or YYYY-MM-DD, got '" + std::string(text) + "'",
                  std::string(field));
}

Duration parse_duration(std::string_view text, std::string_view field) {
  std::int64_t value = 0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  std::int64_t scale = 0;
  if (ec == std::errc{} && ptr != first && *first != '-') {
    const std::string_view suffix(ptr, static_cast<std::size_t>(last - ptr));
    if (suffix.empty() || suffix == "s") scale = 1;
    else if (suffix == "m") scale = 60;
    else if (suffix == "h") scale = 3600;
    else if (suffix == "d") scale = 86400;
  }
  if (scale == 0 || value > std::numeric_limits<std::int64_t>::max() / scale) {
    fail_validation("expected a duration like 90, 30m, 2h or 1d, got '" + std::string(text) + "'",
                    std::string(field));
  }
  return Duration{value * scale};
}

Timestamp start_of_day(Timestamp t) { return Timestamp{t.seconds - seconds_of_day(t)}; }

std::int64_t seconds_of_day(Timestamp t) {
  const std::int64_t r = t.seconds % 86400;
  return r < 0 ? r + 86400 : r;
}

Timestamp system_now() {
  using namespace std::chrono;
  return Timestamp{duration_cast<seconds>(system_clock::now().time_since_epoch()).count()};
}

}  // namespace fieldlog
