#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace fieldlog {

using Duration = std::chrono::seconds;

// UTC instant with 1-second precision.
struct Timestamp {
  std::int64_t seconds = 0;  // since 1970-01-01T00:00:00Z

  friend constexpr auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

constexpr Timestamp operator+(Timestamp t, Duration d) { return {t.seconds + d.count()}; }
constexpr Timestamp operator-(Timestamp t, Duration d) { return {t.seconds - d.count()}; }
constexpr Duration operator-(Timestamp a, Timestamp b) { return Duration{a.seconds - b.seconds}; }

// `YYYY-MM-DDTHH:MM:SSZ`
std::string format_timestamp(Timestamp t);
// Strict parser for the format above; rejects out-of-range calendar fields.
std::optional<Timestamp> parse_timestamp(std::string_view text);
// `YYYY-MM-DD` at 00:00:00Z.
std::optional<Timestamp> parse_date(std::string_view text);
// Accepts either a full timestamp or a date; throws Validation naming `field`.
Timestamp parse_instant(std::string_view text, std::string_view field);

// "90", "90s", "30m", "2h", "1d" (no sign). Throws Validation on anything else.
Duration parse_duration(std::string_view text, std::string_view field);

Timestamp from_civil(int year, unsigned month, unsigned day, int hour = 0, int minute = 0,
                     int second = 0);
Timestamp start_of_day(Timestamp t);
// Seconds elapsed since 00:00:00Z of the same UTC day.
std::int64_t seconds_of_day(Timestamp t);

using Clock = std::function<Timestamp()>;
Timestamp system_now();

}  // namespace fieldlog
