#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace eventabs {

/// An instant with millisecond precision plus the UTC offset it was recorded in.
/// Equality is structural (instant and offset); ordering uses the instant only.
struct Timestamp {
  std::int64_t epoch_ms = 0;    ///< milliseconds since 1970-01-01T00:00:00Z
  std::int32_t offset_min = 0;  ///< local time = UTC + offset

  bool operator==(const Timestamp&) const = default;

  /// Milliseconds since the Unix epoch in local wall-clock time.
  std::int64_t local_ms() const noexcept { return epoch_ms + std::int64_t{offset_min} * 60'000; }

  Timestamp plus_seconds(double seconds) const;

  static Timestamp from_local(int year, unsigned month, unsigned day, int hour, int minute, int second,
                              int millisecond, std::int32_t offset_min);
};

inline bool earlier(const Timestamp& a, const Timestamp& b) noexcept { return a.epoch_ms < b.epoch_ms; }

/// Parses ISO-8601 `YYYY-MM-DDThh:mm:ss[.fff][Z|±hh:mm]`. A space may replace `T`.
/// Without an offset designator, `default_offset_min` applies. Returns nullopt on malformed text.
std::optional<Timestamp> parse_timestamp(std::string_view text, std::int32_t default_offset_min = 0);

/// `2015-11-03T08:45:23.000+01:00`
std::string format_timestamp(const Timestamp& ts);

/// Parses `±hh:mm`, `±hhmm`, `Z` or `UTC`. Returns minutes east of UTC.
std::optional<std::int32_t> parse_utc_offset(std::string_view text);

/// Local calendar date of `local_ms` as `YYYY-MM-DD`.
std::string format_local_date(std::int64_t local_ms);

}  // namespace eventabs
