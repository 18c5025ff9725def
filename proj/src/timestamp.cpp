#include "eventabs/timestamp.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

namespace eventabs {
namespace {

constexpr std::int64_t kMsPerDay = 86'400'000;

bool read_digits(std::string_view text, std::size_t& pos, std::size_t count, int& out) {
  if (pos + count > text.size()) return false;
  int value = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const char c = text[pos + i];
    if (c < '0' || c > '9') return false;
    value = value * 10 + (c - '0');
  }
  out = value;
  pos += count;
  return true;
}

bool expect(std::string_view text, std::size_t& pos, char c) {
  if (pos >= text.size() || text[pos] != c) return false;
  ++pos;
  return true;
}

std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
  using namespace std::chrono;
  return sys_days{year{y} / month{m} / day{d}}.time_since_epoch().count();
}

}  // namespace

Timestamp Timestamp::from_local(int year, unsigned month, unsigned day, int hour, int minute, int second,
                                int millisecond, std::int32_t offset_min) {
  const std::int64_t local = days_from_civil(year, month, day) * kMsPerDay +
                             ((hour * 60LL + minute) * 60LL + second) * 1000LL + millisecond;
  return Timestamp{local - std::int64_t{offset_min} * 60'000, offset_min};
}

Timestamp Timestamp::plus_seconds(double seconds) const {
  return Timestamp{epoch_ms + static_cast<std::int64_t>(std::llround(seconds * 1000.0)), offset_min};
}

std::optional<std::int32_t> parse_utc_offset(std::string_view text) {
  if (text == "Z" || text == "z" || text == "UTC") return 0;
  if (text.empty() || (text[0] != '+' && text[0] != '-')) return std::nullopt;
  const int sign = text[0] == '-' ? -1 : 1;
  std::size_t pos = 1;
  int hh = 0;
  int mm = 0;
  if (!read_digits(text, pos, 2, hh)) return std::nullopt;
  if (pos < text.size() && text[pos] == ':') ++pos;
  if (pos < text.size() && !read_digits(text, pos, 2, mm)) return std::nullopt;
  if (pos != text.size() || hh > 23 || mm > 59) return std::nullopt;
  return sign * (hh * 60 + mm);
}

std::optional<Timestamp> parse_timestamp(std::string_view text, std::int32_t default_offset_min) {
  std::size_t pos = 0;
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  if (!read_digits(text, pos, 4, y) || !expect(text, pos, '-') || !read_digits(text, pos, 2, mo) ||
      !expect(text, pos, '-') || !read_digits(text, pos, 2, d)) {
    return std::nullopt;
  }
  if (pos >= text.size() || (text[pos] != 'T' && text[pos] != ' ')) return std::nullopt;
  ++pos;
  if (!read_digits(text, pos, 2, h) || !expect(text, pos, ':') || !read_digits(text, pos, 2, mi) ||
      !expect(text, pos, ':') || !read_digits(text, pos, 2, s)) {
    return std::nullopt;
  }
  int ms = 0;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    int scale = 100;
    std::size_t digits = 0;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
      ms += (text[pos] - '0') * scale;
      scale /= 10;
      ++pos;
      ++digits;
    }
    if (digits == 0) return std::nullopt;
  }
  std::int32_t offset = default_offset_min;
  if (pos < text.size()) {
    const auto parsed = parse_utc_offset(text.substr(pos));
    if (!parsed) return std::nullopt;
    offset = *parsed;
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) return std::nullopt;
  return Timestamp::from_local(y, static_cast<unsigned>(mo), static_cast<unsigned>(d), h, mi, s, ms, offset);
}

std::string format_local_date(std::int64_t local_ms) {
  using namespace std::chrono;
  const std::int64_t days = local_ms >= 0 ? local_ms / kMsPerDay : -((-local_ms + kMsPerDay - 1) / kMsPerDay);
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string format_timestamp(const Timestamp& ts) {
  const std::int64_t local = ts.local_ms();
  std::int64_t day_ms = local % kMsPerDay;
  if (day_ms < 0) day_ms += kMsPerDay;
  const std::string date = format_local_date(local);
  const int h = static_cast<int>(day_ms / 3'600'000);
  const int m = static_cast<int>(day_ms / 60'000 % 60);
  const int s = static_cast<int>(day_ms / 1000 % 60);
  const int ms = static_cast<int>(day_ms % 1000);
  const int off = ts.offset_min < 0 ? -ts.offset_min : ts.offset_min;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02d.%03d%c%02d:%02d", date.c_str(), h, m, s, ms,
                ts.offset_min < 0 ? '-' : '+', off / 60, off % 60);
  return buf;
}

}  // namespace eventabs
