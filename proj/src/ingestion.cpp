#include "eventabs/ingestion.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include "eventabs/error.hpp"

namespace eventabs {
namespace {

constexpr std::int64_t kMsPerDay = 86'400'000;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

// Calls row(fields, data_row_number) for every non-empty line after the header.
template <typename RowFn>
void for_each_csv_row(std::string_view text, const std::vector<std::string_view>& header, RowFn&& row) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t data_row = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line =
        trim(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (!header_seen) {
      if (fields != header) {
        std::string expected;
        for (std::size_t i = 0; i < header.size(); ++i) expected += (i ? "," : "") + std::string(header[i]);
        throw IngestionError("line " + std::to_string(line_no) + ": expected header '" + expected + "'");
      }
      header_seen = true;
      continue;
    }
    ++data_row;
    if (fields.size() != header.size()) {
      throw IngestionError("row " + std::to_string(data_row) + " (line " + std::to_string(line_no) + "): expected " +
                           std::to_string(header.size()) + " fields");
    }
    row(fields, data_row, line_no);
  }
  if (!header_seen) throw IngestionError("missing CSV header");
}

}  // namespace

std::vector<Event> readings_to_events(const std::vector<SensorReading>& readings) {
  std::map<std::string, std::vector<const SensorReading*>> by_sensor;
  for (const auto& r : readings) {
    if (r.state != 0 && r.state != 1) {
      throw IngestionError("sensor '" + r.sensor_id + "': state must be 0 or 1");
    }
    by_sensor[r.sensor_id].push_back(&r);
  }

  struct Change {
    Timestamp ts;
    const std::string* sensor;
    int state;
  };
  std::vector<Change> changes;
  for (auto& [sensor, list] : by_sensor) {
    std::stable_sort(list.begin(), list.end(),
                     [](const SensorReading* a, const SensorReading* b) { return earlier(a->timestamp, b->timestamp); });
    int previous = -1;
    for (std::size_t i = 0; i < list.size(); ++i) {
      if (i > 0 && list[i]->timestamp.epoch_ms == list[i - 1]->timestamp.epoch_ms) {
        throw IngestionError("sensor '" + sensor + "': duplicate reading at " + format_timestamp(list[i]->timestamp));
      }
      if (list[i]->state != previous) changes.push_back({list[i]->timestamp, &sensor, list[i]->state});
      previous = list[i]->state;
    }
  }
  std::sort(changes.begin(), changes.end(), [](const Change& a, const Change& b) {
    if (a.ts.epoch_ms != b.ts.epoch_ms) return a.ts.epoch_ms < b.ts.epoch_ms;
    return *a.sensor < *b.sensor;
  });

  std::vector<Event> events;
  events.reserve(changes.size());
  for (const auto& c : changes) {
    Event e;
    e.attributes.set(std::string(kConceptName), *c.sensor);
    e.attributes.set(std::string(kTimestamp), c.ts);
    e.attributes.set(std::string(kLifecycle), std::string(c.state == 1 ? "start" : "complete"));
    events.push_back(std::move(e));
  }
  return events;
}

void declare_sensor_log_schema(EventLog& log) {
  log.extensions = {standard_extension("concept"), standard_extension("time"), standard_extension("lifecycle")};
  log.global_trace_attributes = {std::string(kConceptName)};
  log.global_event_attributes = {std::string(kConceptName), std::string(kTimestamp), std::string(kLifecycle)};
  log.classifiers = {{"Sensor", {std::string(kConceptName)}}};
}

EventLog segment_cases(const std::vector<Event>& events, const SegmentationPolicy& policy) {
  if (policy.boundary_minutes < 0 || policy.boundary_minutes >= 1440) {
    throw ConfigError("segmentation boundary must be a time of day");
  }
  const std::int64_t boundary_ms = std::int64_t{policy.boundary_minutes} * 60'000;
  EventLog log;
  declare_sensor_log_schema(log);
  std::optional<std::int64_t> current_day;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto ts = get_timestamp(events[i]);
    if (!ts) throw IngestionError("event " + std::to_string(i) + ": missing time:timestamp");
    const std::int64_t local = ts->epoch_ms + std::int64_t{policy.offset_min} * 60'000;
    const std::int64_t day = floor_div(local - boundary_ms, kMsPerDay);
    if (!current_day || day != *current_day) {
      if (current_day && day < *current_day) {
        throw IngestionError("event " + std::to_string(i) + ": events are not sorted by timestamp");
      }
      current_day = day;
      Trace trace;
      trace.case_id = format_local_date(day * kMsPerDay);
      log.traces.push_back(std::move(trace));
    }
    log.traces.back().events.push_back(events[i]);
  }
  return log;
}

std::vector<SensorReading> parse_readings_csv(std::string_view text, std::int32_t default_offset_min) {
  std::vector<SensorReading> readings;
  for_each_csv_row(text, {"timestamp", "sensor_id", "state"},
                   [&](const std::vector<std::string_view>& f, std::size_t row, std::size_t line) {
                     const std::string where = "row " + std::to_string(row) + " (line " + std::to_string(line) + ")";
                     const auto ts = parse_timestamp(f[0], default_offset_min);
                     if (!ts) throw IngestionError(where + ": bad timestamp '" + std::string(f[0]) + "'");
                     if (f[1].empty()) throw IngestionError(where + ": empty sensor_id");
                     if (f[2] != "0" && f[2] != "1") {
                       throw IngestionError(where + ": state must be 0 or 1, got '" + std::string(f[2]) + "'");
                     }
                     readings.push_back({*ts, std::string(f[1]), f[2] == "1" ? 1 : 0});
                   });
  return readings;
}

std::vector<LabelInterval> parse_label_intervals_csv(std::string_view text, std::int32_t default_offset_min) {
  std::vector<LabelInterval> intervals;
  for_each_csv_row(text, {"start", "end", "label"},
                   [&](const std::vector<std::string_view>& f, std::size_t row, std::size_t line) {
                     const std::string where = "row " + std::to_string(row) + " (line " + std::to_string(line) + ")";
                     const auto start = parse_timestamp(f[0], default_offset_min);
                     const auto end = parse_timestamp(f[1], default_offset_min);
                     if (!start || !end) throw IngestionError(where + ": bad timestamp");
                     if (earlier(*end, *start)) throw IngestionError(where + ": end precedes start");
                     if (f[2].empty()) throw IngestionError(where + ": empty label");
                     intervals.push_back({*start, *end, std::string(f[2])});
                   });
  return intervals;
}

void apply_label_intervals(EventLog& log, const std::vector<LabelInterval>& intervals, const std::string& fallback) {
  for (auto& trace : log.traces) {
    for (auto& event : trace.events) {
      const auto ts = get_timestamp(event);
      std::string label = fallback;
      if (ts) {
        for (const auto& interval : intervals) {
          if (interval.start.epoch_ms <= ts->epoch_ms && ts->epoch_ms <= interval.end.epoch_ms) {
            label = interval.label;
            break;
          }
        }
      }
      event.attributes.set(std::string(kLabel), label);
    }
  }
  log.global_event_attributes.insert(std::string(kLabel));
}

int parse_boundary(std::string_view text) {
  if (text.size() != 5 || text[2] != ':') throw ConfigError("boundary must be hh:mm");
  auto digit = [&](std::size_t i) {
    if (text[i] < '0' || text[i] > '9') throw ConfigError("boundary must be hh:mm");
    return text[i] - '0';
  };
  const int h = digit(0) * 10 + digit(1);
  const int m = digit(3) * 10 + digit(4);
  if (h > 23 || m > 59) throw ConfigError("boundary must be a valid time of day");
  return h * 60 + m;
}

}  // namespace eventabs
