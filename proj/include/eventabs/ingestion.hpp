#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "eventabs/timestamp.hpp"
#include "eventabs/xes.hpp"

namespace eventabs {

struct SensorReading {
  Timestamp timestamp;
  std::string sensor_id;
  int state = 0;  ///< 0 or 1
};

/// Where one day case ends and the next begins, in local time.
struct SegmentationPolicy {
  int boundary_minutes = 0;  ///< minutes after local midnight, in [0, 1440)
  std::int32_t offset_min = 0;
};

/// One event per sensor change point. The first reading of a sensor always
/// counts. 0->1 is "start", 1->0 is "complete"; a sensor first seen in state 0
/// also yields "complete". Output is ordered by instant, then sensor id.
std::vector<Event> readings_to_events(const std::vector<SensorReading>& readings);

/// Groups time-ordered events into one trace per local day; case ids are the
/// ISO date of the day the segment starts on.
EventLog segment_cases(const std::vector<Event>& events, const SegmentationPolicy& policy);

/// The sensor-level log skeleton: extensions, globals and classifier for the
/// concept/time/lifecycle attributes that ingestion emits.
void declare_sensor_log_schema(EventLog& log);

/// CSV with header `timestamp,sensor_id,state`. Timestamps without an offset
/// are read in `default_offset_min`. Errors name the 1-based data row.
std::vector<SensorReading> parse_readings_csv(std::string_view text, std::int32_t default_offset_min);

struct LabelInterval {
  Timestamp start;
  Timestamp end;
  std::string label;
};

/// CSV with header `start,end,label` (activity annotations).
std::vector<LabelInterval> parse_label_intervals_csv(std::string_view text, std::int32_t default_offset_min);

/// Sets "label" on every event: the first interval with start <= t <= end, or
/// `fallback` when no interval contains the event.
void apply_label_intervals(EventLog& log, const std::vector<LabelInterval>& intervals,
                           const std::string& fallback = "None");

/// Parses `hh:mm`.
int parse_boundary(std::string_view text);

}  // namespace eventabs
