#pragma once

#include <string>
#include <vector>

#include "eventabs/timestamp.hpp"
#include "eventabs/xes.hpp"

namespace testsupport {

inline eventabs::Timestamp nov3(int h, int m, int s) {
  return eventabs::Timestamp::from_local(2015, 11, 3, h, m, s, 0, 60);
}

inline eventabs::Event sensor_event(const std::string& name, const eventabs::Timestamp& ts,
                                    const std::string& label = {}) {
  eventabs::Event e;
  e.attributes.set(std::string(eventabs::kConceptName), name);
  e.attributes.set(std::string(eventabs::kTimestamp), ts);
  if (!label.empty()) e.attributes.set(std::string(eventabs::kLabel), label);
  return e;
}

/// The annotated example trace of eight sensor events. The two impossible
/// seconds fields (08:47:89, 17:10:69) are carried into the minute.
inline eventabs::Trace table1_trace() {
  eventabs::Trace t;
  t.case_id = "1";
  t.events = {
      sensor_event("Medicine cabinet", nov3(8, 45, 23), "Taking medicine"),
      sensor_event("Dishes & cups cabinet", nov3(8, 46, 11), "Taking medicine"),
      sensor_event("Water", nov3(8, 46, 45), "Taking medicine"),
      sensor_event("Dishes & cups cabinet", nov3(8, 47, 59), "Eating"),
      sensor_event("Dishwasher", nov3(8, 48, 29), "Eating"),
      sensor_event("Dishes & cups cabinet", nov3(17, 10, 58), "Taking medicine"),
      sensor_event("Medicine cabinet", nov3(17, 11, 9), "Taking medicine"),
      sensor_event("Water", nov3(17, 11, 18), "Taking medicine"),
  };
  return t;
}

struct CollapsedRow {
  std::string name;
  eventabs::Timestamp ts;
  std::string lifecycle;
};

/// The six activity-level events the example trace collapses into.
inline std::vector<CollapsedRow> table2_rows() {
  return {
      {"Taking medicine", nov3(8, 45, 23), "start"},
      {"Taking medicine", nov3(8, 46, 45), "complete"},
      {"Eating", nov3(8, 47, 59), "start"},
      {"Eating", nov3(8, 48, 29), "complete"},
      {"Taking medicine", nov3(17, 10, 58), "start"},
      {"Taking medicine", nov3(17, 11, 18), "complete"},
  };
}

}  // namespace testsupport
