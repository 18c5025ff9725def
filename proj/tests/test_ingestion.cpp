#include <doctest.h>

#include <algorithm>
#include <ctime>
#include <map>
#include <string>
#include <tuple>

#include "eventabs/error.hpp"
#include "eventabs/ingestion.hpp"
#include "eventabs/random.hpp"
#include "support.hpp"

using namespace eventabs;
using testsupport::nov3;

namespace {

std::string name_of(const Event& e) { return *get_string(e, kConceptName); }
std::string lifecycle_of(const Event& e) { return *get_string(e, kLifecycle); }
Timestamp time_of(const Event& e) { return *get_timestamp(e); }

}  // namespace

TEST_CASE("on then off gives start then complete") {
  const auto events = readings_to_events({{nov3(8, 0, 0), "S", 1}, {nov3(8, 5, 0), "S", 0}});
  REQUIRE(events.size() == 2);
  CHECK(name_of(events[0]) == "S");
  CHECK(lifecycle_of(events[0]) == "start");
  CHECK(time_of(events[0]) == nov3(8, 0, 0));
  CHECK(lifecycle_of(events[1]) == "complete");
  CHECK(time_of(events[1]) == nov3(8, 5, 0));
}

TEST_CASE("a repeated state is not a change point") {
  const auto events = readings_to_events({{nov3(8, 0, 0), "S", 1}, {nov3(8, 5, 0), "S", 1}});
  REQUIRE(events.size() == 1);
  CHECK(lifecycle_of(events[0]) == "start");
}

TEST_CASE("first reading counts even when it is off") {
  const auto events = readings_to_events({{nov3(8, 0, 0), "S", 0}});
  REQUIRE(events.size() == 1);
  CHECK(lifecycle_of(events[0]) == "complete");
}

TEST_CASE("duplicate sensor timestamp is an ingestion error") {
  CHECK_THROWS_AS(readings_to_events({{nov3(8, 0, 0), "S", 1}, {nov3(8, 0, 0), "S", 0}}), IngestionError);
}

TEST_CASE("interleaved sensors merge like a brute-force sort") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    std::vector<SensorReading> readings;
    // expected change points, generated per sensor independently of the merge
    std::vector<std::tuple<std::int64_t, std::string, std::string>> expected;
    for (const std::string sensor : {"A", "B", "C"}) {
      std::int64_t t = nov3(0, 0, 0).epoch_ms;
      int previous = -1;
      for (int i = 0; i < 20; ++i) {
        t += 1000 * rng.integer(1, 120);
        const int state = static_cast<int>(rng.index(2));
        readings.push_back({Timestamp{t, 60}, sensor, state});
        if (state != previous) expected.emplace_back(t, sensor, state == 1 ? "start" : "complete");
        previous = state;
      }
    }
    // input order must not matter
    std::reverse(readings.begin(), readings.end());
    std::sort(expected.begin(), expected.end());

    const auto events = readings_to_events(readings);
    REQUIRE(events.size() == expected.size());
    for (std::size_t i = 0; i < events.size(); ++i) {
      CHECK(time_of(events[i]).epoch_ms == std::get<0>(expected[i]));
      CHECK(name_of(events[i]) == std::get<1>(expected[i]));
      CHECK(lifecycle_of(events[i]) == std::get<2>(expected[i]));
    }
  }
}

TEST_CASE("midnight separates cases") {
  const auto log = segment_cases(
      {testsupport::sensor_event("A", Timestamp::from_local(2015, 11, 3, 23, 59, 0, 0, 60)),
       testsupport::sensor_event("B", Timestamp::from_local(2015, 11, 4, 0, 1, 0, 0, 60))},
      SegmentationPolicy{0, 60});
  REQUIRE(log.traces.size() == 2);
  CHECK(log.traces[0].case_id == "2015-11-03");
  CHECK(log.traces[1].case_id == "2015-11-04");
  CHECK(log.traces[0].events.size() == 1);
  CHECK(log.traces[1].events.size() == 1);
}

TEST_CASE("one day stays one case and the boundary instant opens the next") {
  const auto same_day = segment_cases({testsupport::sensor_event("A", nov3(0, 0, 0)),
                                       testsupport::sensor_event("B", nov3(12, 0, 0)),
                                       testsupport::sensor_event("C", nov3(23, 59, 59))},
                                      SegmentationPolicy{0, 60});
  REQUIRE(same_day.traces.size() == 1);
  CHECK(same_day.traces[0].events.size() == 3);

  const auto shifted = segment_cases(
      {testsupport::sensor_event("A", nov3(5, 59, 59)), testsupport::sensor_event("B", nov3(6, 0, 0))},
      SegmentationPolicy{parse_boundary("06:00"), 60});
  REQUIRE(shifted.traces.size() == 2);
  CHECK(shifted.traces[0].case_id == "2015-11-02");
  CHECK(shifted.traces[1].case_id == "2015-11-03");
}

TEST_CASE("grouping matches a by-local-date oracle over seven days") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    const std::int32_t offset = static_cast<std::int32_t>(rng.integer(-12, 12) * 60);
    std::vector<Event> events;
    std::int64_t t = Timestamp::from_local(2015, 11, 1, 0, 0, 0, 0, offset).epoch_ms;
    for (int i = 0; i < 80; ++i) {
      t += 1000 * rng.integer(1, 7 * 86400 / 80 * 2);
      events.push_back(testsupport::sensor_event("S" + std::to_string(i), Timestamp{t, offset}));
    }

    // oracle: local civil date from the UTC instant shifted by the offset
    std::map<std::string, std::vector<std::string>> oracle;
    for (const auto& e : events) {
      const std::int64_t local_s = time_of(e).epoch_ms / 1000 + offset * 60;
      const std::time_t as_time = static_cast<std::time_t>(local_s);
      std::tm tm{};
      gmtime_r(&as_time, &tm);
      char buf[16];
      std::strftime(buf, sizeof buf, "%Y-%m-%d", &tm);
      oracle[buf].push_back(name_of(e));
    }

    const auto log = segment_cases(events, SegmentationPolicy{0, offset});
    REQUIRE(log.traces.size() == oracle.size());
    std::size_t total = 0;
    std::vector<std::string> concatenated;
    for (const auto& trace : log.traces) {
      std::vector<std::string> names;
      for (const auto& e : trace.events) names.push_back(name_of(e));
      CHECK(oracle.at(trace.case_id) == names);
      total += names.size();
      concatenated.insert(concatenated.end(), names.begin(), names.end());
    }
    CHECK(total == events.size());
    std::vector<std::string> input;
    for (const auto& e : events) input.push_back(name_of(e));
    CHECK(concatenated == input);
  }
}

TEST_CASE("event without timestamp cannot be segmented") {
  Event e;
  e.attributes.set("concept:name", std::string("A"));
  CHECK_THROWS_AS(segment_cases({e}, {}), InputError);
}

TEST_CASE("CSV parsing") {
  const auto readings = parse_readings_csv(
      "timestamp,sensor_id,state\n2015-11-03T08:00:00,Door,1\n2015-11-03 08:00:05+02:00,Door,0\n", 60);
  REQUIRE(readings.size() == 2);
  CHECK(readings[0].timestamp == nov3(8, 0, 0));
  CHECK(readings[1].timestamp.offset_min == 120);
  CHECK(readings[1].state == 0);

  try {
    parse_readings_csv("timestamp,sensor_id,state\n2015-11-03T08:00:00,Door,1\n2015-11-03T08:01:00,Door,2\n", 0);
    FAIL("expected IngestionError");
  } catch (const IngestionError& e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_readings_csv("time,sensor,state\n", 0), IngestionError);
}

TEST_CASE("label intervals annotate by containment") {
  EventLog log = segment_cases(readings_to_events({{nov3(8, 0, 0), "Door", 1}, {nov3(9, 0, 0), "Door", 0}}),
                               SegmentationPolicy{0, 60});
  const auto intervals = parse_label_intervals_csv("start,end,label\n2015-11-03T07:55:00,2015-11-03T08:10:00,Leave\n", 60);
  apply_label_intervals(log, intervals);
  CHECK(get_string(log.traces[0].events[0], kLabel) == "Leave");
  CHECK(get_string(log.traces[0].events[1], kLabel) == "None");
  CHECK(log.global_event_attributes.count("label") == 1);
}

TEST_CASE("boundary parsing") {
  CHECK(parse_boundary("00:00") == 0);
  CHECK(parse_boundary("06:30") == 390);
  CHECK_THROWS_AS(parse_boundary("24:00"), InputError);
  CHECK_THROWS_AS(parse_boundary("6h"), InputError);
}
