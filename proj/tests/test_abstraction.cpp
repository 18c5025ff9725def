#include <doctest.h>

#include <string>
#include <vector>

#include "eventabs/abstraction.hpp"
#include "eventabs/error.hpp"
#include "eventabs/evaluation.hpp"
#include "eventabs/petri.hpp"
#include "eventabs/random.hpp"
#include "support.hpp"

using namespace eventabs;
using testsupport::nov3;
using testsupport::sensor_event;

namespace {

// Sensor name determines the activity: MC and W for medicine, D and CD for eating.
EventLog separable_log(std::uint64_t seed, int traces) {
  Rng rng(seed);
  EventLog log;
  log.global_event_attributes = {"concept:name", "time:timestamp", "label"};
  for (int d = 0; d < traces; ++d) {
    Trace t;
    t.case_id = "day" + std::to_string(d);
    Timestamp clock = Timestamp::from_local(2015, 11, 2 + d, 8, 0, 0, 0, 60);
    const auto runs = rng.integer(1, 5);
    bool medicine = rng.index(2) == 0;
    for (int r = 0; r < runs; ++r, medicine = !medicine) {
      const auto length = rng.integer(1, 4);
      for (int i = 0; i < length; ++i) {
        clock = clock.plus_seconds(static_cast<double>(rng.integer(30, 300)));
        const char* sensor = medicine ? (rng.index(2) ? "MC" : "W") : (rng.index(2) ? "D" : "CD");
        t.events.push_back(sensor_event(sensor, clock, medicine ? "TakingMedicine" : "Eating"));
      }
    }
    log.traces.push_back(std::move(t));
  }
  return log;
}

FeatureConfig unigram_config() {
  FeatureConfig fc;
  fc.ngrams = {{"concept:name", 1}};
  return fc;
}

// Run-length encoding with the first and last index of every run.
struct Run {
  std::string label;
  std::size_t first, last;
};
std::vector<Run> rle(const Trace& t) {
  std::vector<Run> runs;
  for (std::size_t i = 0; i < t.events.size(); ++i) {
    const auto l = *get_string(t.events[i], kLabel);
    if (runs.empty() || runs.back().label != l) {
      runs.push_back({l, i, i});
    } else {
      runs.back().last = i;
    }
  }
  return runs;
}

EventLog strip_labels(EventLog log) {
  for (auto& t : log.traces) {
    for (auto& e : t.events) e.attributes.erase(kLabel);
  }
  log.global_event_attributes.erase("label");
  return log;
}

}  // namespace

TEST_CASE("the eight-event example collapses to the six-event example") {
  const Trace collapsed = collapse(testsupport::table1_trace());
  const auto expected = testsupport::table2_rows();
  CHECK(collapsed.case_id == "1");
  REQUIRE(collapsed.events.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const Event& e = collapsed.events[i];
    CHECK(get_string(e, kConceptName) == expected[i].name);
    CHECK(get_string(e, kLifecycle) == expected[i].lifecycle);
    CHECK(get_timestamp(e) == expected[i].ts);
    CHECK_FALSE(e.attributes.contains(kLabel));
  }
}

TEST_CASE("a singleton run gives start and complete at one instant") {
  Trace t;
  t.case_id = "x";
  t.events = {sensor_event("S", nov3(9, 0, 0), "X")};
  const Trace c = collapse(t);
  REQUIRE(c.events.size() == 2);
  CHECK(get_string(c.events[0], kLifecycle) == "start");
  CHECK(get_string(c.events[1], kLifecycle) == "complete");
  CHECK(get_timestamp(c.events[0]) == get_timestamp(c.events[1]));
  CHECK(get_string(c.events[0], kConceptName) == "X");
}

TEST_CASE("collapse agrees with a run-length oracle") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    Trace t;
    t.case_id = "r";
    t.attributes.set("weekday", std::int64_t{3});
    Timestamp clock = nov3(6, 0, 0);
    const auto n = rng.integer(1, 25);
    for (int i = 0; i < n; ++i) {
      clock = clock.plus_seconds(static_cast<double>(rng.integer(1, 100)));
      t.events.push_back(sensor_event("S", clock, std::string(1, static_cast<char>('a' + rng.index(3)))));
    }
    const auto runs = rle(t);
    const Trace c = collapse(t);
    REQUIRE(c.events.size() == 2 * runs.size());
    CHECK(c.attributes == t.attributes);
    for (std::size_t r = 0; r < runs.size(); ++r) {
      const Event& start = c.events[2 * r];
      const Event& complete = c.events[2 * r + 1];
      CHECK(get_string(start, kConceptName) == runs[r].label);
      CHECK(get_string(complete, kConceptName) == runs[r].label);
      CHECK(get_string(start, kLifecycle) == "start");
      CHECK(get_string(complete, kLifecycle) == "complete");
      CHECK(get_timestamp(start) == get_timestamp(t.events[runs[r].first]));
      CHECK(get_timestamp(complete) == get_timestamp(t.events[runs[r].last]));
    }
    // the run structure of starts equals the ground-truth sequence
    LabelSequence starts;
    for (const auto& e : c.events) {
      if (get_string(e, kLifecycle) == "start") starts.push_back(*get_string(e, kConceptName));
    }
    CHECK(starts == ground_truth_sequence(t));
  }
}

TEST_CASE("collapse needs labels") {
  Trace t;
  t.events = {sensor_event("S", nov3(9, 0, 0))};
  CHECK_THROWS_AS(collapse(t), AttributeError);
}

TEST_CASE("collapsed log writes valid XES") {
  EventLog log;
  log.traces.push_back(testsupport::table1_trace());
  const EventLog c = collapse(log);
  CHECK(c.global_event_attributes.count("lifecycle:transition") == 1);
  CHECK(parse_xes(write_xes(c)) == c);
}

TEST_CASE("separable data round-trips through train, annotate and collapse") {
  const EventLog log = separable_log(1, 12);
  TrainConfig tc;
  tc.l1_strength = 0.01;
  const auto trained = train_abstractor(log, unigram_config(), tc);
  const EventLog annotated = annotate(trained.model, strip_labels(log));
  REQUIRE(annotated.traces.size() == log.traces.size());
  for (std::size_t t = 0; t < log.traces.size(); ++t) {
    REQUIRE(annotated.traces[t].events.size() == log.traces[t].events.size());
    for (std::size_t e = 0; e < log.traces[t].events.size(); ++e) {
      // label is the only attribute that changes
      CHECK(annotated.traces[t].events[e] == log.traces[t].events[e]);
    }
    CHECK(dls(ground_truth_sequence(annotated.traces[t]), ground_truth_sequence(log.traces[t])) == 1.0);
  }
}

TEST_CASE("annotate overwrites labels and leaves empty logs empty") {
  const EventLog log = separable_log(2, 6);
  TrainConfig tc;
  tc.l1_strength = 0.01;
  const auto model = train_abstractor(log, unigram_config(), tc).model;
  EventLog wrong = log;
  for (auto& t : wrong.traces) {
    for (auto& e : t.events) e.attributes.set("label", std::string("Sleeping"));
  }
  CHECK(annotate(model, wrong) == log);
  CHECK(annotate(model, EventLog{}).traces.empty());
}

TEST_CASE("training preconditions") {
  const EventLog log = separable_log(3, 4);
  CHECK_THROWS_AS(train_abstractor(log, FeatureConfig{}, {}), ConfigError);
  EventLog single = log;
  for (auto& t : single.traces) {
    for (auto& e : t.events) e.attributes.set("label", std::string("Only"));
  }
  CHECK_THROWS_AS(train_abstractor(single, unigram_config(), {}), InputError);
  EventLog untimed = log;
  untimed.global_event_attributes.erase("time:timestamp");
  untimed.traces[0].events[0].attributes.erase(kTimestamp);
  FeatureConfig timed;
  timed.periods = {Period::kDay};
  CHECK_THROWS_AS(train_abstractor(untimed, timed, {}), InputError);
  EventLog unlabeled = log;
  unlabeled.traces[1].events[0].attributes.erase(kLabel);
  CHECK_THROWS_AS(train_abstractor(unlabeled, unigram_config(), {}), AttributeError);
}

TEST_CASE("model files round-trip and reject unknown versions") {
  EventLog log = separable_log(4, 10);
  log.global_event_attributes.insert("lifecycle:transition");
  for (auto& t : log.traces) {
    for (std::size_t e = 0; e < t.events.size(); ++e) {
      t.events[e].attributes.set(std::string(kLifecycle), std::string(e % 2 ? "complete" : "start"));
    }
  }
  FeatureConfig fc;
  fc.ngrams = {{"concept:name", 2}};
  fc.periods = {Period::kDay, Period::kWeek};
  fc.lifecycle_values = {"start"};
  const AbstractorModel model = train_abstractor(log, fc, {}).model;
  CHECK_NOTHROW(validate(model));
  CHECK(model.registry.size() == 8);

  const std::string text = serialize_model(model);
  const AbstractorModel back = deserialize_model(text);
  CHECK(back == model);
  CHECK(serialize_model(back) == text);
  CHECK(annotate(back, strip_labels(log)) == annotate(model, strip_labels(log)));

  std::string future = text;
  const auto pos = future.find("\"format_version\": 1");
  REQUIRE(pos != std::string::npos);
  future.replace(pos, 19, "\"format_version\": 2");
  CHECK_THROWS_AS(deserialize_model(future), ConfigError);
  CHECK_THROWS_AS(deserialize_model("{}"), ConfigError);
  CHECK_THROWS_AS(deserialize_model("not json"), ConfigError);
}

TEST_CASE("training twice with one seed gives identical files") {
  const EventLog log = simulate(motivating_example(), 8, 5);
  FeatureConfig fc;
  fc.ngrams = {{"concept:name", 2}};
  fc.periods = {Period::kDay};
  TrainConfig tc;
  tc.seed = 42;
  CHECK(serialize_model(train_abstractor(log, fc, tc).model) == serialize_model(train_abstractor(log, fc, tc).model));
}

TEST_CASE("the two-level example is learnable on its training set") {
  const EventLog log = simulate(motivating_example(), 30, 1);
  FeatureConfig fc;
  fc.ngrams = {{"concept:name", 2}};
  fc.periods = {Period::kDay};
  const auto trained = train_abstractor(log, fc, {});
  CHECK(trained.crf_result.nonzero_weights > 0);
  std::size_t correct = 0, total = 0;
  for (const auto& t : log.traces) {
    const auto predicted = predict(trained.model, t);
    for (std::size_t e = 0; e < t.events.size(); ++e) {
      correct += trained.model.labels[static_cast<std::size_t>(predicted[e])] == *get_string(t.events[e], kLabel);
    }
    total += t.events.size();
  }
  const double accuracy = static_cast<double>(correct) / static_cast<double>(total);
  MESSAGE("training accuracy " << accuracy);
  CHECK(accuracy >= 0.95);
}
