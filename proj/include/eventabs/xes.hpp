#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "eventabs/timestamp.hpp"

namespace eventabs {

// Reserved attribute keys.
inline constexpr std::string_view kConceptName = "concept:name";
inline constexpr std::string_view kTimestamp = "time:timestamp";
inline constexpr std::string_view kLifecycle = "lifecycle:transition";
inline constexpr std::string_view kResource = "org:resource";
inline constexpr std::string_view kRole = "org:role";
inline constexpr std::string_view kGroup = "org:group";
inline constexpr std::string_view kLabel = "label";

using AttributeValue = std::variant<std::string, Timestamp, std::int64_t, double, bool>;

/// Ordered key/value list with unique keys. Insertion order is preserved so that
/// serialization is deterministic.
class AttributeMap {
 public:
  using Entry = std::pair<std::string, AttributeValue>;

  AttributeMap() = default;
  AttributeMap(std::initializer_list<Entry> entries);

  const AttributeValue* find(std::string_view key) const noexcept;
  bool contains(std::string_view key) const noexcept { return find(key) != nullptr; }

  /// Replaces the value in place when the key exists, appends otherwise.
  void set(std::string key, AttributeValue value);
  bool erase(std::string_view key);

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  bool operator==(const AttributeMap&) const = default;

 private:
  std::vector<Entry> entries_;
};

struct Event {
  AttributeMap attributes;

  bool operator==(const Event&) const = default;
};

struct Trace {
  std::string case_id;
  AttributeMap attributes;  ///< excluding concept:name, which is case_id
  std::vector<Event> events;

  bool operator==(const Trace&) const = default;
};

struct Extension {
  std::string name;
  std::string prefix;
  std::string uri;

  bool operator==(const Extension&) const = default;
};

struct Classifier {
  std::string name;
  std::vector<std::string> keys;

  bool operator==(const Classifier&) const = default;
};

struct EventLog {
  std::vector<Trace> traces;
  std::set<std::string> global_event_attributes;
  std::set<std::string> global_trace_attributes;
  std::vector<Classifier> classifiers;
  std::vector<Extension> extensions;
  AttributeMap attributes;  ///< log-level attributes

  bool operator==(const EventLog&) const = default;

  std::size_t event_count() const noexcept;
};

/// Throws ValidationError when a declared global attribute is missing somewhere,
/// an attribute key is empty, or a fully timestamped trace is out of order.
void validate(const EventLog& log);

std::optional<AttributeValue> get_attribute(const Event& event, std::string_view key);

/// Typed accessors; nullopt when absent or of a different type.
std::optional<std::string> get_string(const Event& event, std::string_view key);
std::optional<Timestamp> get_timestamp(const Event& event, std::string_view key = kTimestamp);

/// The standard extensions (concept, time, lifecycle, org) with their URIs.
Extension standard_extension(std::string_view prefix);

/// Parses the supported XES subset. Throws ParseError for malformed XML,
/// AttributeError for unparseable values, and ValidationError for
/// unsupported constructs or violated invariants.
EventLog parse_xes(std::string_view xml_text);

/// Deterministic serialization. Validates first.
std::string write_xes(const EventLog& log);

EventLog read_xes_file(const std::string& path);
void write_xes_file(const EventLog& log, const std::string& path);

}  // namespace eventabs
