#include "eventabs/xes.hpp"

#include <expat.h>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "eventabs/error.hpp"

namespace eventabs {

AttributeMap::AttributeMap(std::initializer_list<Entry> entries) {
  for (const auto& [key, value] : entries) set(key, value);
}

const AttributeValue* AttributeMap::find(std::string_view key) const noexcept {
  for (const auto& [k, v] : entries_) {
    if (k == key) return &v;
  }
  return nullptr;
}

void AttributeMap::set(std::string key, AttributeValue value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  entries_.emplace_back(std::move(key), std::move(value));
}

bool AttributeMap::erase(std::string_view key) {
  const auto it = std::find_if(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.first == key; });
  if (it == entries_.end()) return false;
  entries_.erase(it);
  return true;
}

std::size_t EventLog::event_count() const noexcept {
  std::size_t n = 0;
  for (const auto& trace : traces) n += trace.events.size();
  return n;
}

std::optional<AttributeValue> get_attribute(const Event& event, std::string_view key) {
  if (const auto* value = event.attributes.find(key)) return *value;
  return std::nullopt;
}

std::optional<std::string> get_string(const Event& event, std::string_view key) {
  const auto* value = event.attributes.find(key);
  if (value == nullptr) return std::nullopt;
  if (const auto* s = std::get_if<std::string>(value)) return *s;
  return std::nullopt;
}

std::optional<Timestamp> get_timestamp(const Event& event, std::string_view key) {
  const auto* value = event.attributes.find(key);
  if (value == nullptr) return std::nullopt;
  if (const auto* ts = std::get_if<Timestamp>(value)) return *ts;
  return std::nullopt;
}

Extension standard_extension(std::string_view prefix) {
  if (prefix == "concept") return {"Concept", "concept", "http://www.xes-standard.org/concept.xesext"};
  if (prefix == "time") return {"Time", "time", "http://www.xes-standard.org/time.xesext"};
  if (prefix == "lifecycle") return {"Lifecycle", "lifecycle", "http://www.xes-standard.org/lifecycle.xesext"};
  if (prefix == "org") return {"Organizational", "org", "http://www.xes-standard.org/org.xesext"};
  throw ConfigError("unknown standard extension prefix '" + std::string(prefix) + "'");
}

void validate(const EventLog& log) {
  auto check_keys = [](const AttributeMap& attributes, const std::string& where) {
    for (const auto& [key, value] : attributes.entries()) {
      if (key.empty()) throw ValidationError(where + ": empty attribute key");
    }
  };
  check_keys(log.attributes, "log");
  for (std::size_t t = 0; t < log.traces.size(); ++t) {
    const Trace& trace = log.traces[t];
    const std::string trace_where = "trace " + std::to_string(t);
    check_keys(trace.attributes, trace_where);
    for (const auto& key : log.global_trace_attributes) {
      if (key != kConceptName && !trace.attributes.contains(key)) {
        throw ValidationError(trace_where + ": missing global trace attribute '" + key + "'");
      }
    }
    bool all_timed = true;
    for (std::size_t e = 0; e < trace.events.size(); ++e) {
      const Event& event = trace.events[e];
      const std::string where = trace_where + ", event " + std::to_string(e);
      check_keys(event.attributes, where);
      for (const auto& key : log.global_event_attributes) {
        if (!event.attributes.contains(key)) {
          throw ValidationError(where + ": missing global event attribute '" + key + "'");
        }
      }
      all_timed = all_timed && get_timestamp(event).has_value();
    }
    if (all_timed) {
      for (std::size_t e = 1; e < trace.events.size(); ++e) {
        if (earlier(*get_timestamp(trace.events[e]), *get_timestamp(trace.events[e - 1]))) {
          throw ValidationError(trace_where + ", event " + std::to_string(e) + ": timestamp decreases");
        }
      }
    }
  }
}

namespace {

enum class Scope { kLog, kGlobalTrace, kGlobalEvent, kTrace, kEvent, kAttribute };

struct ParserState {
  XML_Parser parser = nullptr;
  EventLog log;
  std::vector<Scope> stack;
  std::size_t trace_index = 0;
  std::size_t event_index = 0;
  bool seen_root = false;

  // First error wins; the parser is stopped right after it is recorded.
  std::optional<std::string> error;
  enum class Kind { kParse, kAttribute, kValidation } error_kind = Kind::kParse;
  std::size_t error_line = 0;
  std::size_t error_column = 0;

  std::string where() const {
    for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
      if (*it == Scope::kEvent) {
        return "trace " + std::to_string(trace_index) + ", event " + std::to_string(event_index);
      }
      if (*it == Scope::kTrace) return "trace " + std::to_string(trace_index);
    }
    return "log";
  }

  void fail(Kind kind, std::string message) {
    if (error) return;
    error = std::move(message);
    error_kind = kind;
    error_line = XML_GetCurrentLineNumber(parser);
    error_column = XML_GetCurrentColumnNumber(parser) + 1;
    XML_StopParser(parser, XML_FALSE);
  }
};

const char* find_attr(const XML_Char** attrs, std::string_view name) {
  for (std::size_t i = 0; attrs[i] != nullptr; i += 2) {
    if (name == attrs[i]) return attrs[i + 1];
  }
  return nullptr;
}

std::optional<AttributeValue> convert_value(std::string_view type, std::string_view text) {
  if (type == "string") return AttributeValue{std::string(text)};
  if (type == "date") {
    if (auto ts = parse_timestamp(text)) return AttributeValue{*ts};
    return std::nullopt;
  }
  if (type == "int") {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
    return AttributeValue{v};
  }
  if (type == "float") {
    double v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
    return AttributeValue{v};
  }
  if (type == "boolean") {
    if (text == "true" || text == "TRUE" || text == "True") return AttributeValue{true};
    if (text == "false" || text == "FALSE" || text == "False") return AttributeValue{false};
    return std::nullopt;
  }
  return std::nullopt;
}

bool is_attribute_element(std::string_view name) {
  return name == "string" || name == "date" || name == "int" || name == "float" || name == "boolean";
}

bool is_unsupported_attribute_element(std::string_view name) {
  return name == "list" || name == "container" || name == "id" || name == "values";
}

void XMLCALL on_start(void* user, const XML_Char* name_c, const XML_Char** attrs) {
  auto& st = *static_cast<ParserState*>(user);
  if (st.error) return;
  const std::string_view name = name_c;
  using Kind = ParserState::Kind;

  if (!st.seen_root) {
    if (name != "log") {
      st.fail(Kind::kValidation, "root element must be 'log', found '" + std::string(name) + "'");
      return;
    }
    st.seen_root = true;
    st.stack.push_back(Scope::kLog);
    return;
  }
  if (st.stack.empty()) {
    st.fail(Kind::kValidation, "content after root element");
    return;
  }
  const Scope parent = st.stack.back();

  if (parent == Scope::kAttribute) {
    st.fail(Kind::kValidation, st.where() + ": nested attributes are not supported");
    return;
  }
  if (is_unsupported_attribute_element(name)) {
    st.fail(Kind::kValidation, st.where() + ": attribute type '" + std::string(name) + "' is not supported");
    return;
  }
  if (is_attribute_element(name)) {
    const char* key = find_attr(attrs, "key");
    const char* value = find_attr(attrs, "value");
    if (key == nullptr || value == nullptr) {
      st.fail(Kind::kParse, st.where() + ": attribute element needs 'key' and 'value'");
      return;
    }
    if (*key == '\0') {
      st.fail(Kind::kValidation, st.where() + ": empty attribute key");
      return;
    }
    st.stack.push_back(Scope::kAttribute);
    switch (parent) {
      case Scope::kGlobalEvent:
        st.log.global_event_attributes.insert(key);
        return;
      case Scope::kGlobalTrace:
        st.log.global_trace_attributes.insert(key);
        return;
      default:
        break;
    }
    auto converted = convert_value(name, value);
    if (!converted) {
      st.fail(Kind::kAttribute, st.where() + ": cannot parse " + std::string(name) + " value '" + value +
                                    "' for key '" + key + "'");
      return;
    }
    if (parent == Scope::kLog) {
      st.log.attributes.set(key, std::move(*converted));
    } else if (parent == Scope::kTrace) {
      Trace& trace = st.log.traces.back();
      if (std::string_view(key) == kConceptName && std::holds_alternative<std::string>(*converted)) {
        trace.case_id = std::get<std::string>(*converted);
      } else {
        trace.attributes.set(key, std::move(*converted));
      }
    } else if (parent == Scope::kEvent) {
      AttributeMap& target = st.log.traces.back().events.back().attributes;
      if (target.contains(key)) {
        st.fail(Kind::kValidation, st.where() + ": duplicate attribute key '" + std::string(key) + "'");
        return;
      }
      target.set(key, std::move(*converted));
    }
    return;
  }

  if (parent == Scope::kLog) {
    if (name == "trace") {
      if (!st.log.traces.empty()) ++st.trace_index;
      st.log.traces.emplace_back();
      st.event_index = 0;
      st.stack.push_back(Scope::kTrace);
      return;
    }
    if (name == "global") {
      const char* scope = find_attr(attrs, "scope");
      const std::string_view s = scope ? scope : "event";
      if (s == "trace") {
        st.stack.push_back(Scope::kGlobalTrace);
      } else if (s == "event") {
        st.stack.push_back(Scope::kGlobalEvent);
      } else {
        st.fail(Kind::kValidation, "unknown global scope '" + std::string(s) + "'");
      }
      return;
    }
    if (name == "extension") {
      const char* n = find_attr(attrs, "name");
      const char* p = find_attr(attrs, "prefix");
      const char* u = find_attr(attrs, "uri");
      st.log.extensions.push_back({n ? n : "", p ? p : "", u ? u : ""});
      st.stack.push_back(Scope::kAttribute);
      return;
    }
    if (name == "classifier") {
      const char* n = find_attr(attrs, "name");
      const char* k = find_attr(attrs, "keys");
      Classifier classifier{n ? n : "", {}};
      std::istringstream keys(k ? k : "");
      for (std::string key; keys >> key;) classifier.keys.push_back(key);
      st.log.classifiers.push_back(std::move(classifier));
      st.stack.push_back(Scope::kAttribute);
      return;
    }
  }
  if (parent == Scope::kTrace && name == "event") {
    Trace& trace = st.log.traces.back();
    if (!trace.events.empty()) ++st.event_index;
    trace.events.emplace_back();
    st.stack.push_back(Scope::kEvent);
    return;
  }
  st.fail(Kind::kValidation, st.where() + ": unexpected element '" + std::string(name) + "'");
}

void XMLCALL on_end(void* user, const XML_Char*) {
  auto& st = *static_cast<ParserState*>(user);
  if (st.error || st.stack.empty()) return;
  st.stack.pop_back();
}

void escape_into(std::string& out, std::string_view text) {
  for (const char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      case '\n': out += "&#10;"; break;
      case '\r': out += "&#13;"; break;
      case '\t': out += "&#9;"; break;
      default: out += c;
    }
  }
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_attribute(std::string& out, int indent, std::string_view key, const AttributeValue& value) {
  out.append(static_cast<std::size_t>(indent) * 2, ' ');
  std::string_view type;
  std::string text;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) {
          type = "string";
          text = v;
        } else if constexpr (std::is_same_v<T, Timestamp>) {
          type = "date";
          text = format_timestamp(v);
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          type = "int";
          text = std::to_string(v);
        } else if constexpr (std::is_same_v<T, double>) {
          type = "float";
          text = format_double(v);
        } else {
          type = "boolean";
          text = v ? "true" : "false";
        }
      },
      value);
  out += '<';
  out += type;
  out += " key=\"";
  escape_into(out, key);
  out += "\" value=\"";
  escape_into(out, text);
  out += "\"/>\n";
}

// Placeholder value for a global declaration, typed after the first occurrence.
AttributeValue global_default(const EventLog& log, const std::string& key, bool event_scope) {
  for (const auto& trace : log.traces) {
    if (!event_scope) {
      if (const auto* v = trace.attributes.find(key)) {
        return std::visit([](const auto& x) -> AttributeValue { return std::decay_t<decltype(x)>{}; }, *v);
      }
      continue;
    }
    for (const auto& event : trace.events) {
      if (const auto* v = event.attributes.find(key)) {
        if (std::holds_alternative<std::string>(*v)) return std::string("__INVALID__");
        return std::visit([](const auto& x) -> AttributeValue { return std::decay_t<decltype(x)>{}; }, *v);
      }
    }
  }
  return std::string("__INVALID__");
}

}  // namespace

EventLog parse_xes(std::string_view xml_text) {
  ParserState st;
  std::unique_ptr<std::remove_pointer_t<XML_Parser>, decltype(&XML_ParserFree)> parser(XML_ParserCreate("UTF-8"),
                                                                                        &XML_ParserFree);
  st.parser = parser.get();
  XML_SetUserData(st.parser, &st);
  XML_SetElementHandler(st.parser, &on_start, &on_end);
  const auto status = XML_Parse(st.parser, xml_text.data(), static_cast<int>(xml_text.size()), XML_TRUE);
  if (st.error) {
    switch (st.error_kind) {
      case ParserState::Kind::kAttribute:
        throw AttributeError(*st.error);
      case ParserState::Kind::kValidation:
        throw ValidationError(*st.error);
      case ParserState::Kind::kParse:
        throw ParseError(*st.error, st.error_line, st.error_column);
    }
  }
  if (status != XML_STATUS_OK) {
    throw ParseError(XML_ErrorString(XML_GetErrorCode(st.parser)), XML_GetCurrentLineNumber(st.parser),
                     XML_GetCurrentColumnNumber(st.parser) + 1);
  }
  if (!st.seen_root) throw ParseError("missing root element", 1, 1);
  validate(st.log);
  return std::move(st.log);
}

std::string write_xes(const EventLog& log) {
  validate(log);
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\" ?>\n";
  out += "<log xes.version=\"2.0\">\n";
  for (const auto& ext : log.extensions) {
    out += "  <extension name=\"";
    escape_into(out, ext.name);
    out += "\" prefix=\"";
    escape_into(out, ext.prefix);
    out += "\" uri=\"";
    escape_into(out, ext.uri);
    out += "\"/>\n";
  }
  if (!log.global_trace_attributes.empty()) {
    out += "  <global scope=\"trace\">\n";
    for (const auto& key : log.global_trace_attributes) {
      const AttributeValue def =
          key == kConceptName ? AttributeValue{std::string("__INVALID__")} : global_default(log, key, false);
      write_attribute(out, 2, key, def);
    }
    out += "  </global>\n";
  }
  if (!log.global_event_attributes.empty()) {
    out += "  <global scope=\"event\">\n";
    for (const auto& key : log.global_event_attributes) write_attribute(out, 2, key, global_default(log, key, true));
    out += "  </global>\n";
  }
  for (const auto& classifier : log.classifiers) {
    out += "  <classifier name=\"";
    escape_into(out, classifier.name);
    out += "\" keys=\"";
    for (std::size_t i = 0; i < classifier.keys.size(); ++i) {
      if (i > 0) out += ' ';
      escape_into(out, classifier.keys[i]);
    }
    out += "\"/>\n";
  }
  for (const auto& [key, value] : log.attributes.entries()) write_attribute(out, 1, key, value);
  for (const auto& trace : log.traces) {
    out += "  <trace>\n";
    write_attribute(out, 2, kConceptName, trace.case_id);
    for (const auto& [key, value] : trace.attributes.entries()) write_attribute(out, 2, key, value);
    for (const auto& event : trace.events) {
      out += "    <event>\n";
      for (const auto& [key, value] : event.attributes.entries()) write_attribute(out, 3, key, value);
      out += "    </event>\n";
    }
    out += "  </trace>\n";
  }
  out += "</log>\n";
  return out;
}

EventLog read_xes_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_xes(buffer.str());
}

void write_xes_file(const EventLog& log, const std::string& path) {
  const std::string text = write_xes(log);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("write to '" + path + "' failed");
}

}  // namespace eventabs
