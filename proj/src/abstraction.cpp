#include "eventabs/abstraction.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "eventabs/error.hpp"
#include "eventabs/random.hpp"

namespace eventabs {

using nlohmann::json;

void validate(const AbstractorModel& model) {
  if (model.format_version != kAbstractorFormatVersion) {
    throw ConfigError("unsupported abstractor format_version " + std::to_string(model.format_version));
  }
  if (model.registry.empty()) throw ConfigError("abstractor has no observation features");
  if (model.registry.size() != model.features.per_spec.size()) {
    throw ConfigError("feature registry and fitted models differ in length");
  }
  if (model.crf.feature_count() != static_cast<Eigen::Index>(model.registry.size())) {
    throw ConfigError("CRF feature count " + std::to_string(model.crf.feature_count()) +
                      " does not match registry size " + std::to_string(model.registry.size()));
  }
  if (model.crf.labels() != model.labels) throw ConfigError("CRF label alphabet differs from the abstractor's");
  for (const auto& spec : model.registry) {
    validate(spec);
    const std::string& label = std::visit([](const auto& s) -> const std::string& { return s.label; }, spec);
    if (std::find(model.labels.begin(), model.labels.end(), label) == model.labels.end()) {
      throw ConfigError("feature " + describe(spec) + " refers to an unknown label");
    }
  }
}

AbstractorTraining train_abstractor(const EventLog& annotated, const FeatureConfig& feature_config,
                                    const TrainConfig& train_config) {
  if (feature_config.empty()) throw ConfigError("no feature families configured");
  std::vector<std::string> labels = label_alphabet(annotated);
  if (labels.size() < 2) {
    throw InputError("annotated log must contain at least 2 distinct labels, found " + std::to_string(labels.size()));
  }
  if (!feature_config.periods.empty()) {
    for (std::size_t t = 0; t < annotated.traces.size(); ++t) {
      for (std::size_t e = 0; e < annotated.traces[t].events.size(); ++e) {
        if (!get_timestamp(annotated.traces[t].events[e])) {
          throw AttributeError("trace " + std::to_string(t) + ", event " + std::to_string(e) +
                               ": time features requested but time:timestamp is missing");
        }
      }
    }
  }

  AbstractorModel model;
  model.labels = labels;
  model.registry = build_registry(feature_config, labels);
  EmOptions em = feature_config.em;
  em.seed = derive_seed(train_config.seed, feature_config.em.seed);
  model.features = fit_features(annotated, model.registry, labels, em);

  std::vector<LabeledSequence> dataset;
  for (const auto& trace : annotated.traces) {
    if (trace.events.empty()) continue;
    LabeledSequence seq;
    seq.features = extract_features(trace, model.registry, model.features);
    for (const auto& event : trace.events) {
      const auto label = *get_string(event, kLabel);
      seq.labels.push_back(
          static_cast<int>(std::find(labels.begin(), labels.end(), label) - labels.begin()));
    }
    dataset.push_back(std::move(seq));
  }
  AbstractorTraining out;
  out.crf_result = train_crf(labels, dataset, train_config);
  model.crf = out.crf_result.model;
  out.model = std::move(model);
  return out;
}

std::vector<int> predict(const AbstractorModel& model, const Trace& trace) {
  if (trace.events.empty()) return {};
  return viterbi(model.crf, extract_features(trace, model.registry, model.features));
}

EventLog annotate(const AbstractorModel& model, const EventLog& unannotated) {
  validate(model);
  EventLog out = unannotated;
  for (std::size_t t = 0; t < out.traces.size(); ++t) {
    Trace& trace = out.traces[t];
    std::vector<int> labels;
    try {
      labels = predict(model, trace);
    } catch (const Error& e) {
      throw InputError("trace " + std::to_string(t) + " (" + trace.case_id + "): " + e.what());
    }
    for (std::size_t e = 0; e < trace.events.size(); ++e) {
      trace.events[e].attributes.set(std::string(kLabel), model.labels[static_cast<std::size_t>(labels[e])]);
    }
  }
  return out;
}

Trace collapse(const Trace& labeled_trace) {
  struct Run {
    std::string label;
    Timestamp first;
    Timestamp last;
  };
  std::vector<Run> runs;
  for (std::size_t e = 0; e < labeled_trace.events.size(); ++e) {
    const Event& event = labeled_trace.events[e];
    const auto label = get_string(event, kLabel);
    if (!label) throw AttributeError("event " + std::to_string(e) + ": missing 'label' attribute");
    const auto ts = get_timestamp(event);
    if (!ts) throw AttributeError("event " + std::to_string(e) + ": missing time:timestamp");
    if (runs.empty() || runs.back().label != *label) {
      runs.push_back({*label, *ts, *ts});
    } else {
      runs.back().last = *ts;
    }
  }

  Trace out;
  out.case_id = labeled_trace.case_id;
  out.attributes = labeled_trace.attributes;
  for (const auto& run : runs) {
    for (const auto& [ts, lifecycle] : {std::pair{run.first, "start"}, std::pair{run.last, "complete"}}) {
      Event event;
      event.attributes.set(std::string(kConceptName), run.label);
      event.attributes.set(std::string(kTimestamp), ts);
      event.attributes.set(std::string(kLifecycle), std::string(lifecycle));
      out.events.push_back(std::move(event));
    }
  }
  std::stable_sort(out.events.begin(), out.events.end(), [](const Event& a, const Event& b) {
    return earlier(*get_timestamp(a), *get_timestamp(b));
  });
  return out;
}

EventLog collapse(const EventLog& labeled_log) {
  EventLog out;
  out.extensions = {standard_extension("concept"), standard_extension("time"), standard_extension("lifecycle")};
  out.global_trace_attributes = {std::string(kConceptName)};
  out.global_event_attributes = {std::string(kConceptName), std::string(kTimestamp), std::string(kLifecycle)};
  out.classifiers = {{"Activity", {std::string(kConceptName), std::string(kLifecycle)}}};
  out.attributes = labeled_log.attributes;
  for (std::size_t t = 0; t < labeled_log.traces.size(); ++t) {
    try {
      out.traces.push_back(collapse(labeled_log.traces[t]));
    } catch (const AttributeError& e) {
      throw AttributeError("trace " + std::to_string(t) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::string format_weights(const Eigen::VectorXd& weights) {
  std::string out;
  char buf[40];
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", weights[i]);
    if (i > 0) out += ' ';
    out += buf;
  }
  return out;
}

Eigen::VectorXd parse_weights(const std::string& text) {
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && text[pos] == ' ') ++pos;
    if (pos >= text.size()) break;
    std::size_t end = text.find(' ', pos);
    if (end == std::string::npos) end = text.size();
    const std::string token = text.substr(pos, end - pos);
    char* stop = nullptr;
    const double v = std::strtod(token.c_str(), &stop);
    if (stop == token.c_str() || *stop != '\0') throw ConfigError("bad CRF weight '" + token + "'");
    values.push_back(v);
    pos = end;
  }
  return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json spec_to_json(const FeatureSpec& spec) {
  return std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, NGramSpec>) {
          return {{"family", "ngram"}, {"attribute", s.attribute_key}, {"n", s.n}, {"label", s.label}};
        } else if constexpr (std::is_same_v<T, CircularTimeSpec>) {
          return {{"family", "circular_time"}, {"period", to_string(s.period)}, {"label", s.label}};
        } else {
          return {{"family", "lifecycle_duration"}, {"lifecycle", s.lifecycle_value}, {"label", s.label}};
        }
      },
      spec);
}

FeatureSpec spec_from_json(const json& j) {
  const std::string family = j.at("family").get<std::string>();
  if (family == "ngram") {
    return NGramSpec{j.at("attribute").get<std::string>(), j.at("n").get<int>(), j.at("label").get<std::string>()};
  }
  if (family == "circular_time") {
    return CircularTimeSpec{parse_period(j.at("period").get<std::string>()), j.at("label").get<std::string>()};
  }
  if (family == "lifecycle_duration") {
    return LifecycleDurationSpec{j.at("label").get<std::string>(), j.at("lifecycle").get<std::string>()};
  }
  throw ConfigError("unknown feature family '" + family + "'");
}

json fitted_to_json(const FittedFeature& fitted) {
  return std::visit(
      [](const auto& f) -> json {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, std::size_t>) {
          return {{"ngram_model", f}};
        } else if constexpr (std::is_same_v<T, VonMisesMixture>) {
          json comps = json::array();
          for (const auto& c : f.components) comps.push_back({{"weight", c.weight}, {"mean", c.mean}, {"kappa", c.kappa}});
          return {{"von_mises_mixture", comps}};
        } else {
          json comps = json::array();
          for (const auto& c : f.components) {
            comps.push_back({{"weight", c.weight}, {"mean", c.mean}, {"stddev", c.stddev}});
          }
          return {{"gaussian_mixture", comps}};
        }
      },
      fitted);
}

FittedFeature fitted_from_json(const json& j) {
  if (j.contains("ngram_model")) return j.at("ngram_model").get<std::size_t>();
  if (j.contains("von_mises_mixture")) {
    VonMisesMixture m;
    for (const auto& c : j.at("von_mises_mixture")) {
      m.components.push_back({c.at("weight").get<double>(), c.at("mean").get<double>(), c.at("kappa").get<double>()});
    }
    validate(m);
    return m;
  }
  if (j.contains("gaussian_mixture")) {
    GaussianMixture m;
    for (const auto& c : j.at("gaussian_mixture")) {
      m.components.push_back({c.at("weight").get<double>(), c.at("mean").get<double>(), c.at("stddev").get<double>()});
    }
    validate(m);
    return m;
  }
  throw ConfigError("fitted feature entry has no known model");
}

}  // namespace

std::string serialize_model(const AbstractorModel& model) {
  validate(model);
  json root;
  root["format"] = "eventabs-abstractor";
  root["format_version"] = model.format_version;
  root["labels"] = model.labels;
  json registry = json::array();
  for (const auto& spec : model.registry) registry.push_back(spec_to_json(spec));
  root["registry"] = registry;
  json ngrams = json::array();
  for (const auto& ng : model.features.ngram_models) {
    json table = json::array();
    for (const auto& [gram, probabilities] : ng.table()) table.push_back({{"gram", gram}, {"p", probabilities}});
    ngrams.push_back({{"attribute", ng.attribute_key()}, {"n", ng.n()}, {"labels", ng.labels()}, {"table", table}});
  }
  root["ngram_models"] = ngrams;
  json fitted = json::array();
  for (const auto& f : model.features.per_spec) fitted.push_back(fitted_to_json(f));
  root["fitted_features"] = fitted;
  root["crf"] = {{"observation_features", model.crf.feature_count()}, {"weights", format_weights(model.crf.weights())}};
  return root.dump(1) + "\n";
}

AbstractorModel deserialize_model(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("abstractor model is not valid JSON: ") + e.what());
  }
  try {
    if (root.value("format", "") != "eventabs-abstractor") throw ConfigError("not an abstractor model file");
    AbstractorModel model;
    model.format_version = root.at("format_version").get<int>();
    if (model.format_version != kAbstractorFormatVersion) {
      throw ConfigError("unsupported abstractor format_version " + std::to_string(model.format_version));
    }
    model.labels = root.at("labels").get<std::vector<std::string>>();
    for (const auto& spec : root.at("registry")) model.registry.push_back(spec_from_json(spec));
    for (const auto& ng : root.at("ngram_models")) {
      NGramModel m(ng.at("attribute").get<std::string>(), ng.at("n").get<int>(),
                   ng.at("labels").get<std::vector<std::string>>());
      for (const auto& row : ng.at("table")) {
        m.set_distribution(row.at("gram").get<NGram>(), row.at("p").get<std::vector<double>>());
      }
      model.features.ngram_models.push_back(std::move(m));
    }
    for (const auto& f : root.at("fitted_features")) model.features.per_spec.push_back(fitted_from_json(f));
    const auto& crf = root.at("crf");
    model.crf = CrfModel(model.labels, crf.at("observation_features").get<Eigen::Index>(),
                         parse_weights(crf.at("weights").get<std::string>()));
    validate(model);
    return model;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed abstractor model: ") + e.what());
  }
}

void save_model(const AbstractorModel& model, const std::string& path) {
  const std::string text = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
}

AbstractorModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize_model(buffer.str());
}

}  // namespace eventabs
