#include "eventabs/features.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <set>

#include "eventabs/error.hpp"
#include "eventabs/random.hpp"

namespace eventabs {
namespace {

constexpr double kTwoPi = 2.0 * M_PI;
constexpr std::int64_t kMsPerDay = 86'400'000;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

bool supported_ngram_key(std::string_view key) {
  return key == kConceptName || key == kResource || key == kRole || key == kGroup;
}

}  // namespace

std::string_view to_string(Period period) {
  switch (period) {
    case Period::kDay: return "day";
    case Period::kWeek: return "week";
    case Period::kMonth: return "month";
  }
  return "day";
}

Period parse_period(std::string_view text) {
  if (text == "day") return Period::kDay;
  if (text == "week") return Period::kWeek;
  if (text == "month") return Period::kMonth;
  throw ConfigError("unknown period '" + std::string(text) + "' (expected day, week or month)");
}

void validate(const FeatureSpec& spec) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if (s.label.empty()) throw ConfigError("feature spec with empty label");
        if constexpr (std::is_same_v<T, NGramSpec>) {
          if (!supported_ngram_key(s.attribute_key)) {
            throw ConfigError("n-gram attribute must be concept:name or org:resource/role/group, got '" +
                              s.attribute_key + "'");
          }
          if (s.n < 1) throw ConfigError("n-gram size must be >= 1");
        } else if constexpr (std::is_same_v<T, LifecycleDurationSpec>) {
          if (s.lifecycle_value.empty()) throw ConfigError("lifecycle feature with empty lifecycle value");
        }
      },
      spec);
}

std::string describe(const FeatureSpec& spec) {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, NGramSpec>) {
          return "ngram(" + s.attribute_key + ", n=" + std::to_string(s.n) + ", " + s.label + ")";
        } else if constexpr (std::is_same_v<T, CircularTimeSpec>) {
          return "time(" + std::string(to_string(s.period)) + ", " + s.label + ")";
        } else {
          return "lifecycle(" + s.lifecycle_value + ", " + s.label + ")";
        }
      },
      spec);
}

// ---------------------------------------------------------------------------

NGramModel::NGramModel(std::string attribute_key, int n, std::vector<std::string> labels)
    : attribute_key_(std::move(attribute_key)), n_(n), labels_(std::move(labels)) {
  if (n_ < 1) throw ConfigError("n-gram size must be >= 1");
  if (labels_.empty()) throw ConfigError("n-gram model needs a non-empty label alphabet");
}

std::size_t NGramModel::label_index(std::string_view label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw ConfigError("label '" + std::string(label) + "' is not in the alphabet");
  return static_cast<std::size_t>(it - labels_.begin());
}

std::vector<double> NGramModel::distribution(const NGram& history) const {
  const auto it = table_.find(history);
  if (it != table_.end()) return it->second;
  return std::vector<double>(labels_.size(), 1.0 / static_cast<double>(labels_.size()));
}

double NGramModel::probability(const NGram& history, std::size_t label_index) const {
  if (label_index >= labels_.size()) throw ConfigError("label index out of range");
  const auto it = table_.find(history);
  if (it != table_.end()) return it->second[label_index];
  return 1.0 / static_cast<double>(labels_.size());
}

void NGramModel::observe(const NGram& history, std::size_t label_index) {
  auto [it, inserted] = table_.try_emplace(history, labels_.size(), 0.0);
  it->second[label_index] += 1.0;
}

void NGramModel::finalize() {
  const double alpha_total = kNGramSmoothing * static_cast<double>(labels_.size());
  for (auto& [gram, counts] : table_) {
    double total = 0.0;
    for (double c : counts) total += c;
    for (double& c : counts) c = (c + kNGramSmoothing) / (total + alpha_total);
  }
}

void NGramModel::set_distribution(NGram history, std::vector<double> probabilities) {
  if (probabilities.size() != labels_.size()) throw ConfigError("n-gram distribution has the wrong length");
  if (static_cast<int>(history.size()) != n_) throw ConfigError("n-gram history has the wrong length");
  table_[std::move(history)] = std::move(probabilities);
}

NGram history_at(const Trace& trace, std::string_view attribute_key, int n, std::size_t position) {
  NGram gram;
  gram.reserve(static_cast<std::size_t>(n));
  for (int back = n - 1; back >= 0; --back) {
    if (position < static_cast<std::size_t>(back)) {
      gram.emplace_back(kBoundaryToken);
      continue;
    }
    const auto value = get_string(trace.events[position - static_cast<std::size_t>(back)], attribute_key);
    gram.push_back(value ? *value : std::string(kMissingToken));
  }
  return gram;
}

std::vector<std::string> label_alphabet(const EventLog& annotated) {
  std::set<std::string> labels;
  for (std::size_t t = 0; t < annotated.traces.size(); ++t) {
    const auto& trace = annotated.traces[t];
    for (std::size_t e = 0; e < trace.events.size(); ++e) {
      auto label = get_string(trace.events[e], kLabel);
      if (!label) {
        throw AttributeError("trace " + std::to_string(t) + " (" + trace.case_id + "), event " + std::to_string(e) +
                             ": missing 'label' attribute");
      }
      labels.insert(std::move(*label));
    }
  }
  return {labels.begin(), labels.end()};
}

NGramModel fit_ngram(const EventLog& annotated, std::string_view attribute_key, int n,
                     const std::vector<std::string>& labels) {
  if (annotated.event_count() == 0) throw InputError("cannot fit an n-gram model on an empty log");
  NGramModel model(std::string(attribute_key), n, labels);
  for (std::size_t t = 0; t < annotated.traces.size(); ++t) {
    const auto& trace = annotated.traces[t];
    for (std::size_t e = 0; e < trace.events.size(); ++e) {
      const auto label = get_string(trace.events[e], kLabel);
      if (!label) {
        throw AttributeError("trace " + std::to_string(t) + ", event " + std::to_string(e) +
                             ": missing 'label' attribute");
      }
      model.observe(history_at(trace, attribute_key, n, e), model.label_index(*label));
    }
  }
  model.finalize();
  return model;
}

NGramModel fit_ngram(const EventLog& annotated, std::string_view attribute_key, int n) {
  return fit_ngram(annotated, attribute_key, n, label_alphabet(annotated));
}

double ngram_feature(const NGramModel& model, const NGram& history, std::string_view label) {
  if (static_cast<int>(history.size()) != model.n()) throw ConfigError("n-gram history has the wrong length");
  return model.probability(history, model.label_index(label));
}

// ---------------------------------------------------------------------------

double timestamp_to_angle(const Timestamp& ts, Period period, std::int32_t offset_min) {
  using namespace std::chrono;
  const std::int64_t local = ts.epoch_ms + std::int64_t{offset_min} * 60'000;
  const std::int64_t day = floor_div(local, kMsPerDay);
  const std::int64_t in_day = local - day * kMsPerDay;
  double fraction = 0.0;
  switch (period) {
    case Period::kDay:
      fraction = static_cast<double>(in_day) / static_cast<double>(kMsPerDay);
      break;
    case Period::kWeek: {
      // 1970-01-01 was a Thursday; Monday is weekday 0.
      const std::int64_t weekday = ((day + 3) % 7 + 7) % 7;
      fraction = static_cast<double>(weekday * kMsPerDay + in_day) / static_cast<double>(7 * kMsPerDay);
      break;
    }
    case Period::kMonth: {
      const year_month_day ymd{sys_days{days{day}}};
      const auto first = sys_days{ymd.year() / ymd.month() / 1}.time_since_epoch().count();
      const auto ym = ymd.year() / ymd.month();
      const auto next = ym + months{1};
      const auto length = (sys_days{next / 1} - sys_days{ym / 1}).count();
      fraction = static_cast<double>((day - first) * kMsPerDay + in_day) / static_cast<double>(length * kMsPerDay);
      break;
    }
  }
  const double angle = kTwoPi * fraction;
  return angle >= kTwoPi ? 0.0 : angle;
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& preceding_lifecycle_values(std::string_view value) {
  static const std::vector<std::string> none;
  static const std::vector<std::string> start{"schedule"};
  static const std::vector<std::string> suspend{"start", "resume"};
  static const std::vector<std::string> resume{"suspend"};
  static const std::vector<std::string> complete{"resume", "start"};
  if (value == "start") return start;
  if (value == "suspend") return suspend;
  if (value == "resume") return resume;
  if (value == "complete") return complete;
  return none;
}

LifecyclePairing pair_lifecycles(const Trace& trace) {
  struct Pending {
    std::size_t index;
    Timestamp ts;
  };
  // concept name -> lifecycle value -> FIFO of unconsumed occurrences
  std::map<std::string, std::map<std::string, std::deque<Pending>, std::less<>>> queues;
  LifecyclePairing result;
  std::vector<bool> paired(trace.events.size(), false);
  std::size_t candidates = 0;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const Event& event = trace.events[i];
    const auto concept_name = get_string(event, kConceptName);
    const auto value = get_string(event, kLifecycle);
    const auto ts = get_timestamp(event);
    if (!concept_name || !value || !ts) continue;
    ++candidates;
    auto& per_value = queues[*concept_name];
    const auto& predecessors = preceding_lifecycle_values(*value);
    for (const auto& from : predecessors) {
      auto it = per_value.find(from);
      if (it == per_value.end() || it->second.empty()) continue;
      const Pending earlier_event = it->second.front();
      it->second.pop_front();
      result.pairs.push_back({*concept_name, from, *value,
                              static_cast<double>(ts->epoch_ms - earlier_event.ts.epoch_ms) / 1000.0,
                              earlier_event.index, i});
      paired[earlier_event.index] = true;
      paired[i] = true;
      break;
    }
    per_value[*value].push_back({i, *ts});
  }
  result.unmatched = candidates - static_cast<std::size_t>(std::count(paired.begin(), paired.end(), true));
  return result;
}

// ---------------------------------------------------------------------------

FeatureRegistry build_registry(const FeatureConfig& config, const std::vector<std::string>& labels) {
  FeatureRegistry registry;
  for (const auto& [key, n] : config.ngrams) {
    for (const auto& label : labels) registry.push_back(NGramSpec{key, n, label});
  }
  for (const Period period : config.periods) {
    for (const auto& label : labels) registry.push_back(CircularTimeSpec{period, label});
  }
  for (const auto& value : config.lifecycle_values) {
    for (const auto& label : labels) registry.push_back(LifecycleDurationSpec{label, value});
  }
  for (const auto& spec : registry) validate(spec);
  return registry;
}

FittedFeatures fit_features(const EventLog& annotated, const FeatureRegistry& registry,
                            const std::vector<std::string>& labels, const EmOptions& em) {
  FittedFeatures fitted;
  std::map<std::pair<std::string, int>, std::size_t> ngram_index;
  // Lifecycle pairs of the whole log are computed once.
  std::vector<LifecyclePairing> pairings;

  for (std::size_t s = 0; s < registry.size(); ++s) {
    const FeatureSpec& spec = registry[s];
    validate(spec);
    EmOptions options = em;
    options.seed = derive_seed(em.seed, s);
    if (const auto* ng = std::get_if<NGramSpec>(&spec)) {
      const auto key = std::make_pair(ng->attribute_key, ng->n);
      auto it = ngram_index.find(key);
      if (it == ngram_index.end()) {
        it = ngram_index.emplace(key, fitted.ngram_models.size()).first;
        fitted.ngram_models.push_back(fit_ngram(annotated, ng->attribute_key, ng->n, labels));
      }
      fitted.ngram_models[it->second].label_index(ng->label);
      fitted.per_spec.emplace_back(it->second);
    } else if (const auto* ct = std::get_if<CircularTimeSpec>(&spec)) {
      std::vector<double> angles;
      for (std::size_t t = 0; t < annotated.traces.size(); ++t) {
        const auto& trace = annotated.traces[t];
        for (std::size_t e = 0; e < trace.events.size(); ++e) {
          if (get_string(trace.events[e], kLabel) != ct->label) continue;
          const auto ts = get_timestamp(trace.events[e]);
          if (!ts) {
            throw AttributeError("trace " + std::to_string(t) + ", event " + std::to_string(e) +
                                 ": time feature requires time:timestamp");
          }
          angles.push_back(timestamp_to_angle(*ts, ct->period));
        }
      }
      if (angles.empty()) throw InputError("no training events labeled '" + ct->label + "'");
      fitted.per_spec.emplace_back(fit_vmmm_detailed(angles, options).model);
    } else {
      const auto& lc = std::get<LifecycleDurationSpec>(spec);
      if (pairings.empty()) {
        for (const auto& trace : annotated.traces) pairings.push_back(pair_lifecycles(trace));
      }
      std::vector<double> durations;
      for (std::size_t t = 0; t < annotated.traces.size(); ++t) {
        for (const auto& pair : pairings[t].pairs) {
          if (pair.from_value != lc.lifecycle_value) continue;
          if (get_string(annotated.traces[t].events[pair.event_index], kLabel) != lc.label) continue;
          durations.push_back(pair.duration);
        }
      }
      fitted.per_spec.emplace_back(durations.empty() ? GaussianMixture{} : fit_gmm_detailed(durations, options).model);
    }
  }
  return fitted;
}

FeatureMatrix extract_features(const Trace& trace, const FeatureRegistry& registry, const FittedFeatures& fitted) {
  if (registry.size() != fitted.per_spec.size()) {
    throw ConfigError("feature registry has " + std::to_string(registry.size()) + " entries but " +
                      std::to_string(fitted.per_spec.size()) + " fitted models");
  }
  const auto rows = static_cast<Eigen::Index>(trace.events.size());
  FeatureMatrix features = FeatureMatrix::Zero(rows, static_cast<Eigen::Index>(registry.size()));
  std::optional<LifecyclePairing> pairing;

  for (std::size_t s = 0; s < registry.size(); ++s) {
    const auto col = static_cast<Eigen::Index>(s);
    const FeatureSpec& spec = registry[s];
    const FittedFeature& model = fitted.per_spec[s];
    if (const auto* ng = std::get_if<NGramSpec>(&spec)) {
      const auto* index = std::get_if<std::size_t>(&model);
      if (index == nullptr || *index >= fitted.ngram_models.size()) {
        throw ConfigError("registry entry " + std::to_string(s) + " (" + describe(spec) + ") lacks an n-gram model");
      }
      const NGramModel& ngram = fitted.ngram_models[*index];
      if (ngram.attribute_key() != ng->attribute_key || ngram.n() != ng->n) {
        throw ConfigError("registry entry " + std::to_string(s) + " does not match its n-gram model");
      }
      const std::size_t label = ngram.label_index(ng->label);
      for (Eigen::Index e = 0; e < rows; ++e) {
        features(e, col) = ngram.probability(history_at(trace, ng->attribute_key, ng->n, static_cast<std::size_t>(e)),
                                             label);
      }
    } else if (const auto* ct = std::get_if<CircularTimeSpec>(&spec)) {
      const auto* vm = std::get_if<VonMisesMixture>(&model);
      if (vm == nullptr) {
        throw ConfigError("registry entry " + std::to_string(s) + " (" + describe(spec) + ") lacks a von Mises model");
      }
      for (Eigen::Index e = 0; e < rows; ++e) {
        const auto ts = get_timestamp(trace.events[static_cast<std::size_t>(e)]);
        if (!ts) throw AttributeError("event " + std::to_string(e) + ": time feature requires time:timestamp");
        features(e, col) = density(*vm, timestamp_to_angle(*ts, ct->period));
      }
    } else {
      const auto& lc = std::get<LifecycleDurationSpec>(spec);
      const auto* gmm = std::get_if<GaussianMixture>(&model);
      if (gmm == nullptr) {
        throw ConfigError("registry entry " + std::to_string(s) + " (" + describe(spec) + ") lacks a Gaussian model");
      }
      if (!pairing) pairing = pair_lifecycles(trace);
      for (const auto& pair : pairing->pairs) {
        if (pair.from_value != lc.lifecycle_value) continue;
        features(static_cast<Eigen::Index>(pair.event_index), col) = density(*gmm, pair.duration);
      }
    }
  }
  if (!features.allFinite()) throw NumericError("non-finite feature value in trace '" + trace.case_id + "'");
  return features;
}

}  // namespace eventabs
