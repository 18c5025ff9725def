#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "eventabs/mixture.hpp"
#include "eventabs/timestamp.hpp"
#include "eventabs/xes.hpp"

namespace eventabs {

// ---------------------------------------------------------------------------
// Feature families

enum class Period { kDay, kWeek, kMonth };

std::string_view to_string(Period period);
Period parse_period(std::string_view text);

/// Categorical label distribution given the last n values of an event attribute.
struct NGramSpec {
  std::string attribute_key;
  int n = 1;
  std::string label;

  bool operator==(const NGramSpec&) const = default;
};

/// Von Mises mixture density of the event's position within a day/week/month.
struct CircularTimeSpec {
  Period period = Period::kDay;
  std::string label;

  bool operator==(const CircularTimeSpec&) const = default;
};

/// Gaussian mixture density of the time since the paired `lifecycle_value` event.
struct LifecycleDurationSpec {
  std::string label;
  std::string lifecycle_value;

  bool operator==(const LifecycleDurationSpec&) const = default;
};

using FeatureSpec = std::variant<NGramSpec, CircularTimeSpec, LifecycleDurationSpec>;
using FeatureRegistry = std::vector<FeatureSpec>;

/// Throws ConfigError for an unsupported attribute key, n < 1, or an empty label.
void validate(const FeatureSpec& spec);
std::string describe(const FeatureSpec& spec);

// ---------------------------------------------------------------------------
// N-gram models

inline constexpr std::string_view kBoundaryToken = "<s>";
inline constexpr std::string_view kMissingToken = "<missing>";
inline constexpr double kNGramSmoothing = 0.01;

using NGram = std::vector<std::string>;

class NGramModel {
 public:
  NGramModel() = default;
  NGramModel(std::string attribute_key, int n, std::vector<std::string> labels);

  const std::string& attribute_key() const noexcept { return attribute_key_; }
  int n() const noexcept { return n_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::map<NGram, std::vector<double>>& table() const noexcept { return table_; }

  /// Smoothed distribution over labels, or uniform for an unseen n-gram.
  std::vector<double> distribution(const NGram& history) const;
  double probability(const NGram& history, std::size_t label_index) const;
  std::size_t label_index(std::string_view label) const;

  /// Adds one observation of `label` after `history` to the raw counts.
  void observe(const NGram& history, std::size_t label_index);
  /// Turns raw counts into add-alpha smoothed distributions.
  void finalize();

  /// Installs a stored distribution verbatim (deserialization).
  void set_distribution(NGram history, std::vector<double> probabilities);

  bool operator==(const NGramModel&) const = default;

 private:
  std::string attribute_key_;
  int n_ = 1;
  std::vector<std::string> labels_;
  std::map<NGram, std::vector<double>> table_;
};

/// Attribute values of events position-n+1 .. position, left-padded with the
/// boundary token; events lacking the attribute contribute the missing token.
NGram history_at(const Trace& trace, std::string_view attribute_key, int n, std::size_t position);

/// Label alphabet of an annotated log, sorted.
std::vector<std::string> label_alphabet(const EventLog& annotated);

NGramModel fit_ngram(const EventLog& annotated, std::string_view attribute_key, int n,
                     const std::vector<std::string>& labels);
NGramModel fit_ngram(const EventLog& annotated, std::string_view attribute_key, int n);

double ngram_feature(const NGramModel& model, const NGram& history, std::string_view label);

// ---------------------------------------------------------------------------
// Time

/// 2pi times the elapsed fraction of the enclosing local day, week (from Monday)
/// or calendar month.
double timestamp_to_angle(const Timestamp& ts, Period period, std::int32_t offset_min);
inline double timestamp_to_angle(const Timestamp& ts, Period period) {
  return timestamp_to_angle(ts, period, ts.offset_min);
}

// ---------------------------------------------------------------------------
// Lifecycle pairing

struct LifecyclePair {
  std::string concept_name;
  std::string from_value;
  std::string to_value;
  double duration = 0.0;      ///< seconds
  std::size_t from_index = 0;
  std::size_t event_index = 0;  ///< the later event

  bool operator==(const LifecyclePair&) const = default;
};

struct LifecyclePairing {
  std::vector<LifecyclePair> pairs;
  std::size_t unmatched = 0;  ///< lifecycle events that ended up in no pair
};

/// Lifecycle values that may directly precede `value`, in preference order.
const std::vector<std::string>& preceding_lifecycle_values(std::string_view value);

/// FIFO pairing of consecutive lifecycle steps per concept name.
LifecyclePairing pair_lifecycles(const Trace& trace);

// ---------------------------------------------------------------------------
// Registry fitting and extraction

struct FeatureConfig {
  std::vector<std::pair<std::string, int>> ngrams;  ///< (attribute key, n)
  std::vector<Period> periods;
  std::vector<std::string> lifecycle_values;
  EmOptions em;

  bool empty() const noexcept { return ngrams.empty() && periods.empty() && lifecycle_values.empty(); }
};

/// One spec per (family, label), families in config order, labels in alphabet order.
FeatureRegistry build_registry(const FeatureConfig& config, const std::vector<std::string>& labels);

/// The fitted model behind one registry entry. N-gram entries refer into
/// FittedFeatures::ngram_models, which is shared between labels.
using FittedFeature = std::variant<std::size_t, VonMisesMixture, GaussianMixture>;

struct FittedFeatures {
  std::vector<NGramModel> ngram_models;
  std::vector<FittedFeature> per_spec;

  bool operator==(const FittedFeatures&) const = default;
};

FittedFeatures fit_features(const EventLog& annotated, const FeatureRegistry& registry,
                            const std::vector<std::string>& labels, const EmOptions& em);

/// Rows are events, columns follow the registry.
using FeatureMatrix = Eigen::MatrixXd;
using FeatureVector = Eigen::VectorXd;

FeatureMatrix extract_features(const Trace& trace, const FeatureRegistry& registry, const FittedFeatures& fitted);

}  // namespace eventabs
