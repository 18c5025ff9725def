#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "eventabs/crf.hpp"
#include "eventabs/features.hpp"
#include "eventabs/xes.hpp"

namespace eventabs {

inline constexpr int kAbstractorFormatVersion = 1;

/// Everything needed to label unannotated traces: the feature registry, its
/// fitted models and the CRF trained on top of them.
struct AbstractorModel {
  int format_version = kAbstractorFormatVersion;
  std::vector<std::string> labels;
  FeatureRegistry registry;
  FittedFeatures features;
  CrfModel crf;

  bool operator==(const AbstractorModel&) const = default;
};

/// Throws ConfigError when registry, fitted models and CRF disagree.
void validate(const AbstractorModel& model);

struct AbstractorTraining {
  AbstractorModel model;
  TrainResult crf_result;
};

AbstractorTraining train_abstractor(const EventLog& annotated, const FeatureConfig& feature_config,
                                    const TrainConfig& train_config);

/// Label indices predicted for one trace.
std::vector<int> predict(const AbstractorModel& model, const Trace& trace);

/// Copy of `unannotated` where every event's "label" is the Viterbi prediction.
EventLog annotate(const AbstractorModel& model, const EventLog& unannotated);

/// Replaces every maximal run of equal labels with a start and a complete
/// event named after the label.
Trace collapse(const Trace& labeled_trace);
EventLog collapse(const EventLog& labeled_log);

std::string serialize_model(const AbstractorModel& model);
AbstractorModel deserialize_model(std::string_view text);
void save_model(const AbstractorModel& model, const std::string& path);
AbstractorModel load_model(const std::string& path);

}  // namespace eventabs
