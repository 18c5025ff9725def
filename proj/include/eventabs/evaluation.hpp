#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "eventabs/abstraction.hpp"
#include "eventabs/xes.hpp"

namespace eventabs {

using LabelSequence = std::vector<std::string>;

/// Optimal-string-alignment distance: insertions, deletions, substitutions and
/// adjacent transpositions, no substring edited twice.
std::size_t damerau_levenshtein(const LabelSequence& a, const LabelSequence& b);

/// 1 - d / max(|a|, |b|); 1 when both are empty.
double dls(const LabelSequence& a, const LabelSequence& b);

/// One symbol per maximal run of equal labels.
LabelSequence ground_truth_sequence(const Trace& trace);

/// Per-event label sequence, no run-length encoding.
LabelSequence event_label_sequence(const Trace& trace);

struct FoldReport {
  std::string held_out_case_id;
  double dls = 0.0;
  double event_dls = 0.0;  ///< DLS on raw per-event label sequences (diagnostic)
  LabelSequence predicted_sequence;
  LabelSequence ground_truth_sequence;
  std::size_t event_count = 0;
};

struct EvaluationReport {
  std::vector<FoldReport> folds;
  double mean_dls = 0.0;
  double mean_event_dls = 0.0;
  /// (ground truth label, predicted label) -> number of events
  std::map<std::pair<std::string, std::string>, std::size_t> confusion;
};

/// Labels the events of a log whose labels have been removed.
using Annotator = std::function<EventLog(const EventLog& unannotated)>;
/// Trains an annotator on the given training log with the given seed.
using AnnotatorTrainer = std::function<Annotator(const EventLog& training, std::uint64_t seed)>;

/// The supervised abstractor as an AnnotatorTrainer.
AnnotatorTrainer crf_trainer(FeatureConfig feature_config, TrainConfig train_config);

/// Leave-one-trace-out cross-validation. Fold i trains on every other trace
/// with seed derive_seed(seed, i) and annotates trace i with its labels
/// stripped. Folds run on up to `threads` workers; results are in trace order.
EvaluationReport loto_cv(const EventLog& annotated, const AnnotatorTrainer& trainer, std::uint64_t seed,
                         unsigned threads = 1);
EvaluationReport loto_cv(const EventLog& annotated, const FeatureConfig& feature_config,
                         const TrainConfig& train_config, unsigned threads = 1);

/// JSON document with per-fold rows and the summary.
std::string report_to_json(const EvaluationReport& report);
/// Fixed-width text table for terminals.
std::string report_summary(const EvaluationReport& report);

}  // namespace eventabs
