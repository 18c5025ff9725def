#include "eventabs/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <json.hpp>
#include <mutex>
#include <thread>

#include "eventabs/error.hpp"
#include "eventabs/random.hpp"

namespace eventabs {

std::size_t damerau_levenshtein(const LabelSequence& a, const LabelSequence& b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  std::vector<std::vector<std::size_t>> d(n + 1, std::vector<std::size_t>(m + 1));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + cost});
      if (i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1]) {
        d[i][j] = std::min(d[i][j], d[i - 2][j - 2] + 1);
      }
    }
  }
  return d[n][m];
}

double dls(const LabelSequence& a, const LabelSequence& b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(damerau_levenshtein(a, b)) / static_cast<double>(longest);
}

LabelSequence event_label_sequence(const Trace& trace) {
  LabelSequence labels;
  labels.reserve(trace.events.size());
  for (std::size_t e = 0; e < trace.events.size(); ++e) {
    auto label = get_string(trace.events[e], kLabel);
    if (!label) throw AttributeError("event " + std::to_string(e) + ": missing 'label' attribute");
    labels.push_back(std::move(*label));
  }
  return labels;
}

LabelSequence ground_truth_sequence(const Trace& trace) {
  LabelSequence runs;
  for (auto& label : event_label_sequence(trace)) {
    if (runs.empty() || runs.back() != label) runs.push_back(std::move(label));
  }
  return runs;
}

AnnotatorTrainer crf_trainer(FeatureConfig feature_config, TrainConfig train_config) {
  return [feature_config = std::move(feature_config), train_config](const EventLog& training,
                                                                     std::uint64_t seed) -> Annotator {
    TrainConfig config = train_config;
    config.seed = seed;
    auto model = std::make_shared<AbstractorModel>(train_abstractor(training, feature_config, config).model);
    return [model](const EventLog& log) { return annotate(*model, log); };
  };
}

EvaluationReport loto_cv(const EventLog& annotated, const AnnotatorTrainer& trainer, std::uint64_t seed,
                         unsigned threads) {
  const std::size_t n = annotated.traces.size();
  if (n < 2) throw InputError("leave-one-trace-out needs at least 2 traces, got " + std::to_string(n));
  for (const auto& trace : annotated.traces) event_label_sequence(trace);

  std::vector<FoldReport> folds(n);
  std::vector<LabelSequence> predicted_events(n);
  std::vector<std::exception_ptr> errors(n);

  auto run_fold = [&](std::size_t i) {
    EventLog training = annotated;
    training.traces.erase(training.traces.begin() + static_cast<std::ptrdiff_t>(i));
    EventLog held_out = annotated;
    held_out.traces = {annotated.traces[i]};
    held_out.global_event_attributes.erase(std::string(kLabel));
    for (auto& event : held_out.traces[0].events) event.attributes.erase(kLabel);

    const Annotator annotator = trainer(training, derive_seed(seed, i));
    const EventLog predicted = annotator(held_out);
    if (predicted.traces.size() != 1 || predicted.traces[0].events.size() != annotated.traces[i].events.size()) {
      throw Error("annotator changed the structure of held-out trace " + std::to_string(i));
    }
    FoldReport& fold = folds[i];
    fold.held_out_case_id = annotated.traces[i].case_id;
    fold.ground_truth_sequence = ground_truth_sequence(annotated.traces[i]);
    fold.predicted_sequence = ground_truth_sequence(predicted.traces[0]);
    fold.dls = dls(fold.predicted_sequence, fold.ground_truth_sequence);
    predicted_events[i] = event_label_sequence(predicted.traces[0]);
    fold.event_dls = dls(predicted_events[i], event_label_sequence(annotated.traces[i]));
    fold.event_count = annotated.traces[i].events.size();
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) run_fold(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            run_fold(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  EvaluationReport report;
  report.folds = std::move(folds);
  double total = 0.0;
  double total_events = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total += report.folds[i].dls;
    total_events += report.folds[i].event_dls;
    const LabelSequence gold = event_label_sequence(annotated.traces[i]);
    for (std::size_t e = 0; e < gold.size(); ++e) ++report.confusion[{gold[e], predicted_events[i][e]}];
  }
  report.mean_dls = total / static_cast<double>(n);
  report.mean_event_dls = total_events / static_cast<double>(n);
  return report;
}

EvaluationReport loto_cv(const EventLog& annotated, const FeatureConfig& feature_config,
                         const TrainConfig& train_config, unsigned threads) {
  return loto_cv(annotated, crf_trainer(feature_config, train_config), train_config.seed, threads);
}

std::string report_to_json(const EvaluationReport& report) {
  nlohmann::json root;
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : report.folds) {
    folds.push_back({{"case_id", f.held_out_case_id},
                     {"dls", f.dls},
                     {"event_dls", f.event_dls},
                     {"predicted_length", f.predicted_sequence.size()},
                     {"ground_truth_length", f.ground_truth_sequence.size()},
                     {"event_count", f.event_count},
                     {"predicted", f.predicted_sequence},
                     {"ground_truth", f.ground_truth_sequence}});
  }
  root["folds"] = folds;
  root["mean_dls"] = report.mean_dls;
  root["mean_event_dls"] = report.mean_event_dls;
  nlohmann::json confusion = nlohmann::json::array();
  for (const auto& [key, count] : report.confusion) {
    confusion.push_back({{"ground_truth", key.first}, {"predicted", key.second}, {"events", count}});
  }
  root["confusion"] = confusion;
  return root.dump(1) + "\n";
}

std::string report_summary(const EvaluationReport& report) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-24s %8s %10s %10s\n", "case", "dls", "pred_len", "truth_len");
  out += line;
  for (const auto& f : report.folds) {
    std::snprintf(line, sizeof line, "%-24s %8.4f %10zu %10zu\n", f.held_out_case_id.c_str(), f.dls,
                  f.predicted_sequence.size(), f.ground_truth_sequence.size());
    out += line;
  }
  std::snprintf(line, sizeof line, "folds: %zu  mean DLS: %.4f  mean per-event DLS: %.4f\n", report.folds.size(),
                report.mean_dls, report.mean_event_dls);
  out += line;
  return out;
}

}  // namespace eventabs
