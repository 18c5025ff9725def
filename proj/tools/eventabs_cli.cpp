// eventabs: ingest, generate, train, abstract and evaluate from the shell.
#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "eventabs/abstraction.hpp"
#include "eventabs/error.hpp"
#include "eventabs/evaluation.hpp"
#include "eventabs/ingestion.hpp"
#include "eventabs/petri.hpp"
#include "eventabs/timestamp.hpp"
#include "eventabs/xes.hpp"

namespace {

using namespace eventabs;

struct GlobalOptions {
  std::uint64_t seed = 0;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
};

struct FeatureFlags {
  std::vector<std::string> ngrams;
  std::vector<std::string> periods;
  std::vector<std::string> lifecycle_values;
  int max_components = 8;
};

struct TrainingFlags {
  double l1 = 0.1;
  int max_iterations = 1000;
  double tolerance = 1e-6;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text;
  if (!out) throw InputError("write to '" + path + "' failed");
}

void add_feature_flags(CLI::App* cmd, FeatureFlags& flags) {
  cmd->add_option("--ngram", flags.ngrams, "n-gram family as key:n, e.g. concept:name:2 (repeatable)");
  cmd->add_option("--time", flags.periods, "circular time family: day, week or month (repeatable)");
  cmd->add_option("--lifecycle", flags.lifecycle_values, "lifecycle duration family for this value (repeatable)");
  cmd->add_option("--max-components", flags.max_components, "largest mixture size tried by BIC")
      ->check(CLI::Range(1, 64));
}

void add_training_flags(CLI::App* cmd, TrainingFlags& flags) {
  cmd->add_option("--l1", flags.l1, "L1 regularization strength")->check(CLI::NonNegativeNumber);
  cmd->add_option("--max-iter", flags.max_iterations, "optimizer iteration cap")->check(CLI::PositiveNumber);
  cmd->add_option("--tol", flags.tolerance, "relative objective change at which training stops")
      ->check(CLI::PositiveNumber);
}

// Splits at the last colon so keys such as concept:name survive.
std::pair<std::string, int> parse_ngram_flag(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0) throw ConfigError("--ngram expects key:n, got '" + text + "'");
  const std::string n_text = text.substr(colon + 1);
  int n = 0;
  try {
    std::size_t used = 0;
    n = std::stoi(n_text, &used);
    if (used != n_text.size()) throw std::invalid_argument(n_text);
  } catch (const std::exception&) {
    throw ConfigError("--ngram order must be an integer, got '" + n_text + "'");
  }
  if (n < 1) throw ConfigError("--ngram order must be >= 1");
  return {text.substr(0, colon), n};
}

FeatureConfig to_feature_config(const FeatureFlags& flags, std::uint64_t seed) {
  FeatureConfig config;
  for (const auto& g : flags.ngrams) config.ngrams.push_back(parse_ngram_flag(g));
  for (const auto& p : flags.periods) config.periods.push_back(parse_period(p));
  config.lifecycle_values = flags.lifecycle_values;
  if (config.empty()) {
    config.ngrams = {{std::string(kConceptName), 2}};
    config.periods = {Period::kDay};
  }
  config.em.max_components = flags.max_components;
  config.em.seed = seed;
  return config;
}

TrainConfig to_train_config(const TrainingFlags& flags, std::uint64_t seed) {
  TrainConfig config;
  config.l1_strength = flags.l1;
  config.max_iterations = flags.max_iterations;
  config.tolerance = flags.tolerance;
  config.seed = seed;
  return config;
}

void require_labels(const EventLog& log) {
  for (const auto& trace : log.traces) {
    for (std::size_t i = 0; i < trace.events.size(); ++i) {
      if (!get_string(trace.events[i], kLabel)) {
        throw AttributeError("trace '" + trace.case_id + "' event " + std::to_string(i) +
                             " has no string 'label' attribute");
      }
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Supervised event abstraction for sensor event logs"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML file mirroring the command-line flags");

  GlobalOptions global;
  app.add_option("--seed", global.seed, "seed for every random choice")->capture_default_str();
  app.add_option("--threads", global.threads, "worker threads")->check(CLI::PositiveNumber);

  // ingest
  std::string ingest_in, ingest_out, timezone = "+00:00", boundary = "00:00", labels_path;
  auto* ingest = app.add_subcommand("ingest", "convert a sensor CSV into a sensor-level XES log");
  ingest->add_option("csv", ingest_in, "CSV with header timestamp,sensor_id,state")->required();
  ingest->add_option("output", ingest_out, "XES file to write")->required();
  ingest->add_option("--timezone", timezone, "offset for timestamps without one, e.g. +01:00");
  ingest->add_option("--boundary", boundary, "local time at which a new case starts (hh:mm)");
  ingest->add_option("--labels", labels_path, "annotation CSV start,end,label");

  // generate
  std::string generate_out;
  std::size_t n_traces = 30;
  StopPolicy stop;
  auto* generate = app.add_subcommand("generate", "simulate the built-in two-level smart-home model");
  generate->add_option("output", generate_out, "XES file to write")->required();
  generate->add_option("-n,--traces", n_traces, "number of traces")->check(CLI::PositiveNumber);
  generate->add_option("--stop-probability", stop.final_marking_stop_probability,
                       "chance of stopping at a top-level final marking")
      ->check(CLI::Range(0.0, 1.0));
  generate->add_option("--max-steps", stop.max_steps, "firings per trace before it is resampled")
      ->check(CLI::PositiveNumber);

  // train
  std::string train_in, train_out;
  FeatureFlags train_features;
  TrainingFlags train_flags;
  auto* train = app.add_subcommand("train", "fit an abstractor on an annotated log");
  train->add_option("log", train_in, "annotated XES log")->required();
  train->add_option("model", train_out, "model file to write")->required();
  add_feature_flags(train, train_features);
  add_training_flags(train, train_flags);

  // abstract
  std::string abstract_model, abstract_in, abstract_out;
  auto* abstract = app.add_subcommand("abstract", "label a sensor log and collapse it to activity level");
  abstract->add_option("model", abstract_model, "model file from train")->required();
  abstract->add_option("log", abstract_in, "sensor-level XES log")->required();
  abstract->add_option("output", abstract_out, "activity-level XES file to write")->required();

  // evaluate
  std::string evaluate_in, evaluate_out;
  FeatureFlags evaluate_features;
  TrainingFlags evaluate_flags;
  auto* evaluate = app.add_subcommand("evaluate", "leave-one-trace-out cross-validation");
  evaluate->add_option("log", evaluate_in, "annotated XES log")->required();
  evaluate->add_option("report", evaluate_out, "JSON report to write")->required();
  add_feature_flags(evaluate, evaluate_features);
  add_training_flags(evaluate, evaluate_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e, std::cerr, std::cerr);
    return 2;
  }

  try {
    if (*ingest) {
      const auto offset = parse_utc_offset(timezone);
      if (!offset) throw ConfigError("--timezone expects +hh:mm or -hh:mm, got '" + timezone + "'");
      const auto readings = parse_readings_csv(read_text(ingest_in), *offset);
      EventLog log = segment_cases(readings_to_events(readings), {parse_boundary(boundary), *offset});
      if (!labels_path.empty()) {
        apply_label_intervals(log, parse_label_intervals_csv(read_text(labels_path), *offset));
      }
      write_xes_file(log, ingest_out);
      std::cout << "traces: " << log.traces.size() << "\nevents: " << log.event_count() << "\n";
    } else if (*generate) {
      const EventLog log = simulate(motivating_example(), n_traces, global.seed, stop);
      write_xes_file(log, generate_out);
      std::cout << "traces: " << log.traces.size() << "\nevents: " << log.event_count() << "\n";
    } else if (*train) {
      const EventLog log = read_xes_file(train_in);
      require_labels(log);
      const auto result = train_abstractor(log, to_feature_config(train_features, global.seed),
                                           to_train_config(train_flags, global.seed));
      save_model(result.model, train_out);
      std::cout << "labels:";
      for (const auto& l : result.model.labels) std::cout << ' ' << l;
      std::cout << "\nfeatures: " << result.model.registry.size()
                << "\nnonzero weights: " << result.crf_result.nonzero_weights << "\nobjective: "
                << result.crf_result.objective << "\niterations: " << result.crf_result.iterations
                << (result.crf_result.converged ? "" : " (not converged)") << "\n";
    } else if (*abstract) {
      const AbstractorModel model = load_model(abstract_model);
      const EventLog abstracted = collapse(annotate(model, read_xes_file(abstract_in)));
      write_xes_file(abstracted, abstract_out);
      std::cout << "traces: " << abstracted.traces.size() << "\nevents: " << abstracted.event_count() << "\n";
    } else if (*evaluate) {
      const EventLog log = read_xes_file(evaluate_in);
      require_labels(log);
      const auto report = loto_cv(log, to_feature_config(evaluate_features, global.seed),
                                  to_train_config(evaluate_flags, global.seed), global.threads);
      write_text(evaluate_out, report_to_json(report));
      std::cout << report_summary(report);
    }
  } catch (const InputError& e) {
    std::cerr << "eventabs: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "eventabs: internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
