#include "eventabs/petri.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <set>

#include "eventabs/error.hpp"
#include "eventabs/random.hpp"

namespace eventabs {

Eigen::Index LabeledPetriNet::add_place(std::string name) {
  places_.push_back(std::move(name));
  const Eigen::Index p = place_count();
  pre_.conservativeResize(p, transition_count());
  post_.conservativeResize(p, transition_count());
  pre_.row(p - 1).setZero();
  post_.row(p - 1).setZero();
  return p - 1;
}

Eigen::Index LabeledPetriNet::add_transition(std::string name, std::optional<std::string> label) {
  transitions_.push_back({std::move(name), std::move(label)});
  const Eigen::Index t = transition_count();
  pre_.conservativeResize(place_count(), t);
  post_.conservativeResize(place_count(), t);
  pre_.col(t - 1).setZero();
  post_.col(t - 1).setZero();
  return t - 1;
}

void LabeledPetriNet::add_input_arc(Eigen::Index place, Eigen::Index transition) {
  if (place < 0 || place >= place_count() || transition < 0 || transition >= transition_count()) {
    throw ValidationError("arc endpoint does not exist");
  }
  pre_(place, transition) = 1;
}

void LabeledPetriNet::add_output_arc(Eigen::Index transition, Eigen::Index place) {
  if (place < 0 || place >= place_count() || transition < 0 || transition >= transition_count()) {
    throw ValidationError("arc endpoint does not exist");
  }
  post_(place, transition) = 1;
}

Eigen::Index LabeledPetriNet::place_index(const std::string& name) const {
  const auto it = std::find(places_.begin(), places_.end(), name);
  if (it == places_.end()) throw ValidationError("unknown place '" + name + "'");
  return it - places_.begin();
}

Eigen::Index LabeledPetriNet::transition_index(const std::string& name) const {
  const auto it = std::find_if(transitions_.begin(), transitions_.end(),
                               [&](const Transition& t) { return t.name == name; });
  if (it == transitions_.end()) throw ValidationError("unknown transition '" + name + "'");
  return it - transitions_.begin();
}

Marking LabeledPetriNet::marking_of(const std::vector<std::string>& place_names) const {
  Marking m = Marking::empty(place_count());
  for (const auto& name : place_names) m.tokens[place_index(name)] += 1;
  return m;
}

std::vector<std::string> LabeledPetriNet::labels() const {
  std::set<std::string> r;
  for (const auto& t : transitions_) {
    if (t.label) r.insert(*t.label);
  }
  return {r.begin(), r.end()};
}

bool LabeledPetriNet::is_final(const Marking& m) const {
  return std::find(finals_.begin(), finals_.end(), m) != finals_.end();
}

void LabeledPetriNet::validate() const {
  std::set<std::string> names(places_.begin(), places_.end());
  if (names.size() != places_.size()) throw ValidationError("duplicate place name");
  for (const auto& t : transitions_) {
    if (!names.insert(t.name).second) throw ValidationError("place and transition names must be disjoint");
  }
  auto check = [&](const Marking& m, const char* what) {
    if (m.tokens.size() != place_count()) throw ValidationError(std::string(what) + " does not cover every place");
    if ((m.tokens.array() < 0).any()) throw ValidationError(std::string(what) + " has a negative count");
  };
  check(initial_, "initial marking");
  for (const auto& f : finals_) check(f, "final marking");
}

bool is_enabled(const LabeledPetriNet& net, const Marking& marking, Eigen::Index transition) {
  return (marking.tokens.array() >= net.pre().col(transition).array()).all();
}

std::vector<Eigen::Index> enabled(const LabeledPetriNet& net, const Marking& marking) {
  std::vector<Eigen::Index> out;
  for (Eigen::Index t = 0; t < net.transition_count(); ++t) {
    if (is_enabled(net, marking, t)) out.push_back(t);
  }
  return out;
}

Marking fire(const LabeledPetriNet& net, const Marking& marking, Eigen::Index transition) {
  if (transition < 0 || transition >= net.transition_count()) throw InputError("no such transition");
  if (!is_enabled(net, marking, transition)) {
    throw InputError("transition '" + net.transition_name(transition) + "' is not enabled");
  }
  return Marking(marking.tokens - net.pre().col(transition) + net.post().col(transition));
}

bool final_marking_reachable(const LabeledPetriNet& net, int max_depth) {
  struct Less {
    bool operator()(const Eigen::VectorXi& a, const Eigen::VectorXi& b) const {
      return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
    }
  };
  std::set<Eigen::VectorXi, Less> seen{net.initial_marking().tokens};
  std::deque<std::pair<Marking, int>> queue{{net.initial_marking(), 0}};
  while (!queue.empty()) {
    auto [m, depth] = queue.front();
    queue.pop_front();
    if (net.is_final(m)) return true;
    if (depth >= max_depth) continue;
    for (const Eigen::Index t : enabled(net, m)) {
      Marking next = fire(net, m, t);
      if (seen.insert(next.tokens).second) queue.emplace_back(std::move(next), depth + 1);
    }
  }
  return false;
}

std::vector<std::vector<std::string>> playouts(const LabeledPetriNet& net, int max_firings) {
  std::set<std::vector<std::string>> found;
  std::vector<std::string> visible;
  std::function<void(const Marking&, int)> walk = [&](const Marking& m, int depth) {
    if (net.is_final(m)) found.insert(visible);
    if (depth == max_firings) return;
    for (const Eigen::Index t : enabled(net, m)) {
      if (!net.is_silent(t)) visible.push_back(*net.label(t));
      walk(fire(net, m, t), depth + 1);
      if (!net.is_silent(t)) visible.pop_back();
    }
  };
  walk(net.initial_marking(), 0);
  return {found.begin(), found.end()};
}

void HierarchicalModel::validate() const {
  top_level.validate();
  for (Eigen::Index t = 0; t < top_level.transition_count(); ++t) {
    if (top_level.is_silent(t)) continue;
    const auto it = sub_models.find(*top_level.label(t));
    if (it == sub_models.end()) throw ValidationError("no sub-model for activity '" + *top_level.label(t) + "'");
  }
  for (const auto& [name, net] : sub_models) {
    net.validate();
    if (!final_marking_reachable(net)) throw ValidationError("sub-model '" + name + "' cannot reach a final marking");
  }
}

namespace {

struct TraceBuilder {
  const HierarchicalModel& model;
  const StopPolicy& policy;
  Rng& rng;
  Trace trace;
  Timestamp clock;
  int steps = 0;

  // Returns false when the step budget ran out.
  bool run_sub_model(const std::string& activity) {
    const LabeledPetriNet& net = model.sub_models.at(activity);
    Marking m = net.initial_marking();
    while (true) {
      const auto choices = enabled(net, m);
      if (net.is_final(m) && (choices.empty() || rng.uniform() < policy.sub_model_stop_probability)) return true;
      if (choices.empty()) throw SimulationError("sub-model '" + activity + "' deadlocked before a final marking");
      if (++steps > policy.max_steps) return false;
      const Eigen::Index t = choices[rng.index(choices.size())];
      m = fire(net, m, t);
      if (net.is_silent(t)) continue;
      clock = clock.plus_seconds(static_cast<double>(rng.integer(30, 300)));
      Event event;
      event.attributes.set(std::string(kConceptName), *net.label(t));
      event.attributes.set(std::string(kTimestamp), clock);
      event.attributes.set(std::string(kLabel), activity);
      trace.events.push_back(std::move(event));
    }
  }

  bool run_top_level() {
    const LabeledPetriNet& net = model.top_level;
    Marking m = net.initial_marking();
    while (true) {
      const auto choices = enabled(net, m);
      if (net.is_final(m) && (choices.empty() || rng.uniform() < policy.final_marking_stop_probability)) return true;
      if (choices.empty()) throw SimulationError("top-level model deadlocked before a final marking");
      if (++steps > policy.max_steps) return false;
      const Eigen::Index t = choices[rng.index(choices.size())];
      m = fire(net, m, t);
      if (!net.is_silent(t) && !run_sub_model(*net.label(t))) return false;
    }
  }
};

}  // namespace

EventLog simulate(const HierarchicalModel& model, std::size_t n_traces, std::uint64_t seed, const StopPolicy& policy) {
  if (n_traces < 1) throw ConfigError("n_traces must be >= 1");
  if (policy.max_steps < 1) throw ConfigError("max_steps must be >= 1");
  model.validate();

  EventLog log;
  log.extensions = {standard_extension("concept"), standard_extension("time")};
  log.global_trace_attributes = {std::string(kConceptName)};
  log.global_event_attributes = {std::string(kConceptName), std::string(kTimestamp), std::string(kLabel)};
  log.classifiers = {{"Sensor", {std::string(kConceptName)}}};

  // Each case is one day starting at 2015-11-02, local offset +01:00.
  constexpr std::int64_t kMsPerDay = 86'400'000;
  const Timestamp base = Timestamp::from_local(2015, 11, 2, 0, 0, 0, 0, 60);
  for (std::size_t i = 0; i < n_traces; ++i) {
    Rng rng(derive_seed(seed, i));
    for (int attempt = 0;; ++attempt) {
      if (attempt == 1000) throw SimulationError("could not produce a trace within max_steps");
      const auto start_second = rng.integer(7 * 3600, 21 * 3600 - 1);
      TraceBuilder builder{model, policy, rng, {}, {}, 0};
      builder.clock = Timestamp{base.epoch_ms + static_cast<std::int64_t>(i) * kMsPerDay + start_second * 1000,
                                base.offset_min};
      if (!builder.run_top_level()) continue;
      builder.trace.case_id = "case_" + std::to_string(i + 1);
      log.traces.push_back(std::move(builder.trace));
      break;
    }
  }
  return log;
}

HierarchicalModel motivating_example() {
  HierarchicalModel model;

  // Top level: p1 -TakingMedicine-> p2 (final) -Eating-> p1.
  {
    LabeledPetriNet& net = model.top_level;
    const auto p1 = net.add_place("p1");
    const auto p2 = net.add_place("p2");
    const auto medicine = net.add_transition("t_TakingMedicine", "TakingMedicine");
    const auto eating = net.add_transition("t_Eating", "Eating");
    net.add_input_arc(p1, medicine);
    net.add_output_arc(medicine, p2);
    net.add_input_arc(p2, eating);
    net.add_output_arc(eating, p1);
    net.set_initial_marking(net.marking_of({"p1"}));
    net.add_final_marking(net.marking_of({"p2"}));
  }

  // TakingMedicine: tau splits into MC || DCC, both join in W; a tau loop from
  // the final place re-enables MC then W.
  {
    LabeledPetriNet net;
    for (const char* p : {"p1", "p2", "p3", "p4", "p5", "p6"}) net.add_place(p);
    const auto split = net.add_transition("tau_split", std::nullopt);
    const auto mc = net.add_transition("t_MC", "MC");
    const auto dcc = net.add_transition("t_DCC", "DCC");
    const auto w = net.add_transition("t_W", "W");
    const auto loop = net.add_transition("tau_loop", std::nullopt);
    auto p = [&](const char* name) { return net.place_index(name); };
    net.add_input_arc(p("p1"), split);
    net.add_output_arc(split, p("p2"));
    net.add_output_arc(split, p("p3"));
    net.add_input_arc(p("p2"), mc);
    net.add_output_arc(mc, p("p4"));
    net.add_input_arc(p("p3"), dcc);
    net.add_output_arc(dcc, p("p5"));
    net.add_input_arc(p("p4"), w);
    net.add_input_arc(p("p5"), w);
    net.add_output_arc(w, p("p6"));
    net.add_input_arc(p("p6"), loop);
    net.add_output_arc(loop, p("p2"));
    net.add_output_arc(loop, p("p5"));
    net.set_initial_marking(net.marking_of({"p1"}));
    net.add_final_marking(net.marking_of({"p6"}));
    model.sub_models.emplace("TakingMedicine", std::move(net));
  }

  // Eating: tau puts a token in the final place p2, where CD and DCC self-loop,
  // and one in p3, which D consumes.
  {
    LabeledPetriNet net;
    for (const char* p : {"p1", "p2", "p3"}) net.add_place(p);
    const auto split = net.add_transition("tau_split", std::nullopt);
    const auto cd = net.add_transition("t_CD", "CD");
    const auto dcc = net.add_transition("t_DCC", "DCC");
    const auto d = net.add_transition("t_D", "D");
    auto p = [&](const char* name) { return net.place_index(name); };
    net.add_input_arc(p("p1"), split);
    net.add_output_arc(split, p("p2"));
    net.add_output_arc(split, p("p3"));
    net.add_input_arc(p("p2"), cd);
    net.add_output_arc(cd, p("p2"));
    net.add_input_arc(p("p2"), dcc);
    net.add_output_arc(dcc, p("p2"));
    net.add_input_arc(p("p3"), d);
    net.set_initial_marking(net.marking_of({"p1"}));
    net.add_final_marking(net.marking_of({"p2"}));
    model.sub_models.emplace("Eating", std::move(net));
  }
  return model;
}

}  // namespace eventabs
