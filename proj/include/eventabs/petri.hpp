#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "eventabs/xes.hpp"

namespace eventabs {

/// Token counts per place.
struct Marking {
  Eigen::VectorXi tokens;

  Marking() = default;
  explicit Marking(Eigen::VectorXi counts) : tokens(std::move(counts)) {}
  static Marking empty(Eigen::Index places) { return Marking(Eigen::VectorXi::Zero(places)); }

  int count(Eigen::Index place) const { return tokens[place]; }
  int total() const { return tokens.sum(); }

  bool operator==(const Marking& other) const {
    return tokens.size() == other.tokens.size() && tokens == other.tokens;
  }
};

/// Labeled Petri net (P, T, F, R, l) with an initial marking and final markings.
/// The flow relation is kept as two P x T 0/1 incidence matrices.
class LabeledPetriNet {
 public:
  Eigen::Index add_place(std::string name);
  /// `label` nullopt marks a silent (tau) transition.
  Eigen::Index add_transition(std::string name, std::optional<std::string> label);
  void add_input_arc(Eigen::Index place, Eigen::Index transition);   ///< (p, t) in F
  void add_output_arc(Eigen::Index transition, Eigen::Index place);  ///< (t, p) in F

  void set_initial_marking(Marking m) { initial_ = std::move(m); }
  void add_final_marking(Marking m) { finals_.push_back(std::move(m)); }
  /// Marking with one token in each named place.
  Marking marking_of(const std::vector<std::string>& place_names) const;

  Eigen::Index place_count() const { return static_cast<Eigen::Index>(places_.size()); }
  Eigen::Index transition_count() const { return static_cast<Eigen::Index>(transitions_.size()); }
  const std::string& place_name(Eigen::Index p) const { return places_[static_cast<std::size_t>(p)]; }
  const std::string& transition_name(Eigen::Index t) const { return transitions_[static_cast<std::size_t>(t)].name; }
  const std::optional<std::string>& label(Eigen::Index t) const {
    return transitions_[static_cast<std::size_t>(t)].label;
  }
  bool is_silent(Eigen::Index t) const { return !label(t).has_value(); }
  Eigen::Index place_index(const std::string& name) const;
  Eigen::Index transition_index(const std::string& name) const;

  /// Label set R (non-silent labels).
  std::vector<std::string> labels() const;

  /// pre(p, t) = 1 iff (p, t) in F; post(p, t) = 1 iff (t, p) in F.
  const Eigen::MatrixXi& pre() const { return pre_; }
  const Eigen::MatrixXi& post() const { return post_; }

  const Marking& initial_marking() const { return initial_; }
  const std::vector<Marking>& final_markings() const { return finals_; }
  bool is_final(const Marking& m) const;

  /// Throws ValidationError when names collide or markings do not fit the net.
  void validate() const;

 private:
  struct Transition {
    std::string name;
    std::optional<std::string> label;
  };

  std::vector<std::string> places_;
  std::vector<Transition> transitions_;
  Eigen::MatrixXi pre_;
  Eigen::MatrixXi post_;
  Marking initial_;
  std::vector<Marking> finals_;
};

std::vector<Eigen::Index> enabled(const LabeledPetriNet& net, const Marking& marking);
bool is_enabled(const LabeledPetriNet& net, const Marking& marking, Eigen::Index transition);
/// Throws InputError when `transition` is not enabled.
Marking fire(const LabeledPetriNet& net, const Marking& marking, Eigen::Index transition);

/// Whether some final marking is reachable from the initial marking within
/// `max_depth` firings (breadth-first, bounded).
bool final_marking_reachable(const LabeledPetriNet& net, int max_depth = 32);

/// All visible label sequences of complete runs (initial to a final marking)
/// with at most `max_firings` transitions.
std::vector<std::vector<std::string>> playouts(const LabeledPetriNet& net, int max_firings);

struct HierarchicalModel {
  LabeledPetriNet top_level;
  std::map<std::string, LabeledPetriNet> sub_models;

  void validate() const;
};

struct StopPolicy {
  int max_steps = 1000;                       ///< firings per trace before it is discarded
  double final_marking_stop_probability = 0.3;
  double sub_model_stop_probability = 0.5;
};

/// Seeded random playout of the hierarchy; one annotated sensor-level trace per case.
EventLog simulate(const HierarchicalModel& model, std::size_t n_traces, std::uint64_t seed,
                  const StopPolicy& policy = {});

/// The two-level smart-home example: TakingMedicine and Eating alternate at the
/// top; each is refined by a sensor-level net over {MC, DCC, W, CD, D}.
HierarchicalModel motivating_example();

}  // namespace eventabs
