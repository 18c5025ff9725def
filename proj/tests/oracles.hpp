#pragma once

// Independent reference implementations shared by the unit suites and the
// acceptance runner. Deliberately naive: enumeration, recursion, explicit sets.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "eventabs/crf.hpp"
#include "eventabs/evaluation.hpp"
#include "eventabs/petri.hpp"
#include "eventabs/random.hpp"

namespace oracles {

using namespace eventabs;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;


inline std::vector<std::string> label_names(int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back("L" + std::to_string(i));
  return out;
}

inline CrfModel random_model(Rng& rng, int labels, int features, double scale) {
  CrfModel m(label_names(labels), features);
  for (Eigen::Index i = 0; i < m.weights().size(); ++i) m.weights()[i] = rng.uniform(-scale, scale);
  return m;
}

inline Eigen::MatrixXd random_features(Rng& rng, int length, int features) {
  Eigen::MatrixXd x(length, features);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(0.0, 1.0);
  return x;
}

// Unnormalized log-score of a labeling, straight from the weight layout.
inline double direct_score(const CrfModel& m, const Eigen::MatrixXd& x, const std::vector<int>& y) {
  const Eigen::Index K = m.feature_count(), L = m.label_count();
  double s = 0.0;
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    const int cur = y[static_cast<std::size_t>(t)];
    for (Eigen::Index k = 0; k < K; ++k) s += m.weights()[cur * K + k] * x(t, k);
    const Eigen::Index prev = t == 0 ? L : y[static_cast<std::size_t>(t - 1)];
    s += m.weights()[K * L + cur * (L + 1) + prev];
  }
  return s;
}

// Every labeling of length T over L labels, in lexicographic order.
inline std::vector<std::vector<int>> all_labelings(int T, int L) {
  std::vector<std::vector<int>> out;
  std::vector<int> y(static_cast<std::size_t>(T), 0);
  while (true) {
    out.push_back(y);
    int pos = T - 1;
    while (pos >= 0 && ++y[static_cast<std::size_t>(pos)] == L) y[static_cast<std::size_t>(pos--)] = 0;
    if (pos < 0) return out;
  }
}

struct Enumerated {
  long double log_z = 0;
  Eigen::MatrixXd node;
  std::vector<Eigen::MatrixXd> edge;
  double best_score = -1e300;
};

inline Enumerated enumerate(const CrfModel& m, const Eigen::MatrixXd& x) {
  const int T = static_cast<int>(x.rows());
  const int L = static_cast<int>(m.label_count());
  const auto paths = all_labelings(T, L);
  std::vector<double> scores;
  Enumerated out;
  for (const auto& y : paths) {
    scores.push_back(direct_score(m, x, y));
    out.best_score = std::max(out.best_score, scores.back());
  }
  long double z = 0;
  for (double s : scores) z += std::exp(static_cast<long double>(s - out.best_score));
  out.log_z = out.best_score + std::log(z);
  out.node = Eigen::MatrixXd::Zero(T, L);
  out.edge.assign(static_cast<std::size_t>(std::max(T - 1, 0)), Eigen::MatrixXd::Zero(L, L));
  for (std::size_t p = 0; p < paths.size(); ++p) {
    const double prob = static_cast<double>(std::exp(static_cast<long double>(scores[p]) - out.log_z));
    for (int t = 0; t < T; ++t) {
      out.node(t, paths[p][static_cast<std::size_t>(t)]) += prob;
      if (t > 0) out.edge[static_cast<std::size_t>(t - 1)](paths[p][t - 1], paths[p][t]) += prob;
    }
  }
  return out;
}

inline std::vector<LabeledSequence> random_dataset(Rng& rng, int sequences, int labels, int features) {
  std::vector<LabeledSequence> data;
  for (int n = 0; n < sequences; ++n) {
    const int T = static_cast<int>(rng.integer(1, 5));
    LabeledSequence s{random_features(rng, T, features), {}};
    for (int t = 0; t < T; ++t) s.labels.push_back(static_cast<int>(rng.index(static_cast<std::size_t>(labels))));
    data.push_back(std::move(s));
  }
  return data;
}

// Feature k fires exactly when the gold label is k.
inline std::vector<LabeledSequence> separable_dataset(Rng& rng, int labels) {
  std::vector<LabeledSequence> data;
  for (int n = 0; n < 10; ++n) {
    LabeledSequence s{Eigen::MatrixXd::Zero(8, labels), {}};
    for (int t = 0; t < 8; ++t) {
      const int y = static_cast<int>(rng.index(static_cast<std::size_t>(labels)));
      s.features(t, y) = 1.0;
      s.labels.push_back(y);
    }
    data.push_back(std::move(s));
  }
  return data;
}


inline double normal(Rng& rng) {
  // Box-Muller
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

// Best and Fisher (1979) rejection sampler.
inline double von_mises(Rng& rng, double mu, double kappa) {
  const double tau = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
  const double rho = (tau - std::sqrt(2.0 * tau)) / (2.0 * kappa);
  const double r = (1.0 + rho * rho) / (2.0 * rho);
  while (true) {
    const double z = std::cos(kPi * rng.uniform());
    const double f = (1.0 + r * z) / (r + z);
    const double c = kappa * (r - f);
    const double u2 = rng.uniform();
    if (c * (2.0 - c) - u2 > 0.0 || std::log(c / u2) + 1.0 - c >= 0.0) {
      const double theta = (rng.uniform() > 0.5 ? 1.0 : -1.0) * std::acos(f);
      return std::fmod(std::fmod(mu + theta, kTwoPi) + kTwoPi, kTwoPi);
    }
  }
}

inline double circular_distance(double a, double b) {
  const double d = std::fmod(std::abs(a - b), kTwoPi);
  return std::min(d, kTwoPi - d);
}


// Optimal string alignment by plain recursion over suffix positions, memoized.
struct OsaOracle {
  const LabelSequence& a;
  const LabelSequence& b;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;

  std::size_t d(std::size_t i, std::size_t j) {
    if (i == 0) return j;
    if (j == 0) return i;
    const auto key = std::make_pair(i, j);
    if (const auto it = memo.find(key); it != memo.end()) return it->second;
    std::size_t best = std::min({d(i - 1, j) + 1, d(i, j - 1) + 1, d(i - 1, j - 1) + (a[i - 1] == b[j - 1] ? 0 : 1)});
    if (i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1]) best = std::min(best, d(i - 2, j - 2) + 1);
    memo[key] = best;
    return best;
  }
};


inline LabelSequence random_sequence(Rng& rng, std::size_t alphabet) {
  LabelSequence s;
  const auto n = rng.integer(0, 8);
  for (int i = 0; i < n; ++i) s.push_back(std::string(1, static_cast<char>('a' + rng.index(alphabet))));
  return s;
}

struct RandomNet {
  LabeledPetriNet net;
  // flow relation as explicit pairs, kept apart from the net's matrices
  std::set<std::pair<int, int>> inputs;   // (place, transition)
  std::set<std::pair<int, int>> outputs;  // (transition, place)
};

inline RandomNet random_net(Rng& rng) {
  RandomNet r;
  const int places = static_cast<int>(rng.integer(1, 8));
  const int transitions = static_cast<int>(rng.integer(1, 8));
  for (int p = 0; p < places; ++p) r.net.add_place("p" + std::to_string(p));
  for (int t = 0; t < transitions; ++t) {
    r.net.add_transition("t" + std::to_string(t), rng.index(4) == 0 ? std::nullopt : std::optional<std::string>("a"));
  }
  for (int p = 0; p < places; ++p) {
    for (int t = 0; t < transitions; ++t) {
      if (rng.index(3) == 0) {
        r.net.add_input_arc(p, t);
        r.inputs.insert({p, t});
      }
      if (rng.index(3) == 0) {
        r.net.add_output_arc(t, p);
        r.outputs.insert({t, p});
      }
    }
  }
  Marking m = Marking::empty(places);
  for (int p = 0; p < places; ++p) m.tokens[p] = static_cast<int>(rng.integer(0, 2));
  r.net.set_initial_marking(m);
  return r;
}

}  // namespace oracles
