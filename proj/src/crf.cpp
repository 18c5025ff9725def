#include "eventabs/crf.hpp"

#include <cmath>
#include <deque>

#include "eventabs/error.hpp"

namespace eventabs {

CrfModel::CrfModel(std::vector<std::string> labels, Eigen::Index feature_count)
    : CrfModel(labels, feature_count,
               Eigen::VectorXd::Zero(weight_count(feature_count, static_cast<Eigen::Index>(labels.size())))) {}

CrfModel::CrfModel(std::vector<std::string> labels, Eigen::Index feature_count, Eigen::VectorXd weights)
    : labels_(std::move(labels)), feature_count_(feature_count), weights_(std::move(weights)) {
  if (labels_.empty()) throw ConfigError("CRF needs at least one label");
  if (feature_count_ < 0) throw ConfigError("negative feature count");
  if (weights_.size() != weight_count(feature_count_, label_count())) {
    throw ConfigError("CRF weight vector has length " + std::to_string(weights_.size()) + ", expected " +
                      std::to_string(weight_count(feature_count_, label_count())));
  }
}

Eigen::Index CrfModel::nonzero_count() const { return (weights_.array() != 0.0).count(); }

ChainPotentials<double> log_potentials(const Eigen::MatrixXd& features, const CrfModel& model) {
  if (features.cols() != model.feature_count()) {
    throw ConfigError("feature matrix has " + std::to_string(features.cols()) + " columns, model expects " +
                      std::to_string(model.feature_count()));
  }
  ChainPotentials<double> p;
  p.emission = features * model.observation_weights();
  p.transition = model.transition_weights();
  return p;
}

ChainMarginals<double> forward_backward(const CrfModel& model, const Eigen::MatrixXd& features) {
  if (features.rows() == 0) throw InputError("forward-backward needs at least one position");
  return forward_backward(log_potentials(features, model));
}

std::vector<int> viterbi(const CrfModel& model, const Eigen::MatrixXd& features) {
  return viterbi(log_potentials(features, model));
}

ObjectiveValue nll_and_gradient(const CrfModel& model, const std::vector<LabeledSequence>& dataset) {
  if (dataset.empty()) throw InputError("empty training set");
  const Eigen::Index K = model.feature_count();
  const Eigen::Index L = model.label_count();
  ObjectiveValue out;
  out.gradient = Eigen::VectorXd::Zero(model.weights().size());
  Eigen::Map<Eigen::MatrixXd> grad_obs(out.gradient.data(), K, L);
  Eigen::Map<Eigen::MatrixXd> grad_trans(out.gradient.data() + K * L, L + 1, L);

  for (std::size_t n = 0; n < dataset.size(); ++n) {
    const auto& seq = dataset[n];
    const Eigen::Index T = seq.features.rows();
    if (static_cast<std::size_t>(T) != seq.labels.size()) {
      throw InputError("sequence " + std::to_string(n) + ": feature rows and labels differ in length");
    }
    if (T == 0) continue;
    for (int y : seq.labels) {
      if (y < 0 || y >= L) throw InputError("sequence " + std::to_string(n) + ": label index out of range");
    }
    const auto potentials = log_potentials(seq.features, model);
    const auto marginals = forward_backward(potentials);
    out.value += marginals.log_z - path_score(potentials, seq.labels);

    Eigen::MatrixXd residual = marginals.node;
    for (Eigen::Index t = 0; t < T; ++t) residual(t, seq.labels[static_cast<std::size_t>(t)]) -= 1.0;
    grad_obs.noalias() += seq.features.transpose() * residual;

    grad_trans.row(L) += marginals.node.row(0);
    grad_trans(L, seq.labels[0]) -= 1.0;
    for (Eigen::Index t = 1; t < T; ++t) {
      grad_trans.topRows(L) += marginals.edge[static_cast<std::size_t>(t - 1)];
      grad_trans(seq.labels[static_cast<std::size_t>(t - 1)], seq.labels[static_cast<std::size_t>(t)]) -= 1.0;
    }
  }
  return out;
}

namespace {

// Gradient of f + c|w|_1 restricted to the orthant that descends fastest.
Eigen::VectorXd pseudo_gradient(const Eigen::VectorXd& w, const Eigen::VectorXd& g, double c) {
  Eigen::VectorXd pg(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w[i] > 0) {
      pg[i] = g[i] + c;
    } else if (w[i] < 0) {
      pg[i] = g[i] - c;
    } else if (g[i] + c < 0) {
      pg[i] = g[i] + c;
    } else if (g[i] - c > 0) {
      pg[i] = g[i] - c;
    } else {
      pg[i] = 0.0;
    }
  }
  return pg;
}

}  // namespace

TrainResult train_crf(const std::vector<std::string>& labels, const std::vector<LabeledSequence>& dataset,
                      const TrainConfig& config) {
  if (dataset.empty()) throw InputError("empty training set");
  if (!(config.tolerance > 0.0)) throw ConfigError("convergence tolerance must be positive");
  if (!(config.l1_strength >= 0.0)) throw ConfigError("l1 strength must be non-negative");
  const Eigen::Index K = dataset.front().features.cols();
  for (const auto& seq : dataset) {
    if (seq.features.cols() != K) throw ConfigError("training sequences disagree on the feature dimension");
  }

  CrfModel model(labels, K);
  const double c = config.l1_strength;
  auto evaluate = [&](int iteration) {
    ObjectiveValue v = nll_and_gradient(model, dataset);
    if (!std::isfinite(v.value) || !v.gradient.allFinite()) {
      throw NumericError("non-finite training objective at iteration " + std::to_string(iteration));
    }
    return v;
  };

  ObjectiveValue current = evaluate(0);
  double objective = current.value + c * model.weights().lpNorm<1>();
  TrainResult result;
  result.initial_objective = objective;

  std::deque<Eigen::VectorXd> s_hist;
  std::deque<Eigen::VectorXd> y_hist;
  std::deque<double> rho_hist;

  int iteration = 0;
  for (; iteration < config.max_iterations; ++iteration) {
    const Eigen::VectorXd w = model.weights();
    const Eigen::VectorXd pg = pseudo_gradient(w, current.gradient, c);
    if (pg.lpNorm<Eigen::Infinity>() <= 1e-10) {
      result.converged = true;
      break;
    }

    // Two-loop recursion on the pseudo-gradient.
    Eigen::VectorXd d = -pg;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      alpha[k] = rho_hist[k] * s_hist[k].dot(d);
      d -= alpha[k] * y_hist[k];
    }
    if (!s_hist.empty()) d *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = rho_hist[k] * y_hist[k].dot(d);
      d += (alpha[k] - beta) * s_hist[k];
    }
    // Keep only components that agree with the steepest pseudo-descent direction.
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (d[i] * pg[i] >= 0) d[i] = 0.0;
    }
    if (d.lpNorm<Eigen::Infinity>() == 0.0) {
      result.converged = true;
      break;
    }

    Eigen::VectorXd orthant(w.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      orthant[i] = w[i] != 0 ? (w[i] > 0 ? 1.0 : -1.0) : (pg[i] < 0 ? 1.0 : (pg[i] > 0 ? -1.0 : 0.0));
    }

    double step = s_hist.empty() ? 1.0 / d.norm() : 1.0;
    bool accepted = false;
    ObjectiveValue next;
    double next_objective = objective;
    for (int trial = 0; trial < 60; ++trial) {
      Eigen::VectorXd candidate = w + step * d;
      for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (candidate[i] * orthant[i] <= 0) candidate[i] = 0.0;
      }
      model.weights() = candidate;
      next = evaluate(iteration + 1);
      next_objective = next.value + c * candidate.lpNorm<1>();
      if (next_objective <= objective + 1e-4 * pg.dot(candidate - w)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      model.weights() = w;
      result.converged = true;
      break;
    }

    const Eigen::VectorXd s = model.weights() - w;
    const Eigen::VectorXd y = next.gradient - current.gradient;
    const double sy = s.dot(y);
    if (sy > 1e-12) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > config.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }

    const double change = std::abs(objective - next_objective) / std::max(1.0, std::abs(objective));
    current = std::move(next);
    objective = next_objective;
    if (change < config.tolerance) {
      ++iteration;
      result.converged = true;
      break;
    }
  }

  result.objective = objective;
  result.nonzero_weights = model.nonzero_count();
  result.iterations = iteration;
  result.model = std::move(model);
  return result;
}

}  // namespace eventabs
