#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "eventabs/crf_inference.hpp"

namespace eventabs {

/// Linear-chain CRF over real-valued observation features.
///
/// Weight layout: the first K*L entries are the observation block, read as a
/// K x L column-major matrix (column j holds the weights conjoining every
/// observation feature with label j). The remaining (L+1)*L entries are the
/// transition block, read as an (L+1) x L column-major matrix whose last row
/// is the start symbol.
class CrfModel {
 public:
  CrfModel() = default;
  CrfModel(std::vector<std::string> labels, Eigen::Index feature_count);
  CrfModel(std::vector<std::string> labels, Eigen::Index feature_count, Eigen::VectorXd weights);

  static Eigen::Index weight_count(Eigen::Index feature_count, Eigen::Index label_count) {
    return feature_count * label_count + (label_count + 1) * label_count;
  }

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  Eigen::Index label_count() const noexcept { return static_cast<Eigen::Index>(labels_.size()); }
  Eigen::Index feature_count() const noexcept { return feature_count_; }

  const Eigen::VectorXd& weights() const noexcept { return weights_; }
  Eigen::VectorXd& weights() noexcept { return weights_; }

  Eigen::Map<const Eigen::MatrixXd> observation_weights() const {
    return {weights_.data(), feature_count_, label_count()};
  }
  Eigen::Map<Eigen::MatrixXd> observation_weights() { return {weights_.data(), feature_count_, label_count()}; }
  Eigen::Map<const Eigen::MatrixXd> transition_weights() const {
    return {weights_.data() + feature_count_ * label_count(), label_count() + 1, label_count()};
  }
  Eigen::Map<Eigen::MatrixXd> transition_weights() {
    return {weights_.data() + feature_count_ * label_count(), label_count() + 1, label_count()};
  }

  Eigen::Index nonzero_count() const;

  bool operator==(const CrfModel& other) const {
    return labels_ == other.labels_ && feature_count_ == other.feature_count_ && weights_ == other.weights_;
  }

 private:
  std::vector<std::string> labels_;
  Eigen::Index feature_count_ = 0;
  Eigen::VectorXd weights_;
};

/// A training sequence: T x K observation features and T gold label indices.
struct LabeledSequence {
  Eigen::MatrixXd features;
  std::vector<int> labels;
};

ChainPotentials<double> log_potentials(const Eigen::MatrixXd& features, const CrfModel& model);

ChainMarginals<double> forward_backward(const CrfModel& model, const Eigen::MatrixXd& features);
std::vector<int> viterbi(const CrfModel& model, const Eigen::MatrixXd& features);

struct ObjectiveValue {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

/// Negative conditional log-likelihood sum_n (log Z - gold score) and its
/// gradient (expected minus empirical feature counts). No regularization term.
ObjectiveValue nll_and_gradient(const CrfModel& model, const std::vector<LabeledSequence>& dataset);

struct TrainConfig {
  double l1_strength = 0.1;
  int max_iterations = 1000;
  double tolerance = 1e-6;  ///< relative change of the penalized objective
  std::uint64_t seed = 0;
  int memory = 10;          ///< quasi-Newton history length
};

struct TrainResult {
  CrfModel model;
  double objective = 0.0;          ///< smooth part plus L1 penalty at the returned weights
  double initial_objective = 0.0;  ///< same, at the zero vector
  Eigen::Index nonzero_weights = 0;
  int iterations = 0;
  bool converged = false;
};

/// Minimizes nll + l1_strength * |w|_1 with orthant-wise limited-memory
/// quasi-Newton (OWL-QN), starting from zero. Deterministic for a fixed
/// dataset order.
TrainResult train_crf(const std::vector<std::string>& labels, const std::vector<LabeledSequence>& dataset,
                      const TrainConfig& config);

}  // namespace eventabs
