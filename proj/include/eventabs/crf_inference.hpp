#pragma once

// Linear-chain CRF inference kernels, templated on the scalar type.

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <vector>

namespace eventabs {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Per-position log-potentials of a linear chain with L labels.
///
/// score(t, i, j) = emission(t, j) + transition(i, j) for t > 0, and
/// emission(0, j) + transition(L, j) at t = 0, where row L of `transition` is
/// the boundary start symbol.
template <typename Scalar>
struct ChainPotentials {
  MatrixX<Scalar> emission;    ///< T x L
  MatrixX<Scalar> transition;  ///< (L + 1) x L

  Eigen::Index length() const { return emission.rows(); }
  Eigen::Index label_count() const { return emission.cols(); }
  Eigen::Index start_row() const { return transition.rows() - 1; }

  Scalar score(Eigen::Index t, Eigen::Index previous, Eigen::Index current) const {
    return emission(t, current) + transition(t == 0 ? start_row() : previous, current);
  }

  /// Dense T x (L x L) view; at t = 0 every row equals the start row.
  std::vector<MatrixX<Scalar>> dense() const {
    std::vector<MatrixX<Scalar>> out;
    const Eigen::Index labels = label_count();
    for (Eigen::Index t = 0; t < length(); ++t) {
      MatrixX<Scalar> m(labels, labels);
      for (Eigen::Index i = 0; i < labels; ++i) {
        for (Eigen::Index j = 0; j < labels; ++j) m(i, j) = score(t, i, j);
      }
      out.push_back(std::move(m));
    }
    return out;
  }
};

template <typename Scalar>
struct ChainMarginals {
  Scalar log_z{};           ///< from the forward recursion
  Scalar log_z_backward{};  ///< from the backward recursion
  MatrixX<Scalar> node;     ///< T x L, P(y_t = j | x)
  /// edge[t - 1](i, j) = P(y_{t-1} = i, y_t = j | x) for t = 1 .. T-1
  std::vector<MatrixX<Scalar>> edge;
};

template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::DenseBase<Derived>& values) {
  using Scalar = typename Derived::Scalar;
  using std::exp;
  using std::log;
  const Scalar m = values.maxCoeff();
  if (m == -std::numeric_limits<Scalar>::infinity()) return m;
  return m + log((values.derived().array() - m).exp().sum());
}

/// Sum of scores along a label path.
template <typename Scalar>
Scalar path_score(const ChainPotentials<Scalar>& p, const std::vector<int>& labels) {
  Scalar total{0};
  for (Eigen::Index t = 0; t < p.length(); ++t) {
    total += p.score(t, t == 0 ? p.start_row() : labels[static_cast<std::size_t>(t - 1)],
                     labels[static_cast<std::size_t>(t)]);
  }
  return total;
}

/// Forward-backward in log space. Requires T >= 1.
template <typename Scalar>
ChainMarginals<Scalar> forward_backward(const ChainPotentials<Scalar>& p) {
  using std::exp;
  const Eigen::Index T = p.length();
  const Eigen::Index L = p.label_count();
  MatrixX<Scalar> alpha(T, L);
  MatrixX<Scalar> beta(T, L);

  alpha.row(0) = p.emission.row(0) + p.transition.row(p.start_row());
  for (Eigen::Index t = 1; t < T; ++t) {
    for (Eigen::Index j = 0; j < L; ++j) {
      alpha(t, j) = log_sum_exp(alpha.row(t - 1).transpose() + p.transition.col(j).head(L)) + p.emission(t, j);
    }
  }
  beta.row(T - 1).setZero();
  for (Eigen::Index t = T - 2; t >= 0; --t) {
    const VectorX<Scalar> next = (p.emission.row(t + 1) + beta.row(t + 1)).transpose();
    for (Eigen::Index i = 0; i < L; ++i) {
      beta(t, i) = log_sum_exp(p.transition.row(i).transpose() + next);
    }
  }

  ChainMarginals<Scalar> out;
  out.log_z = log_sum_exp(alpha.row(T - 1));
  out.log_z_backward =
      log_sum_exp((p.transition.row(p.start_row()) + p.emission.row(0) + beta.row(0)).transpose());
  out.node = ((alpha + beta).array() - out.log_z).exp().matrix();
  out.edge.reserve(static_cast<std::size_t>(T > 0 ? T - 1 : 0));
  for (Eigen::Index t = 1; t < T; ++t) {
    MatrixX<Scalar> e(L, L);
    for (Eigen::Index i = 0; i < L; ++i) {
      for (Eigen::Index j = 0; j < L; ++j) {
        e(i, j) = exp(alpha(t - 1, i) + p.transition(i, j) + p.emission(t, j) + beta(t, j) - out.log_z);
      }
    }
    out.edge.push_back(std::move(e));
  }
  return out;
}

/// Highest-scoring label path. Ties resolve to the lowest label index.
template <typename Scalar>
std::vector<int> viterbi(const ChainPotentials<Scalar>& p) {
  const Eigen::Index T = p.length();
  const Eigen::Index L = p.label_count();
  if (T == 0) return {};
  MatrixX<Scalar> delta(T, L);
  Eigen::MatrixXi back(T, L);
  delta.row(0) = p.emission.row(0) + p.transition.row(p.start_row());
  for (Eigen::Index t = 1; t < T; ++t) {
    for (Eigen::Index j = 0; j < L; ++j) {
      Eigen::Index best = 0;
      Scalar best_score = delta(t - 1, 0) + p.transition(0, j);
      for (Eigen::Index i = 1; i < L; ++i) {
        const Scalar s = delta(t - 1, i) + p.transition(i, j);
        if (s > best_score) {
          best_score = s;
          best = i;
        }
      }
      delta(t, j) = best_score + p.emission(t, j);
      back(t, j) = static_cast<int>(best);
    }
  }
  std::vector<int> path(static_cast<std::size_t>(T));
  Eigen::Index last = 0;
  for (Eigen::Index j = 1; j < L; ++j) {
    if (delta(T - 1, j) > delta(T - 1, last)) last = j;
  }
  path.back() = static_cast<int>(last);
  for (Eigen::Index t = T - 1; t > 0; --t) {
    path[static_cast<std::size_t>(t - 1)] = back(t, path[static_cast<std::size_t>(t)]);
  }
  return path;
}

}  // namespace eventabs
