#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace eventabs {

struct VonMisesComponent {
  double weight = 1.0;
  double mean = 0.0;   ///< radians in [0, 2pi)
  double kappa = 0.0;  ///< concentration >= 0

  bool operator==(const VonMisesComponent&) const = default;
};

struct VonMisesMixture {
  std::vector<VonMisesComponent> components;

  bool operator==(const VonMisesMixture&) const = default;
};

struct GaussianComponent {
  double weight = 1.0;
  double mean = 0.0;
  double stddev = 1.0;

  bool operator==(const GaussianComponent&) const = default;
};

/// A mixture with no components is the "no data" model: its density is 0 everywhere.
struct GaussianMixture {
  std::vector<GaussianComponent> components;

  bool operator==(const GaussianMixture&) const = default;
};

double density(const VonMisesMixture& model, double angle);
double log_density(const VonMisesMixture& model, double angle);
double density(const GaussianMixture& model, double x);
double log_density(const GaussianMixture& model, double x);

inline double vmmm_density(const VonMisesMixture& model, double angle) { return density(model, angle); }
inline double gmm_density(const GaussianMixture& model, double x) { return density(model, x); }

double log_likelihood(const VonMisesMixture& model, std::span<const double> angles);
double log_likelihood(const GaussianMixture& model, std::span<const double> xs);

/// Bayesian information criterion p ln n - 2 lnL; lower is better.
double bic(double log_likelihood, int parameter_count, std::size_t sample_count);

/// Free parameters of a k-component univariate mixture: k-1 weights, k locations, k scales.
constexpr int mixture_parameter_count(int components) { return 3 * components - 1; }

struct EmOptions {
  int max_components = 8;
  double tolerance = 1e-6;  ///< stop when the log-likelihood gain drops below this
  int max_iterations = 500;
  int restarts = 5;
  std::uint64_t seed = 0;
  double kappa_max = 700.0;
  double stddev_floor = 1e-3;
};

/// One EM run: the log-likelihood after initialization and after every iteration.
struct EmTrace {
  std::vector<double> log_likelihood;
  int components = 0;
  int restart = 0;
};

template <typename Model>
struct MixtureFit {
  Model model;
  double log_likelihood = 0.0;
  double bic = 0.0;
  std::vector<double> bic_by_components;  ///< index k-1
  std::vector<EmTrace> traces;            ///< every run, every component count
};

/// EM from a given starting point; refines `model` in place.
EmTrace em_vmmm(std::span<const double> angles, VonMisesMixture& model, const EmOptions& options);
EmTrace em_gmm(std::span<const double> xs, GaussianMixture& model, const EmOptions& options);

/// Fits k = 1..min(max_components, n) components (k-means++ seeding, several
/// restarts, best likelihood kept) and returns the BIC-minimizing model.
MixtureFit<VonMisesMixture> fit_vmmm_detailed(std::span<const double> angles, const EmOptions& options);
MixtureFit<GaussianMixture> fit_gmm_detailed(std::span<const double> xs, const EmOptions& options);

VonMisesMixture fit_vmmm(std::span<const double> angles, int max_components = 8, std::uint64_t seed = 0);
GaussianMixture fit_gmm(std::span<const double> xs, int max_components = 8, std::uint64_t seed = 0);

/// Throws when weights do not sum to 1, a scale is out of range, or a mean is not finite.
void validate(const VonMisesMixture& model);
void validate(const GaussianMixture& model);

}  // namespace eventabs
