#include "eventabs/mixture.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "eventabs/error.hpp"
#include "eventabs/random.hpp"
#include "eventabs/special_functions.hpp"

namespace eventabs {
namespace {

constexpr double kTwoPi = 2.0 * M_PI;
const double kLogTwoPi = std::log(kTwoPi);
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0) a += kTwoPi;
  return a >= kTwoPi ? 0.0 : a;
}

double circular_distance(double a, double b) {
  const double d = std::abs(wrap_angle(a - b));
  return std::min(d, kTwoPi - d);
}

// Row-wise log-sum-exp; returns the data log-likelihood and overwrites
// `log_joint` with responsibilities.
double normalize_rows(Eigen::ArrayXXd& log_joint) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < log_joint.rows(); ++i) {
    const double m = log_joint.row(i).maxCoeff();
    const double lse = m + std::log((log_joint.row(i) - m).exp().sum());
    log_joint.row(i) = (log_joint.row(i) - lse).exp();
    total += lse;
  }
  return total;
}

void prune_empty(std::vector<VonMisesComponent>& c) {
  std::erase_if(c, [](const VonMisesComponent& x) { return !(x.weight > 0.0); });
}
void prune_empty(std::vector<GaussianComponent>& c) {
  std::erase_if(c, [](const GaussianComponent& x) { return !(x.weight > 0.0); });
}

struct VonMisesFamily {
  using Model = VonMisesMixture;

  Eigen::ArrayXd x, c, s;

  explicit VonMisesFamily(std::span<const double> angles)
      : x(Eigen::Map<const Eigen::ArrayXd>(angles.data(), static_cast<Eigen::Index>(angles.size()))),
        c(x.cos()),
        s(x.sin()) {}

  static double distance(double a, double b) { return circular_distance(a, b); }

  void log_joint(const Model& m, Eigen::ArrayXXd& out) const {
    out.resize(x.size(), static_cast<Eigen::Index>(m.components.size()));
    for (std::size_t j = 0; j < m.components.size(); ++j) {
      const auto& comp = m.components[j];
      const double base = (comp.weight > 0 ? std::log(comp.weight) : kNegInf) - kLogTwoPi - log_bessel_i0(comp.kappa);
      const auto col = static_cast<Eigen::Index>(j);
      out.col(col) = base + comp.kappa * (c * std::cos(comp.mean) + s * std::sin(comp.mean));
    }
  }

  void m_step(const Eigen::ArrayXXd& resp, Model& m, const EmOptions& options) const {
    const double n = static_cast<double>(x.size());
    for (std::size_t j = 0; j < m.components.size(); ++j) {
      const auto col = resp.col(static_cast<Eigen::Index>(j));
      const double nj = col.sum();
      auto& comp = m.components[j];
      if (!(nj > 0.0)) {
        comp.weight = 0.0;
        continue;
      }
      const double sc = (col * c).sum();
      const double ss = (col * s).sum();
      comp.weight = nj / n;
      comp.mean = wrap_angle(std::atan2(ss, sc));
      const double r = std::min(1.0, std::sqrt(sc * sc + ss * ss) / nj);
      comp.kappa = inverse_bessel_ratio(r, options.kappa_max);
    }
  }

  Model from_centers(const std::vector<double>& centers, const EmOptions& options) const {
    Eigen::ArrayXXd resp = Eigen::ArrayXXd::Zero(x.size(), static_cast<Eigen::Index>(centers.size()));
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      std::size_t best = 0;
      for (std::size_t j = 1; j < centers.size(); ++j) {
        if (distance(x[i], centers[j]) < distance(x[i], centers[best])) best = j;
      }
      resp(i, static_cast<Eigen::Index>(best)) = 1.0;
    }
    Model m;
    for (double center : centers) m.components.push_back({0.0, center, 0.0});
    m_step(resp, m, options);
    return m;
  }
};

struct GaussianFamily {
  using Model = GaussianMixture;

  Eigen::ArrayXd x;

  explicit GaussianFamily(std::span<const double> xs)
      : x(Eigen::Map<const Eigen::ArrayXd>(xs.data(), static_cast<Eigen::Index>(xs.size()))) {}

  static double distance(double a, double b) { return std::abs(a - b); }

  void log_joint(const Model& m, Eigen::ArrayXXd& out) const {
    out.resize(x.size(), static_cast<Eigen::Index>(m.components.size()));
    for (std::size_t j = 0; j < m.components.size(); ++j) {
      const auto& comp = m.components[j];
      const double base =
          (comp.weight > 0 ? std::log(comp.weight) : kNegInf) - std::log(comp.stddev) - 0.5 * kLogTwoPi;
      out.col(static_cast<Eigen::Index>(j)) = base - 0.5 * ((x - comp.mean) / comp.stddev).square();
    }
  }

  void m_step(const Eigen::ArrayXXd& resp, Model& m, const EmOptions& options) const {
    const double n = static_cast<double>(x.size());
    for (std::size_t j = 0; j < m.components.size(); ++j) {
      const auto col = resp.col(static_cast<Eigen::Index>(j));
      const double nj = col.sum();
      auto& comp = m.components[j];
      if (!(nj > 0.0)) {
        comp.weight = 0.0;
        continue;
      }
      comp.weight = nj / n;
      comp.mean = (col * x).sum() / nj;
      const double var = (col * (x - comp.mean).square()).sum() / nj;
      comp.stddev = std::max(std::sqrt(var), options.stddev_floor);
    }
  }

  Model from_centers(const std::vector<double>& centers, const EmOptions& options) const {
    Eigen::ArrayXXd resp = Eigen::ArrayXXd::Zero(x.size(), static_cast<Eigen::Index>(centers.size()));
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      std::size_t best = 0;
      for (std::size_t j = 1; j < centers.size(); ++j) {
        if (distance(x[i], centers[j]) < distance(x[i], centers[best])) best = j;
      }
      resp(i, static_cast<Eigen::Index>(best)) = 1.0;
    }
    Model m;
    for (double center : centers) m.components.push_back({0.0, center, options.stddev_floor});
    m_step(resp, m, options);
    return m;
  }
};

template <typename Family>
EmTrace run_em(const Family& family, typename Family::Model& model, const EmOptions& options) {
  EmTrace trace;
  trace.components = static_cast<int>(model.components.size());
  Eigen::ArrayXXd resp;
  family.log_joint(model, resp);
  double ll = normalize_rows(resp);
  trace.log_likelihood.push_back(ll);
  for (int it = 0; it < options.max_iterations; ++it) {
    family.m_step(resp, model, options);
    family.log_joint(model, resp);
    const double next = normalize_rows(resp);
    if (!std::isfinite(next)) throw NumericError("EM produced a non-finite log-likelihood");
    trace.log_likelihood.push_back(next);
    const double gain = next - ll;
    ll = next;
    if (gain < options.tolerance) break;
  }
  prune_empty(model.components);
  return trace;
}

// k-means++ seeding: first center uniform, then proportional to squared distance.
template <typename Family>
std::vector<double> seed_centers(const Family& family, int k, Rng& rng) {
  const auto n = static_cast<std::size_t>(family.x.size());
  std::vector<double> centers{family.x[static_cast<Eigen::Index>(rng.index(n))]};
  std::vector<double> d2(n);
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (double c : centers) best = std::min(best, Family::distance(family.x[static_cast<Eigen::Index>(i)], c));
      d2[i] = best * best;
      total += d2[i];
    }
    std::size_t pick = n - 1;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      for (std::size_t i = 0; i < n; ++i) {
        u -= d2[i];
        if (u < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.index(n);
    }
    centers.push_back(family.x[static_cast<Eigen::Index>(pick)]);
  }
  return centers;
}

template <typename Family>
MixtureFit<typename Family::Model> fit_mixture(const Family& family, const EmOptions& options) {
  const auto n = static_cast<std::size_t>(family.x.size());
  if (n == 0) throw InputError("cannot fit a mixture to an empty sample");
  if (options.max_components < 1) throw ConfigError("max_components must be >= 1");
  if (options.restarts < 1) throw ConfigError("restarts must be >= 1");
  if (!family.x.isFinite().all()) throw InputError("mixture sample contains non-finite values");

  MixtureFit<typename Family::Model> result;
  result.bic = std::numeric_limits<double>::infinity();
  const int max_k = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(options.max_components), n));
  for (int k = 1; k <= max_k; ++k) {
    typename Family::Model best;
    double best_ll = kNegInf;
    for (int restart = 0; restart < options.restarts; ++restart) {
      Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(k) * 1000 + static_cast<std::uint64_t>(restart)));
      auto model = family.from_centers(seed_centers(family, k, rng), options);
      EmTrace trace = run_em(family, model, options);
      trace.restart = restart;
      const double ll = trace.log_likelihood.back();
      if (ll > best_ll) {
        best_ll = ll;
        best = std::move(model);
      }
      result.traces.push_back(std::move(trace));
    }
    const double score = bic(best_ll, mixture_parameter_count(k), n);
    result.bic_by_components.push_back(score);
    if (score < result.bic) {
      result.bic = score;
      result.log_likelihood = best_ll;
      result.model = std::move(best);
    }
  }
  return result;
}

}  // namespace

double log_density(const VonMisesMixture& model, double angle) {
  double m = kNegInf;
  std::vector<double> terms;
  terms.reserve(model.components.size());
  for (const auto& c : model.components) {
    const double t = std::log(c.weight) + c.kappa * std::cos(angle - c.mean) - kLogTwoPi - log_bessel_i0(c.kappa);
    terms.push_back(t);
    m = std::max(m, t);
  }
  if (m == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - m);
  return m + std::log(sum);
}

double density(const VonMisesMixture& model, double angle) {
  double sum = 0.0;
  for (const auto& c : model.components) {
    sum += c.weight * std::exp(c.kappa * (std::cos(angle - c.mean) - 1.0)) / (kTwoPi * bessel_i0_scaled(c.kappa));
  }
  return sum;
}

double log_density(const GaussianMixture& model, double x) {
  double m = kNegInf;
  std::vector<double> terms;
  terms.reserve(model.components.size());
  for (const auto& c : model.components) {
    const double z = (x - c.mean) / c.stddev;
    const double t = std::log(c.weight) - std::log(c.stddev) - 0.5 * kLogTwoPi - 0.5 * z * z;
    terms.push_back(t);
    m = std::max(m, t);
  }
  if (m == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - m);
  return m + std::log(sum);
}

double density(const GaussianMixture& model, double x) {
  double sum = 0.0;
  for (const auto& c : model.components) {
    const double z = (x - c.mean) / c.stddev;
    sum += c.weight * std::exp(-0.5 * z * z) / (c.stddev * std::sqrt(kTwoPi));
  }
  return sum;
}

double log_likelihood(const VonMisesMixture& model, std::span<const double> angles) {
  double total = 0.0;
  for (double a : angles) total += log_density(model, a);
  return total;
}

double log_likelihood(const GaussianMixture& model, std::span<const double> xs) {
  double total = 0.0;
  for (double x : xs) total += log_density(model, x);
  return total;
}

double bic(double log_likelihood, int parameter_count, std::size_t sample_count) {
  return parameter_count * std::log(static_cast<double>(sample_count)) - 2.0 * log_likelihood;
}

EmTrace em_vmmm(std::span<const double> angles, VonMisesMixture& model, const EmOptions& options) {
  return run_em(VonMisesFamily(angles), model, options);
}

EmTrace em_gmm(std::span<const double> xs, GaussianMixture& model, const EmOptions& options) {
  return run_em(GaussianFamily(xs), model, options);
}

MixtureFit<VonMisesMixture> fit_vmmm_detailed(std::span<const double> angles, const EmOptions& options) {
  std::vector<double> wrapped(angles.begin(), angles.end());
  for (double& a : wrapped) a = wrap_angle(a);
  return fit_mixture(VonMisesFamily(wrapped), options);
}

MixtureFit<GaussianMixture> fit_gmm_detailed(std::span<const double> xs, const EmOptions& options) {
  return fit_mixture(GaussianFamily(xs), options);
}

VonMisesMixture fit_vmmm(std::span<const double> angles, int max_components, std::uint64_t seed) {
  EmOptions options;
  options.max_components = max_components;
  options.seed = seed;
  return fit_vmmm_detailed(angles, options).model;
}

GaussianMixture fit_gmm(std::span<const double> xs, int max_components, std::uint64_t seed) {
  EmOptions options;
  options.max_components = max_components;
  options.seed = seed;
  return fit_gmm_detailed(xs, options).model;
}

void validate(const VonMisesMixture& model) {
  double total = 0.0;
  for (const auto& c : model.components) {
    if (!(c.weight > 0.0 && c.weight <= 1.0)) throw ValidationError("von Mises weight outside (0, 1]");
    if (!(c.mean >= 0.0 && c.mean < kTwoPi)) throw ValidationError("von Mises mean outside [0, 2pi)");
    if (!(c.kappa >= 0.0) || !std::isfinite(c.kappa)) throw ValidationError("von Mises concentration must be >= 0");
    total += c.weight;
  }
  if (model.components.empty() || std::abs(total - 1.0) > 1e-9) {
    throw ValidationError("von Mises mixture weights must sum to 1");
  }
}

void validate(const GaussianMixture& model) {
  if (model.components.empty()) return;
  double total = 0.0;
  for (const auto& c : model.components) {
    if (!(c.weight > 0.0 && c.weight <= 1.0)) throw ValidationError("Gaussian weight outside (0, 1]");
    if (!std::isfinite(c.mean)) throw ValidationError("Gaussian mean must be finite");
    if (!(c.stddev > 0.0) || !std::isfinite(c.stddev)) throw ValidationError("Gaussian stddev must be positive");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("Gaussian mixture weights must sum to 1");
}

}  // namespace eventabs
