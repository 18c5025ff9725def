#include "eventabs/special_functions.hpp"

#include <cmath>

namespace eventabs {
namespace {

constexpr double kSeriesLimit = 20.0;

// sum_k (x^2/4)^k / (k! (k+order)!) * (x/2)^order, scaled by e^{-x}
double series_scaled(double x, int order) {
  const double q = 0.25 * x * x;
  double term = order == 0 ? 1.0 : 0.5 * x;
  double sum = term;
  for (int k = 1; k < 500; ++k) {
    term *= q / (static_cast<double>(k) * static_cast<double>(k + order));
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum * std::exp(-x);
}

// e^{-x} I_nu(x) ~ 1/sqrt(2 pi x) * sum_k (-1)^k a_k(nu) / x^k
double asymptotic_scaled(double x, int order) {
  const double mu = 4.0 * order * order;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 60; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = -term * (mu - odd * odd) / (k * 8.0 * x);
    if (std::abs(next) > std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return sum / std::sqrt(2.0 * M_PI * x);
}

}  // namespace

double bessel_i0_scaled(double x) {
  x = std::abs(x);
  return x < kSeriesLimit ? series_scaled(x, 0) : asymptotic_scaled(x, 0);
}

double bessel_i1_scaled(double x) {
  const double ax = std::abs(x);
  const double v = ax < kSeriesLimit ? series_scaled(ax, 1) : asymptotic_scaled(ax, 1);
  return x < 0 ? -v : v;
}

double log_bessel_i0(double x) { return std::abs(x) + std::log(bessel_i0_scaled(x)); }

double bessel_ratio_a(double kappa) {
  if (kappa <= 0.0) return 0.0;
  return bessel_i1_scaled(kappa) / bessel_i0_scaled(kappa);
}

double inverse_bessel_ratio(double r, double kappa_max) {
  if (!(r > 1e-12)) return 0.0;
  if (r >= 1.0) return kappa_max;
  double kappa = r * (2.0 - r * r) / (1.0 - r * r);
  if (!(kappa < kappa_max)) return kappa_max;
  for (int step = 0; step < 5; ++step) {
    const double a = bessel_ratio_a(kappa);
    const double slope = 1.0 - a * a - a / kappa;
    if (!(slope > 0.0)) break;
    const double next = kappa - (a - r) / slope;
    if (!(next > 0.0)) {
      kappa *= 0.5;
      continue;
    }
    kappa = next;
    if (kappa >= kappa_max) return kappa_max;
  }
  return kappa;
}

}  // namespace eventabs
