#pragma once

namespace eventabs {

/// Exponentially scaled modified Bessel functions of the first kind,
/// e^{-x} I_0(x) and e^{-x} I_1(x), for x >= 0. Power series below x = 20,
/// Hankel asymptotic expansion above; relative error below 1e-12 on [0, 700].
double bessel_i0_scaled(double x);
double bessel_i1_scaled(double x);

/// ln I_0(x) without overflow.
double log_bessel_i0(double x);

/// A(kappa) = I_1(kappa) / I_0(kappa), the mean resultant length of a von Mises
/// distribution with concentration kappa.
double bessel_ratio_a(double kappa);

/// Inverse of bessel_ratio_a: closed-form start (Banerjee et al.) refined by five
/// Newton steps, capped at `kappa_max`.
double inverse_bessel_ratio(double mean_resultant_length, double kappa_max = 700.0);

}  // namespace eventabs
