#pragma once

namespace ccopf {

/// Standard-normal quantile paired with the violation probability it was derived from.
struct Quantile {
  double epsilon = 0.0;
  double x = 0.0;  // Phi(x) = 1 - epsilon
};

/// Standard normal CDF.
double normal_cdf(double x);

/// Upper-tail quantile: returns x with Phi(x) = 1 - epsilon.
/// Rational initial guess refined by a Newton step on Phi. Throws InputError
/// unless 0 < epsilon < 1.
Quantile x_epsilon(double epsilon);

}  // namespace ccopf
