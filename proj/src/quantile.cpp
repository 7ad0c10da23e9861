#include "ccopf/quantile.hpp"

#include <array>
#include <cmath>

#include <fmt/format.h>

#include "ccopf/errors.hpp"

namespace ccopf {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// Lower-tail inverse normal, relative error ~1e-9 (Acklam's rational fit).
double inverse_normal_guess(double p) {
  static constexpr std::array<double, 6> a{-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                           1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr std::array<double, 5> b{-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                           6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr std::array<double, 6> c{-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                           -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr std::array<double, 4> d{7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                           3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) return -inverse_normal_guess(1.0 - p);
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

Quantile x_epsilon(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw InputError(fmt::format("epsilon out of range: {} (need 0 < eps < 1)", epsilon));
  if (epsilon == 0.5) return {epsilon, 0.0};

  // Work in whichever tail is smaller so the residual is resolved in relative terms.
  const bool upper = epsilon < 0.5;
  const double tail = upper ? epsilon : 1.0 - epsilon;
  double z = inverse_normal_guess(tail);  // Phi(z) = tail, z < 0
  const double residual = normal_cdf(z) - tail;
  z -= residual / (kInvSqrt2Pi * std::exp(-0.5 * z * z));
  return {epsilon, upper ? -z : z};
}

}  // namespace ccopf
