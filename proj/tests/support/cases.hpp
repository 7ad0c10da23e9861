#pragma once

#include <cmath>

#include "ccopf/case_model.hpp"

namespace ccopf::testing {

/// Standard normal CDF from the Maclaurin series of erf, in long double.
/// Slow and only accurate for moderate |x|, but shares nothing with the
/// library's rational approximation.
inline long double phi_series(long double x) {
  const long double z = x / std::sqrt(2.0L);
  long double term = z, sum = z;
  for (int n = 1; n < 400; ++n) {
    term *= -z * z / n;
    const long double add = term / (2 * n + 1);
    sum += add;
    if (std::fabs(add) < 1e-30L) break;
  }
  return 0.5L + sum / std::sqrt(3.14159265358979323846264338327950288L);
}

/// Upper-tail quantile by bisection on phi_series.
inline double quantile_bisect(double epsilon) {
  long double lo = -8, hi = 8;
  for (int i = 0; i < 200; ++i) {
    const long double mid = 0.5L * (lo + hi);
    if (phi_series(mid) < 1.0L - epsilon)
      lo = mid;
    else
      hi = mid;
  }
  return static_cast<double>(0.5L * (lo + hi));
}

inline NetworkCase two_bus(double reactance = 0.5) {
  NetworkCase c;
  c.reference_bus = 1;
  c.buses = {{1, 0.0, 0.0}, {2, 50.0, 0.0}};
  c.generators = {{1, 0.0, 100.0, 20.0, 5.0}};
  c.branches = {{1, 2, reactance, std::nullopt}};
  return c;
}

inline NetworkCase triangle() {
  NetworkCase c;
  c.reference_bus = 1;
  c.buses = {{1, 0.0, 0.0}, {2, 30.0, 0.0}, {3, 30.0, 0.0}};
  c.generators = {{1, 0.0, 100.0, 20.0, 5.0}, {3, 0.0, 100.0, 30.0, 5.0}};
  c.branches = {{1, 2, 1.0, std::nullopt}, {2, 3, 1.0, std::nullopt}, {1, 3, 1.0, std::nullopt}};
  return c;
}

inline NetworkCase with_sigma(NetworkCase c, double value) {
  for (auto& b : c.buses) b.sigma = value;
  return c;
}

inline NetworkCase without_ratings(NetworkCase c) {
  for (auto& b : c.branches) b.rating.reset();
  return c;
}

inline NetworkCase scaled_costs(NetworkCase c, double k) {
  for (auto& g : c.generators) {
    g.cost_energy *= k;
    g.cost_reserve *= k;
  }
  return c;
}

}  // namespace ccopf::testing
