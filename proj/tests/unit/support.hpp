#pragma once

#include <cmath>
#include <cstddef>

namespace hcirl::testing {

/// |count - n p| <= z sqrt(n p (1 - p)).
inline bool within_binomial(std::size_t count, std::size_t n, double p, double z = 3.0) {
  const double mean = static_cast<double>(n) * p;
  const double sd = std::sqrt(static_cast<double>(n) * p * (1.0 - p));
  return std::abs(static_cast<double>(count) - mean) <= z * sd;
}

/// P(X >= k) for X ~ Binomial(n, p), by direct summation.
inline double binomial_tail(int n, int k, double p) {
  double total = 0.0;
  for (int j = k; j <= n; ++j) {
    double c = 1.0;
    for (int i = 0; i < j; ++i) c = c * (n - i) / (i + 1);
    total += c * std::pow(p, j) * std::pow(1.0 - p, n - j);
  }
  return total;
}

}  // namespace hcirl::testing
