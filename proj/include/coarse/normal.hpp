#pragma once

#include <cmath>
#include <numbers>

namespace coarse {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Pr[lo <= t <= hi] for t ~ N(mean, sd^2).
inline double normal_interval_mass(double mean, double sd, double lo, double hi) {
  return normal_cdf((hi - mean) / sd) - normal_cdf((lo - mean) / sd);
}

}  // namespace coarse
