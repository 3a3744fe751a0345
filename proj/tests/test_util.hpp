#pragma once

#include <cmath>
#include <vector>

#include "coarse/core.hpp"

namespace testutil {

// Binomial standard error of a frequency with true probability p over n draws.
inline double binom_se(double p, std::size_t n) { return std::sqrt(p * (1.0 - p) / static_cast<double>(n)); }

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& v) {
  double s = 0.0, s2 = 0.0;
  for (double x : v) {
    s += x;
    s2 += x * x;
  }
  const double n = static_cast<double>(v.size());
  const double m = s / n;
  return {m, std::sqrt(std::max(0.0, s2 / n - m * m) / (n - 1.0))};
}

inline std::vector<double> random_simplex_point(std::size_t k, double floor, coarse::Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> p(k);
  double s = 0.0;
  for (double& v : p) s += (v = e(rng));
  const double budget = 1.0 - floor * static_cast<double>(k);
  for (double& v : p) v = floor + budget * v / s;
  return p;
}

// Random partition of [0, k) into at most `max_cells` nonempty cells.
inline coarse::DiscretePartition random_partition(std::size_t k, std::size_t max_cells, coarse::Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, max_cells - 1);
  std::vector<coarse::LabelSet> cells(max_cells);
  for (coarse::Label l = 0; l < k; ++l) cells[pick(rng)].insert(l);
  std::vector<coarse::LabelSet> nonempty;
  for (auto c : cells)
    if (!c.empty()) nonempty.push_back(c);
  return coarse::DiscretePartition(k, nonempty);
}

inline coarse::PartitionDistribution random_partition_distribution(std::size_t k, std::size_t parts,
                                                                   coarse::Rng& rng) {
  std::vector<coarse::DiscretePartition> ps;
  for (std::size_t i = 0; i < parts; ++i) ps.push_back(random_partition(k, k, rng));
  auto w = coarse::DiscreteDistribution::normalized(random_simplex_point(parts, 0.0, rng)).probs();
  return coarse::PartitionDistribution(std::move(ps), w);
}

}  // namespace testutil
