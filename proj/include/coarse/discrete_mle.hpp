#pragma once

// Maximum-likelihood estimation of a discrete distribution from coarse samples.
//
// The empirical objective L(p) = (1/N) sum_n log p(S_n) is concave on the
// simplex. It is maximized over the floored simplex {p : sum p = 1, p_i >= floor}
// by projected gradient ascent with backtracking, starting from uniform. Labels
// never covered by any sample cell converge to the floor.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "coarse/core.hpp"

namespace coarse {

/// Distinct cells with nonnegative weights (counts or frequencies).
using WeightedCells = std::vector<std::pair<LabelSet, double>>;

inline WeightedCells aggregate_cells(std::span<const LabelSet> samples) {
  std::map<LabelSet, double> counts;
  for (LabelSet s : samples) counts[s] += 1.0;
  return WeightedCells(counts.begin(), counts.end());
}

struct StepRule {
  enum class Kind { backtracking, fixed };
  Kind kind = Kind::backtracking;
  double eta = 1.0;  // fixed step, or initial trial step for backtracking

  static StepRule backtracking() { return {}; }
  static StepRule fixed(double eta) { return {Kind::fixed, eta}; }
};

struct MleConfig {
  // Per-coordinate lower bound. Unset means epsilon / k.
  std::optional<double> floor;
  double epsilon = 1e-3;
  double tol = 1e-8;  // on the norm of the projected-gradient step
  std::size_t max_iters = 10000;
  StepRule step_rule;

  double resolved_floor(std::size_t k) const { return floor.value_or(epsilon / static_cast<double>(k)); }

  void validate(std::size_t k) const {
    const double f = resolved_floor(k);
    if (!(f > 0.0) || !(f * static_cast<double>(k) < 1.0))
      throw InvalidArgument("MleConfig: floor must satisfy 0 < floor * k < 1");
    if (!(tol > 0.0)) throw InvalidArgument("MleConfig: tol must be > 0");
    if (max_iters < 1) throw InvalidArgument("MleConfig: max_iters must be >= 1");
    if (!(step_rule.eta > 0.0)) throw InvalidArgument("MleConfig: step size must be > 0");
  }
};

struct MleFit {
  DiscreteDistribution dist;
  double objective = 0.0;
  double step_norm = 0.0;  // final projected-gradient step norm
  std::size_t iterations = 0;
  bool converged = false;
};

namespace detail {

inline double total_weight(const WeightedCells& cells) {
  double w = 0.0;
  for (const auto& [cell, weight] : cells) w += weight;
  return w;
}

inline void check_cells(const WeightedCells& cells, std::size_t k, const char* what) {
  for (const auto& [cell, weight] : cells) {
    if (cell.empty()) throw InvalidArgument(std::string(what) + ": empty sample cell");
    if (cell.extent() > k) throw InvalidArgument(std::string(what) + ": sample cell has a label outside [1, k]");
    if (!(weight >= 0.0)) throw InvalidArgument(std::string(what) + ": negative sample weight");
  }
}

inline double loglik(std::span<const double> p, const WeightedCells& cells, double total) {
  double s = 0.0;
  for (const auto& [cell, w] : cells) {
    if (w == 0.0) continue;
    const double m = cell.mass(p);
    if (!(m > 0.0)) throw DomainError("empirical_log_likelihood: sample cell has zero mass");
    s += w * std::log(m);
  }
  return s / total;
}

inline std::vector<double> gradient(std::span<const double> p, const WeightedCells& cells, double total) {
  std::vector<double> g(p.size(), 0.0);
  for (const auto& [cell, w] : cells) {
    if (w == 0.0) continue;
    const double m = cell.mass(p);
    if (!(m > 0.0)) throw DomainError("likelihood_gradient: sample cell has zero mass");
    const double c = w / (m * total);
    for (Label l : cell.labels()) g[l] += c;
  }
  return g;
}

// L(p + d) - L(p) without cancellation: sum_n w log1p(d(S_n) / p(S_n)).
inline double loglik_change(std::span<const double> p, std::span<const double> d, const WeightedCells& cells,
                            double total) {
  double s = 0.0;
  for (const auto& [cell, w] : cells) {
    if (w == 0.0) continue;
    const double m = cell.mass(p);
    const double r = cell.mass(d) / m;
    if (!(r > -1.0)) return -std::numeric_limits<double>::infinity();
    s += w * std::log1p(r);
  }
  return s / total;
}

}  // namespace detail

/// Euclidean projection of y onto {p : sum p = 1, p_i >= floor}.
inline std::vector<double> project_floored_simplex(std::span<const double> y, double floor) {
  const std::size_t k = y.size();
  const double budget = 1.0 - floor * static_cast<double>(k);
  std::vector<double> u(y.begin(), y.end());
  for (double& v : u) v -= floor;
  std::vector<double> sorted = u;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cum = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    cum += sorted[j];
    const double t = (cum - budget) / static_cast<double>(j + 1);
    if (sorted[j] - t > 0.0) theta = t;
  }
  std::vector<double> p(k);
  for (std::size_t i = 0; i < k; ++i) p[i] = std::max(u[i] - theta, 0.0) + floor;
  return p;
}

inline double empirical_log_likelihood(const DiscreteDistribution& p, const WeightedCells& cells) {
  detail::check_cells(cells, p.k(), "empirical_log_likelihood");
  const double total = detail::total_weight(cells);
  if (!(total > 0.0)) throw InvalidArgument("empirical_log_likelihood: no samples");
  return detail::loglik(p.probs(), cells, total);
}

/// (1/N) sum_n log(sum_{i in S_n} p_i).
inline double empirical_log_likelihood(const DiscreteDistribution& p, std::span<const LabelSet> samples) {
  return empirical_log_likelihood(p, aggregate_cells(samples));
}

inline std::vector<double> likelihood_gradient(const DiscreteDistribution& p, const WeightedCells& cells) {
  detail::check_cells(cells, p.k(), "likelihood_gradient");
  const double total = detail::total_weight(cells);
  if (!(total > 0.0)) throw InvalidArgument("likelihood_gradient: no samples");
  return detail::gradient(p.probs(), cells, total);
}

/// d/dp_i = (1/N) sum_n 1{i in S_n} / p(S_n).
inline std::vector<double> likelihood_gradient(const DiscreteDistribution& p, std::span<const LabelSet> samples) {
  return likelihood_gradient(p, aggregate_cells(samples));
}

inline MleFit mle_fit(const WeightedCells& cells, std::size_t k, const MleConfig& cfg) {
  LabelSet::check_size(k);
  cfg.validate(k);
  detail::check_cells(cells, k, "mle_fit");
  const double total = detail::total_weight(cells);
  if (cells.empty() || !(total > 0.0)) throw InvalidArgument("mle_fit: empty sample list");

  const double floor = cfg.resolved_floor(k);
  std::vector<double> p(k, 1.0 / static_cast<double>(k));
  double obj = detail::loglik(p, cells, total);
  double step = cfg.step_rule.eta;
  const bool fixed = cfg.step_rule.kind == StepRule::Kind::fixed;

  MleFit fit{DiscreteDistribution::uniform(k)};
  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    fit.iterations = it + 1;
    const std::vector<double> g = detail::gradient(p, cells, total);

    // stationarity: norm of the unit-step gradient mapping
    {
      std::vector<double> y(k);
      for (std::size_t i = 0; i < k; ++i) y[i] = p[i] + g[i];
      const std::vector<double> q = project_floored_simplex(y, floor);
      double n2 = 0.0;
      for (std::size_t i = 0; i < k; ++i) n2 += (q[i] - p[i]) * (q[i] - p[i]);
      fit.step_norm = std::sqrt(n2);
      if (fit.step_norm <= cfg.tol) {
        fit.converged = true;
        break;
      }
    }

    bool accepted = false;
    for (int trial = 0; trial < 60 && !accepted; ++trial) {
      std::vector<double> y(k);
      for (std::size_t i = 0; i < k; ++i) y[i] = p[i] + step * g[i];
      std::vector<double> cand = project_floored_simplex(y, floor);
      std::vector<double> d(k);
      double lin = 0.0, sq = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        d[i] = cand[i] - p[i];
        lin += g[i] * d[i];
        sq += d[i] * d[i];
      }
      const double gain = detail::loglik_change(p, d, cells, total);
      // a fixed step is taken as is; near the optimum the gain is lost in rounding
      const bool sufficient = fixed || (gain >= lin - sq / (2.0 * step) && gain >= 0.0);
      if (sufficient && sq > 0.0) {
        p = std::move(cand);
        obj = detail::loglik(p, cells, total);
        accepted = true;
      } else {
        step *= 0.5;
      }
    }
    if (!accepted) break;  // no ascent step at machine precision
    if (!fixed) step *= 2.0;
  }

  // rounding of the projection can leave |sum - 1| ~ 1e-16
  double s = 0.0;
  for (double v : p) s += v;
  *std::max_element(p.begin(), p.end()) += 1.0 - s;
  fit.dist = DiscreteDistribution(std::move(p));
  fit.objective = obj;
  return fit;
}

/// The rng is accepted for interface uniformity; the optimizer is deterministic.
inline MleFit mle_fit(std::span<const LabelSet> samples, std::size_t k, const MleConfig& cfg, Rng& /*rng*/) {
  if (samples.empty()) throw InvalidArgument("mle_fit: empty sample list");
  return mle_fit(aggregate_cells(samples), k, cfg);
}

}  // namespace coarse
