#pragma once

// Statistical queries over fine labels answered from coarse examples only.
//
// E[q(x,z)] = sum_j E[q(x,j) 1{z=j}], and each term with f = q(.,j) in [0,1]
// factors as E[f(x)] * Pr_{D^f}[z = j] where D^f is the law of examples
// accepted with probability f(x). The first factor is a plain mean over
// contexts; the second is the fine-label marginal of the accepted coarse
// cells, recovered by coarse-label MLE. Signed queries are split as f+ - f-.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "coarse/core.hpp"
#include "coarse/discrete_mle.hpp"
#include "coarse/parallel.hpp"
#include "json.hpp"

namespace coarse {

/// Bounded query q : X x [k] -> [-1, 1]. Out-of-range values are clamped and counted.
template <class Context>
class QueryFunction {
 public:
  using Eval = std::function<double(const Context&, Label)>;

  QueryFunction(Eval eval, std::size_t k)
      : eval_(std::move(eval)), k_(k), clamped_(std::make_shared<std::atomic<std::size_t>>(0)) {
    LabelSet::check_size(k);
  }

  double operator()(const Context& x, Label z) const {
    const double v = eval_(x, z);
    if (v > 1.0 || v < -1.0 || std::isnan(v)) {
      clamped_->fetch_add(1, std::memory_order_relaxed);
      return std::isnan(v) ? 0.0 : std::clamp(v, -1.0, 1.0);
    }
    return v;
  }

  std::size_t k() const noexcept { return k_; }
  std::size_t clamped_evaluations() const noexcept { return clamped_->load(); }

 private:
  Eval eval_;
  std::size_t k_;
  std::shared_ptr<std::atomic<std::size_t>> clamped_;
};

/// Context function into [0, 1].
template <class Context>
using ContextFunction = std::function<double(const Context&)>;

/// Pointwise split q(., j) = f_plus - f_minus with both parts in [0, 1].
template <class Context>
std::pair<ContextFunction<Context>, ContextFunction<Context>> decompose_query(const QueryFunction<Context>& q,
                                                                              Label j) {
  if (j >= q.k()) throw InvalidArgument("decompose_query: label outside [1, k]");
  ContextFunction<Context> plus = [q, j](const Context& x) { return std::max(q(x, j), 0.0); };
  ContextFunction<Context> minus = [q, j](const Context& x) { return std::max(-q(x, j), 0.0); };
  return {plus, minus};
}

/// i.i.d. coarse examples.
template <class Context>
class CoarseOracle {
 public:
  using Draw = std::function<CoarseExample<Context>(Rng&)>;
  explicit CoarseOracle(Draw draw) : draw_(std::move(draw)) {}
  CoarseExample<Context> draw(Rng& rng) const { return draw_(rng); }

 private:
  Draw draw_;
};

/// Replays a recorded dataset in order; throws BudgetExhausted once it runs out.
template <class Context>
CoarseOracle<Context> finite_dataset_oracle(std::vector<CoarseExample<Context>> data) {
  struct State {
    std::vector<CoarseExample<Context>> data;
    std::size_t next = 0;
    std::mutex mutex;
  };
  auto state = std::make_shared<State>();
  state->data = std::move(data);
  return CoarseOracle<Context>([state](Rng&) {
    std::lock_guard lock(state->mutex);
    if (state->next >= state->data.size())
      throw BudgetExhausted("finite dataset oracle exhausted after " + std::to_string(state->next) + " examples",
                            state->next);
    return state->data[state->next++];
  });
}

/// Caps an oracle at `max_draws` examples.
template <class Context>
CoarseOracle<Context> budget_limited(CoarseOracle<Context> inner, std::size_t max_draws) {
  auto drawn = std::make_shared<std::atomic<std::size_t>>(0);
  return CoarseOracle<Context>([inner = std::move(inner), drawn, max_draws](Rng& rng) {
    const std::size_t n = drawn->fetch_add(1);
    if (n >= max_draws)
      throw BudgetExhausted("sample budget of " + std::to_string(max_draws) + " examples exhausted", n);
    return inner.draw(rng);
  });
}

/// Serializes draws through a mutex for oracles that are not thread-safe.
template <class Context>
CoarseOracle<Context> synchronized(CoarseOracle<Context> inner) {
  auto mutex = std::make_shared<std::mutex>();
  return CoarseOracle<Context>([inner = std::move(inner), mutex](Rng& rng) {
    std::lock_guard lock(*mutex);
    return inner.draw(rng);
  });
}

/// Oracle for a finite fine-labeled law coarsened by pi.
inline CoarseOracle<std::size_t> labeled_oracle(FineLabeledDistribution d, PartitionDistribution pi) {
  check_same_k(d.k(), pi.k(), "labeled_oracle");
  auto dd = std::make_shared<const FineLabeledDistribution>(std::move(d));
  auto pp = std::make_shared<const PartitionDistribution>(std::move(pi));
  return CoarseOracle<std::size_t>([dd, pp](Rng& rng) { return sample_coarse_labeled(*dd, *pp, rng); });
}

/// Accuracy targets, assumed information preservation, sample-size constants and
/// the running count of examples drawn.
struct SqBudget {
  double tau = 0.1;
  double delta = 0.1;
  double alpha = 1.0;
  double hoeffding_const = 8.0;  // N1 = ceil(c1 log(2/delta_c) / rho^2)
  double mle_const = 4.0;        // N2 = ceil(c2 k log(2/delta_c) / (rho^3 alpha^2))
  std::size_t samples_drawn = 0;

  void validate() const {
    if (!(tau > 0.0 && tau < 1.0)) throw InvalidArgument("SqBudget: tau must lie in (0, 1)");
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("SqBudget: delta must lie in (0, 1)");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidArgument("SqBudget: alpha must lie in (0, 1]");
    if (!(hoeffding_const > 0.0) || !(mle_const > 0.0)) throw InvalidArgument("SqBudget: constants must be > 0");
  }
};

inline std::size_t hoeffding_sample_size(double rho, double delta_c, double c1) {
  return static_cast<std::size_t>(std::ceil(c1 * std::log(2.0 / delta_c) / (rho * rho)));
}

inline std::size_t mle_sample_size(double rho, double delta_c, std::size_t k, double alpha, double c2) {
  return static_cast<std::size_t>(
      std::ceil(c2 * static_cast<double>(k) * std::log(2.0 / delta_c) / (rho * rho * rho * alpha * alpha)));
}

/// Per-component tolerance parameter for a stat query over k labels.
inline double component_rho(double tau, std::size_t k) { return tau / (4.0 * static_cast<double>(k)); }

/// Upper bound on the examples one stat_query can draw: N1 + N2 at rho = tau/(4k), delta_c = delta/(2k).
inline std::size_t stat_query_sample_bound(const SqBudget& b, std::size_t k) {
  const double rho = component_rho(b.tau, k);
  const double dc = b.delta / (2.0 * static_cast<double>(k));
  return hoeffding_sample_size(rho, dc, b.hoeffding_const) + mle_sample_size(rho, dc, k, b.alpha, b.mle_const);
}

template <class Context>
std::vector<CoarseExample<Context>> draw_batch(const CoarseOracle<Context>& oracle, std::size_t n, Rng& rng,
                                               SqBudget& budget) {
  std::vector<CoarseExample<Context>> batch;
  batch.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    try {
      batch.push_back(oracle.draw(rng));
    } catch (const BudgetExhausted& e) {
      budget.samples_drawn += batch.size();
      throw BudgetExhausted(e.what(), budget.samples_drawn);
    }
  }
  budget.samples_drawn += n;
  return batch;
}

/// Indices of examples kept when example n is accepted with probability accept[n].
inline std::vector<std::size_t> rejection_accept(std::span<const double> accept, Rng& rng) {
  std::vector<std::size_t> kept;
  for (std::size_t n = 0; n < accept.size(); ++n)
    if (accept[n] > 0.0 && uniform01(rng) < accept[n]) kept.push_back(n);
  return kept;
}

struct SqComponentResult {
  double value = 0.0;
  double mean_f = 0.0;       // Hoeffding-stage estimate of E[f(x)]
  double label_prob = 0.0;   // MLE estimate of Pr_{D^f}[z = j]
  bool early_exit = false;
  std::size_t accepted = 0;
};

namespace detail {

// f_stage1[n], f_stage2[n]: values of f on the two batches.
template <class Context>
SqComponentResult sq_component_from_batches(std::span<const double> f_stage1, std::span<const double> f_stage2,
                                            const std::vector<CoarseExample<Context>>& stage2, Label j,
                                            std::size_t k, double rho, Rng& rng) {
  SqComponentResult r;
  double s = 0.0;
  for (double v : f_stage1) s += v;
  r.mean_f = f_stage1.empty() ? 0.0 : s / static_cast<double>(f_stage1.size());
  if (r.mean_f <= rho) {
    r.early_exit = true;
    return r;
  }
  std::map<LabelSet, double> counts;
  for (std::size_t n : rejection_accept(f_stage2, rng)) counts[stage2[n].cell] += 1.0;
  for (const auto& [cell, c] : counts) r.accepted += static_cast<std::size_t>(c);
  if (r.accepted == 0) return r;
  MleConfig cfg;
  cfg.epsilon = rho;
  const MleFit fit = mle_fit(WeightedCells(counts.begin(), counts.end()), k, cfg);
  r.label_prob = fit.dist[j];
  r.value = r.mean_f * r.label_prob;
  return r;
}

}  // namespace detail

/// Estimates E[f(x) 1{z = j}] from coarse examples to within O(rho) with
/// probability >= 1 - delta. Draws N1 examples for the mean of f and, unless
/// that mean is <= rho, N2 more for rejection sampling plus MLE.
template <class Context>
SqComponentResult sq_component(const ContextFunction<Context>& f, Label j, std::size_t k, double rho,
                               double delta, const CoarseOracle<Context>& oracle, SqBudget& budget, Rng& rng) {
  if (!(rho > 0.0 && rho < 1.0)) throw InvalidArgument("sq_component: rho must lie in (0, 1)");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("sq_component: delta must lie in (0, 1)");
  if (j >= k) throw InvalidArgument("sq_component: label outside [1, k]");
  budget.validate();
  const auto stage1 = draw_batch(oracle, hoeffding_sample_size(rho, delta, budget.hoeffding_const), rng, budget);
  std::vector<double> f1(stage1.size());
  for (std::size_t n = 0; n < stage1.size(); ++n) f1[n] = std::clamp(f(stage1[n].context), 0.0, 1.0);
  double s = 0.0;
  for (double v : f1) s += v;
  if (s / static_cast<double>(f1.size()) <= rho) {
    SqComponentResult r;
    r.mean_f = s / static_cast<double>(f1.size());
    r.early_exit = true;
    return r;
  }
  const auto stage2 =
      draw_batch(oracle, mle_sample_size(rho, delta, k, budget.alpha, budget.mle_const), rng, budget);
  std::vector<double> f2(stage2.size());
  for (std::size_t n = 0; n < stage2.size(); ++n) f2[n] = std::clamp(f(stage2[n].context), 0.0, 1.0);
  return detail::sq_component_from_batches<Context>(f1, f2, stage2, j, k, rho, rng);
}

struct StatQueryResult {
  double estimate = 0.0;
  double tau = 0.0;
  double delta = 0.0;
  std::size_t samples_drawn = 0;
  std::size_t clamped_evaluations = 0;
  // index 2j: positive part of label j, 2j+1: negative part
  std::vector<SqComponentResult> components;
};

inline nlohmann::json to_json(const StatQueryResult& r) {
  return {{"estimate", r.estimate}, {"tau", r.tau}, {"delta", r.delta}, {"samples_drawn", r.samples_drawn}};
}

/// Estimates E_{(x,z)~D}[q(x,z)] to within tau with probability >= 1 - delta.
/// All 2k components share one Hoeffding batch and one acceptance batch; each
/// component flips its own acceptance coins from a derived stream.
template <class Context>
StatQueryResult stat_query(const QueryFunction<Context>& q, const CoarseOracle<Context>& oracle, SqBudget& budget,
                           Rng& rng) {
  budget.validate();
  const std::size_t k = q.k();
  const double rho = component_rho(budget.tau, k);
  const double delta_c = budget.delta / (2.0 * static_cast<double>(k));
  const std::size_t before = budget.samples_drawn;
  const std::size_t clamped_before = q.clamped_evaluations();

  // values[j][n] = q(x_n, j)
  auto evaluate = [&](const std::vector<CoarseExample<Context>>& batch) {
    std::vector<std::vector<double>> values(k, std::vector<double>(batch.size()));
    for (std::size_t n = 0; n < batch.size(); ++n)
      for (Label j = 0; j < k; ++j) values[j][n] = q(batch[n].context, j);
    return values;
  };
  auto split = [](const std::vector<double>& v, bool positive) {
    std::vector<double> out(v.size());
    for (std::size_t n = 0; n < v.size(); ++n) out[n] = std::max(positive ? v[n] : -v[n], 0.0);
    return out;
  };

  const auto stage1 = draw_batch(oracle, hoeffding_sample_size(rho, delta_c, budget.hoeffding_const), rng, budget);
  const auto v1 = evaluate(stage1);
  std::vector<std::vector<double>> f1(2 * k);
  bool any_active = false;
  for (Label j = 0; j < k; ++j) {
    for (int sign = 0; sign < 2; ++sign) {
      auto& f = f1[2 * j + sign] = split(v1[j], sign == 0);
      double s = 0.0;
      for (double v : f) s += v;
      if (s / static_cast<double>(f.size()) > rho) any_active = true;
    }
  }

  std::vector<CoarseExample<Context>> stage2;
  std::vector<std::vector<double>> v2(k);
  if (any_active) {
    stage2 = draw_batch(oracle, mle_sample_size(rho, delta_c, k, budget.alpha, budget.mle_const), rng, budget);
    v2 = evaluate(stage2);
  }

  std::vector<Rng> streams;
  streams.reserve(2 * k);
  for (std::size_t c = 0; c < 2 * k; ++c) streams.push_back(derive_stream(rng));

  StatQueryResult out;
  out.components.resize(2 * k);
  parallel_for(2 * k, [&](std::size_t c) {
    const Label j = c / 2;
    const std::vector<double> f2 = any_active ? split(v2[j], c % 2 == 0) : std::vector<double>{};
    out.components[c] = detail::sq_component_from_batches<Context>(f1[c], f2, stage2, j, k, rho, streams[c]);
  });

  for (std::size_t c = 0; c < 2 * k; ++c) out.estimate += (c % 2 == 0 ? 1.0 : -1.0) * out.components[c].value;
  out.tau = budget.tau;
  out.delta = budget.delta;
  out.samples_drawn = budget.samples_drawn - before;
  out.clamped_evaluations = q.clamped_evaluations() - clamped_before;
  return out;
}

// Exact quantities on finite instances.

inline double exact_expectation(const FineLabeledDistribution& d, const QueryFunction<std::size_t>& q) {
  double s = 0.0;
  for (std::size_t x = 0; x < d.contexts(); ++x)
    for (Label z = 0; z < d.k(); ++z) s += d.mass(x, z) * q(x, z);
  return s;
}

/// E[f(x)] under the context marginal.
inline double exact_mean_f(const FineLabeledDistribution& d, const ContextFunction<std::size_t>& f) {
  const auto px = d.context_marginal();
  double s = 0.0;
  for (std::size_t x = 0; x < d.contexts(); ++x) s += f(x) * px[x];
  return s;
}

/// Law of accepted contexts, f(x) D_x(x) / E[f].
inline std::vector<double> acceptance_context_marginal(const FineLabeledDistribution& d,
                                                       const ContextFunction<std::size_t>& f) {
  const auto px = d.context_marginal();
  const double ef = exact_mean_f(d, f);
  if (!(ef > 0.0)) throw DomainError("acceptance_context_marginal: E[f] = 0");
  std::vector<double> out(d.contexts());
  for (std::size_t x = 0; x < d.contexts(); ++x) out[x] = f(x) * px[x] / ef;
  return out;
}

/// Fine-label marginal of accepted examples, Pr_{D^f}[z = j].
inline std::vector<double> acceptance_label_marginal(const FineLabeledDistribution& d,
                                                     const ContextFunction<std::size_t>& f) {
  const double ef = exact_mean_f(d, f);
  if (!(ef > 0.0)) throw DomainError("acceptance_label_marginal: E[f] = 0");
  std::vector<double> out(d.k(), 0.0);
  for (std::size_t x = 0; x < d.contexts(); ++x)
    for (Label z = 0; z < d.k(); ++z) out[z] += f(x) * d.mass(x, z) / ef;
  return out;
}

/// Tabulated query over context indices, loaded from CSV lines `x_index,z,value`
/// (x_index 0-based, z 1-based). Missing entries are 0; a non-numeric first line is a header.
inline QueryFunction<std::size_t> read_query_csv(std::istream& in, std::size_t contexts, std::size_t k) {
  auto table = std::make_shared<std::vector<double>>(contexts * k, 0.0);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c))
      throw ParseError("expected x_index,z,value", lineno, 1);
    long long x = 0, z = 0;
    double v = 0.0;
    try {
      x = std::stoll(a);
      z = std::stoll(b);
      v = std::stod(c);
    } catch (...) {
      if (lineno == 1) continue;
      throw ParseError("non-numeric field", lineno, 1);
    }
    if (x < 0 || static_cast<std::size_t>(x) >= contexts) throw ParseError("x_index out of range", lineno, 1);
    if (z < 1 || static_cast<std::size_t>(z) > k) throw ParseError("z outside [1, k]", lineno, a.size() + 2);
    table->at(static_cast<std::size_t>(x) * k + static_cast<std::size_t>(z - 1)) = v;
  }
  return QueryFunction<std::size_t>([table, k](const std::size_t& x, Label z) { return (*table)[x * k + z]; }, k);
}

}  // namespace coarse
