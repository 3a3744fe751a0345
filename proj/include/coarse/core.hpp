#pragma once

// Domain types for coarse (set-valued) labels over a finite label domain, the
// generative samplers, exact pushforward laws and the distance/diagnostic
// helpers shared by the estimators.
//
// Labels are 0-based in memory. File formats use 1-based labels.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "coarse/errors.hpp"
#include "coarse/random.hpp"

namespace coarse {

using Label = std::size_t;

inline constexpr std::size_t kMaxLabels = 64;

/// A subset of the label domain [0, k), k <= 64. Equality is exact set equality.
class LabelSet {
 public:
  constexpr LabelSet() = default;

  static LabelSet of(std::span<const Label> labels) {
    LabelSet s;
    for (Label l : labels) s.insert(l);
    return s;
  }
  static LabelSet of(std::initializer_list<Label> labels) {
    return of(std::span<const Label>(labels.begin(), labels.size()));
  }
  static LabelSet full(std::size_t k) {
    check_size(k);
    LabelSet s;
    s.bits_ = (k == kMaxLabels) ? ~std::uint64_t{0} : ((std::uint64_t{1} << k) - 1);
    return s;
  }
  static constexpr LabelSet from_bits(std::uint64_t bits) {
    LabelSet s;
    s.bits_ = bits;
    return s;
  }

  void insert(Label l) {
    if (l >= kMaxLabels) throw InvalidArgument("label " + std::to_string(l) + " exceeds the 64-label limit");
    bits_ |= std::uint64_t{1} << l;
  }
  bool contains(Label l) const noexcept { return l < kMaxLabels && ((bits_ >> l) & 1u); }
  std::size_t size() const noexcept { return static_cast<std::size_t>(std::popcount(bits_)); }
  bool empty() const noexcept { return bits_ == 0; }
  std::uint64_t bits() const noexcept { return bits_; }
  /// Largest label + 1, or 0 for the empty set.
  std::size_t extent() const noexcept { return 64 - static_cast<std::size_t>(std::countl_zero(bits_)); }

  /// Sorted ascending.
  std::vector<Label> labels() const {
    std::vector<Label> out;
    out.reserve(size());
    for (std::uint64_t b = bits_; b; b &= b - 1) out.push_back(static_cast<Label>(std::countr_zero(b)));
    return out;
  }

  template <class Probs>
  double mass(const Probs& p) const {
    double m = 0.0;
    for (std::uint64_t b = bits_; b; b &= b - 1) m += p[static_cast<std::size_t>(std::countr_zero(b))];
    return m;
  }

  bool intersects(LabelSet other) const noexcept { return (bits_ & other.bits_) != 0; }

  friend constexpr bool operator==(LabelSet a, LabelSet b) noexcept { return a.bits_ == b.bits_; }
  friend constexpr auto operator<=>(LabelSet a, LabelSet b) noexcept { return a.bits_ <=> b.bits_; }

  static void check_size(std::size_t k) {
    if (k == 0 || k > kMaxLabels)
      throw InvalidArgument("label domain size must be in [1, 64], got " + std::to_string(k));
  }

 private:
  std::uint64_t bits_ = 0;
};

struct LabelSetHash {
  std::size_t operator()(LabelSet s) const noexcept { return std::hash<std::uint64_t>{}(s.bits()); }
};

namespace detail {

inline void check_probability_vector(std::span<const double> p, const char* what) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument(std::string(what) + ": entries must be finite and >= 0");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw InvalidArgument(std::string(what) + ": entries must sum to 1 (got " + std::to_string(sum) + ")");
}

// Index i with cumulative[i-1] <= u < cumulative[i].
inline std::size_t draw_from_cumulative(std::span<const double> cumulative, Rng& rng) {
  const double u = uniform01(rng) * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  if (it == cumulative.end()) --it;
  return static_cast<std::size_t>(it - cumulative.begin());
}

inline std::vector<double> cumulative_sum(std::span<const double> w) {
  std::vector<double> c(w.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) c[i] = (acc += w[i]);
  return c;
}

}  // namespace detail

/// Probability vector over k fine labels.
class DiscreteDistribution {
 public:
  explicit DiscreteDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
    if (probs_.empty()) throw InvalidArgument("DiscreteDistribution: empty probability vector");
    LabelSet::check_size(probs_.size());
    detail::check_probability_vector(probs_, "DiscreteDistribution");
    cumulative_ = detail::cumulative_sum(probs_);
  }

  /// Rescales nonnegative weights to sum to one.
  static DiscreteDistribution normalized(std::vector<double> weights) {
    double s = 0.0;
    for (double w : weights) s += w;
    if (!(s > 0.0)) throw InvalidArgument("DiscreteDistribution::normalized: weights must have positive sum");
    for (double& w : weights) w /= s;
    // absorb rounding into the largest entry
    double t = 0.0;
    for (double w : weights) t += w;
    *std::max_element(weights.begin(), weights.end()) += 1.0 - t;
    return DiscreteDistribution(std::move(weights));
  }

  static DiscreteDistribution uniform(std::size_t k) { return normalized(std::vector<double>(k, 1.0)); }

  std::size_t k() const noexcept { return probs_.size(); }
  double operator[](Label i) const { return probs_[i]; }
  const std::vector<double>& probs() const noexcept { return probs_; }

  Label sample(Rng& rng) const { return detail::draw_from_cumulative(cumulative_, rng); }

 private:
  std::vector<double> probs_;
  std::vector<double> cumulative_;
};

/// Disjoint nonempty cells covering [0, k).
class DiscretePartition {
 public:
  DiscretePartition(std::size_t k, std::vector<LabelSet> cells) : k_(k), cells_(std::move(cells)) {
    LabelSet::check_size(k);
    cell_of_.assign(k, cells_.size());
    for (std::size_t c = 0; c < cells_.size(); ++c) {
      if (cells_[c].empty()) throw InvalidArgument("DiscretePartition: empty cell");
      for (Label l : cells_[c].labels()) {
        if (l >= k) throw InvalidArgument("DiscretePartition: label " + std::to_string(l + 1) + " outside [1, k]");
        if (cell_of_[l] != cells_.size())
          throw InvalidArgument("DiscretePartition: label " + std::to_string(l + 1) + " appears in two cells");
        cell_of_[l] = c;
      }
    }
    for (Label l = 0; l < k; ++l)
      if (cell_of_[l] == cells_.size())
        throw InvalidArgument("DiscretePartition: label " + std::to_string(l + 1) + " is not covered");
  }

  static DiscretePartition singletons(std::size_t k) {
    std::vector<LabelSet> cells;
    for (Label l = 0; l < k; ++l) cells.push_back(LabelSet::of({l}));
    return DiscretePartition(k, std::move(cells));
  }

  std::size_t k() const noexcept { return k_; }
  const std::vector<LabelSet>& cells() const noexcept { return cells_; }
  LabelSet cell_containing(Label l) const { return cells_[cell_of_[l]]; }
  std::size_t cell_index(Label l) const { return cell_of_[l]; }

 private:
  std::size_t k_;
  std::vector<LabelSet> cells_;
  std::vector<std::size_t> cell_of_;
};

/// Finite mixture of partitions of [0, k).
class PartitionDistribution {
 public:
  PartitionDistribution(std::vector<DiscretePartition> partitions, std::vector<double> weights)
      : partitions_(std::move(partitions)), weights_(std::move(weights)) {
    if (partitions_.empty()) throw InvalidArgument("PartitionDistribution: needs at least one partition");
    if (partitions_.size() != weights_.size())
      throw InvalidArgument("PartitionDistribution: one weight per partition required");
    detail::check_probability_vector(weights_, "PartitionDistribution weights");
    for (const auto& p : partitions_)
      if (p.k() != partitions_.front().k()) throw InvalidArgument("PartitionDistribution: partitions disagree on k");
    cumulative_ = detail::cumulative_sum(weights_);
  }

  static PartitionDistribution single(DiscretePartition p) { return PartitionDistribution({std::move(p)}, {1.0}); }

  std::size_t k() const noexcept { return partitions_.front().k(); }
  const std::vector<DiscretePartition>& partitions() const noexcept { return partitions_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  const DiscretePartition& draw(Rng& rng) const { return partitions_[detail::draw_from_cumulative(cumulative_, rng)]; }

  LabelSet coarsen(Label z, Rng& rng) const { return draw(rng).cell_containing(z); }

 private:
  std::vector<DiscretePartition> partitions_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
};

/// Observed pair (context, cell); the fine label is never stored.
template <class Context>
struct CoarseExample {
  Context context;
  LabelSet cell;
};

/// Joint law over (context index, fine label) with finite context support.
class FineLabeledDistribution {
 public:
  /// joint[x][z] = Pr[context = x, label = z].
  explicit FineLabeledDistribution(std::vector<std::vector<double>> joint,
                                   std::vector<std::vector<double>> points = {})
      : joint_(std::move(joint)), points_(std::move(points)) {
    if (joint_.empty()) throw InvalidArgument("FineLabeledDistribution: empty support");
    k_ = joint_.front().size();
    LabelSet::check_size(k_);
    std::vector<double> flat;
    for (const auto& row : joint_) {
      if (row.size() != k_) throw InvalidArgument("FineLabeledDistribution: ragged joint table");
      flat.insert(flat.end(), row.begin(), row.end());
    }
    detail::check_probability_vector(flat, "FineLabeledDistribution");
    if (!points_.empty() && points_.size() != joint_.size())
      throw InvalidArgument("FineLabeledDistribution: one point per context required");
    cumulative_ = detail::cumulative_sum(flat);
  }

  std::size_t contexts() const noexcept { return joint_.size(); }
  std::size_t k() const noexcept { return k_; }
  double mass(std::size_t x, Label z) const { return joint_[x][z]; }
  const std::vector<std::vector<double>>& joint() const noexcept { return joint_; }
  const std::vector<std::vector<double>>& points() const noexcept { return points_; }

  std::vector<double> context_marginal() const {
    std::vector<double> m(contexts(), 0.0);
    for (std::size_t x = 0; x < contexts(); ++x)
      for (double v : joint_[x]) m[x] += v;
    return m;
  }

  std::vector<double> label_marginal() const {
    std::vector<double> m(k_, 0.0);
    for (const auto& row : joint_)
      for (Label z = 0; z < k_; ++z) m[z] += row[z];
    return m;
  }

  std::pair<std::size_t, Label> sample(Rng& rng) const {
    const std::size_t flat = detail::draw_from_cumulative(cumulative_, rng);
    return {flat / k_, flat % k_};
  }

 private:
  std::vector<std::vector<double>> joint_;
  std::vector<std::vector<double>> points_;
  std::size_t k_ = 0;
  std::vector<double> cumulative_;
};

inline void check_same_k(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw InvalidArgument(std::string(what) + ": label domains differ (" + std::to_string(a) + " vs " +
                          std::to_string(b) + ")");
}

/// Draws z ~ dist, a partition ~ pi, and returns the cell containing z.
inline LabelSet sample_coarse_discrete(const DiscreteDistribution& dist, const PartitionDistribution& pi, Rng& rng) {
  check_same_k(dist.k(), pi.k(), "sample_coarse_discrete");
  const Label z = dist.sample(rng);
  return pi.coarsen(z, rng);
}

inline CoarseExample<std::size_t> sample_coarse_labeled(const FineLabeledDistribution& d,
                                                        const PartitionDistribution& pi, Rng& rng) {
  check_same_k(d.k(), pi.k(), "sample_coarse_labeled");
  const auto [x, z] = d.sample(rng);
  return {x, pi.coarsen(z, rng)};
}

/// Distinct cells of pi (first-appearance order) and the linear coarsening map:
/// map[c][i] = total weight of partitions that contain cell c, if i is in c.
struct CoarseningMap {
  std::vector<LabelSet> cells;
  std::vector<std::vector<double>> map;

  std::vector<double> apply(std::span<const double> p) const {
    std::vector<double> out(cells.size(), 0.0);
    for (std::size_t c = 0; c < cells.size(); ++c)
      for (std::size_t i = 0; i < p.size(); ++i) out[c] += map[c][i] * p[i];
    return out;
  }
};

inline CoarseningMap coarsening_map(const PartitionDistribution& pi) {
  CoarseningMap m;
  const std::size_t k = pi.k();
  for (std::size_t s = 0; s < pi.partitions().size(); ++s) {
    for (LabelSet cell : pi.partitions()[s].cells()) {
      auto it = std::find(m.cells.begin(), m.cells.end(), cell);
      std::size_t c = static_cast<std::size_t>(it - m.cells.begin());
      if (it == m.cells.end()) {
        m.cells.push_back(cell);
        m.map.emplace_back(k, 0.0);
      }
      for (Label l : cell.labels()) m.map[c][l] += pi.weights()[s];
    }
  }
  return m;
}

/// Exact law of the observed cell; identical cells from different partitions are merged.
inline std::vector<std::pair<LabelSet, double>> coarse_pushforward(const DiscreteDistribution& dist,
                                                                    const PartitionDistribution& pi) {
  check_same_k(dist.k(), pi.k(), "coarse_pushforward");
  const CoarseningMap m = coarsening_map(pi);
  const std::vector<double> mass = m.apply(dist.probs());
  std::vector<std::pair<LabelSet, double>> out;
  out.reserve(m.cells.size());
  for (std::size_t c = 0; c < m.cells.size(); ++c) out.emplace_back(m.cells[c], mass[c]);
  return out;
}

/// Total variation distance ||p - q||_1 / 2.
inline double tv_discrete(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size())
    throw InvalidArgument("tv_discrete: length mismatch (" + std::to_string(p.size()) + " vs " +
                          std::to_string(q.size()) + ")");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

inline double tv_discrete(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  return tv_discrete(p.probs(), q.probs());
}

/// ||A delta||_1 / ||delta||_1 for one sum-zero direction.
inline double coarsening_ratio(const CoarseningMap& m, std::span<const double> delta) {
  double num = 0.0;
  double den = 0.0;
  for (double v : m.apply(delta)) num += std::abs(v);
  for (double v : delta) den += std::abs(v);
  return den > 0.0 ? num / den : 1.0;
}

/// Upper-bound estimate of the information-preservation constant of pi:
/// minimum L1 contraction of the coarsening map over every pairwise direction
/// e_i - e_j plus `trials` random sum-zero Gaussian directions.
inline double estimate_alpha(const PartitionDistribution& pi, std::size_t trials, Rng& rng) {
  if (trials < 1) throw InvalidArgument("estimate_alpha: trials must be >= 1");
  const std::size_t k = pi.k();
  if (k < 2) return 1.0;
  const CoarseningMap m = coarsening_map(pi);
  double best = 1.0;
  std::vector<double> delta(k);
  for (Label i = 0; i < k; ++i) {
    for (Label j = i + 1; j < k; ++j) {
      std::fill(delta.begin(), delta.end(), 0.0);
      delta[i] = 1.0;
      delta[j] = -1.0;
      best = std::min(best, coarsening_ratio(m, delta));
    }
  }
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t t = 0; t < trials; ++t) {
    double mean = 0.0;
    for (double& v : delta) mean += (v = gauss(rng));
    mean /= static_cast<double>(k);
    for (double& v : delta) v -= mean;
    best = std::min(best, coarsening_ratio(m, delta));
  }
  return best;
}

}  // namespace coarse
