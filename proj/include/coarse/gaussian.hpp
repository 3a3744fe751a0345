#pragma once

// Gaussian mean estimation from coarse observations: the latent z ~ N(mu*, I)
// is reported only through the cell of a randomly drawn partition of R^d that
// contains it. With convex cells, mu -> log N(mu; S) is concave and its
// gradient is E_{N_S(mu, I)}[x] - mu, estimated here by rejection sampling.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "coarse/errors.hpp"
#include "coarse/normal.hpp"
#include "coarse/parallel.hpp"
#include "coarse/random.hpp"

namespace coarse {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Membership-oracle set descriptor. Built-in constructors are convex except
/// complement(), which is flagged non-convex and rejected by the fitter.
class ConvexSet {
 public:
  // {x : w.x <= c}
  struct Halfspace {
    Vector w;
    double c;
  };
  // lo <= x <= hi coordinatewise; infinite bounds allowed, lo == hi is a degenerate coordinate
  struct Box {
    Vector lo, hi;
  };
  struct Ball {
    Vector center;
    double radius;
  };
  // {x : (x - center)^T precision (x - center) <= q}
  struct Ellipsoid {
    Matrix precision;
    Vector center;
    double q;
  };
  struct Intersection {
    std::vector<ConvexSet> parts;
  };
  // {y : inner contains A y + b}, the image of inner under the inverse affine map
  struct Affine {
    Matrix a;
    Vector b;
    std::vector<ConvexSet> inner;  // exactly one
  };
  struct Whole {};
  struct Complement {
    std::vector<ConvexSet> inner;  // exactly one
  };
  using Node = std::variant<Halfspace, Box, Ball, Ellipsoid, Intersection, Affine, Whole, Complement>;

  ConvexSet() : node_(std::make_shared<const Node>(Whole{})) {}

  static ConvexSet halfspace(Vector w, double c) { return ConvexSet(Halfspace{std::move(w), c}); }
  static ConvexSet box(Vector lo, Vector hi) {
    if (lo.size() != hi.size()) throw InvalidArgument("box: bound dimensions differ");
    for (Eigen::Index i = 0; i < lo.size(); ++i)
      if (!(lo[i] <= hi[i])) throw InvalidArgument("box: lo > hi");
    return ConvexSet(Box{std::move(lo), std::move(hi)});
  }
  static ConvexSet ball(Vector center, double radius) {
    if (!(radius >= 0.0)) throw InvalidArgument("ball: negative radius");
    return ConvexSet(Ball{std::move(center), radius});
  }
  static ConvexSet ellipsoid(Matrix precision, Vector center, double q) {
    if (precision.rows() != precision.cols() || precision.rows() != center.size())
      throw InvalidArgument("ellipsoid: shape mismatch");
    return ConvexSet(Ellipsoid{std::move(precision), std::move(center), q});
  }
  static ConvexSet intersection(std::vector<ConvexSet> parts) { return ConvexSet(Intersection{std::move(parts)}); }
  static ConvexSet affine(Matrix a, Vector b, ConvexSet inner) {
    if (a.rows() != b.size()) throw InvalidArgument("affine: shape mismatch");
    return ConvexSet(Affine{std::move(a), std::move(b), {std::move(inner)}});
  }
  static ConvexSet whole() { return ConvexSet(); }
  static ConvexSet complement(ConvexSet inner) { return ConvexSet(Complement{{std::move(inner)}}); }

  bool contains(const Vector& x) const { return contains_node(*node_, x); }

  bool is_convex() const { return convex_node(*node_); }

  const Node& node() const noexcept { return *node_; }
  bool is_whole() const noexcept { return std::holds_alternative<Whole>(*node_); }

  /// Identity of the underlying descriptor; copies of one set share it.
  const void* identity() const noexcept { return node_.get(); }

 private:
  explicit ConvexSet(Node n) : node_(std::make_shared<const Node>(std::move(n))) {}

  static bool contains_node(const Node& n, const Vector& x) {
    return std::visit(
        [&x](const auto& s) -> bool {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Halfspace>) {
            return s.w.dot(x) <= s.c;
          } else if constexpr (std::is_same_v<T, Box>) {
            for (Eigen::Index i = 0; i < x.size(); ++i)
              if (x[i] < s.lo[i] || x[i] > s.hi[i]) return false;
            return true;
          } else if constexpr (std::is_same_v<T, Ball>) {
            return (x - s.center).squaredNorm() <= s.radius * s.radius;
          } else if constexpr (std::is_same_v<T, Ellipsoid>) {
            const Vector d = x - s.center;
            return d.dot(s.precision * d) <= s.q;
          } else if constexpr (std::is_same_v<T, Intersection>) {
            for (const auto& p : s.parts)
              if (!p.contains(x)) return false;
            return true;
          } else if constexpr (std::is_same_v<T, Affine>) {
            return s.inner.front().contains(s.a * x + s.b);
          } else if constexpr (std::is_same_v<T, Whole>) {
            return true;
          } else {
            return !s.inner.front().contains(x);
          }
        },
        n);
  }

  static bool convex_node(const Node& n) {
    if (std::holds_alternative<Complement>(n)) return false;
    if (const auto* i = std::get_if<Intersection>(&n)) {
      for (const auto& p : i->parts)
        if (!p.is_convex()) return false;
      return true;
    }
    if (const auto* a = std::get_if<Affine>(&n)) return a->inner.front().is_convex();
    return true;
  }

  std::shared_ptr<const Node> node_;
};

/// A cell reported by a partition: the set, a key identifying the cell within
/// the partition, and a coarse region index (cell index for finite partitions).
struct LocatedCell {
  ConvexSet set;
  std::uint64_t key = 0;
  std::size_t region = 0;
};

/// Partition of R^d into convex cells. Finite partitions locate by first match
/// over an ordered cell list; generated partitions (e.g. the ReLU preimage
/// partition, with uncountably many cells) compute the cell from the point.
class ConvexPartition {
 public:
  using Generator = std::function<std::optional<LocatedCell>(const Vector&)>;

  ConvexPartition() = default;
  explicit ConvexPartition(std::vector<ConvexSet> cells) : cells_(std::move(cells)) {}
  static ConvexPartition generated(Generator g, std::size_t regions) {
    ConvexPartition p;
    p.generator_ = std::move(g);
    p.regions_ = regions;
    return p;
  }

  std::optional<LocatedCell> locate(const Vector& x) const {
    if (generator_) return generator_(x);
    for (std::size_t i = 0; i < cells_.size(); ++i)
      if (cells_[i].contains(x)) return LocatedCell{cells_[i], i, i};
    return std::nullopt;
  }

  const std::vector<ConvexSet>& cells() const noexcept { return cells_; }
  bool is_generated() const noexcept { return static_cast<bool>(generator_); }
  std::size_t regions() const noexcept { return generator_ ? regions_ : cells_.size(); }

  bool is_convex() const {
    for (const auto& c : cells_)
      if (!c.is_convex()) return false;
    return true;
  }

 private:
  std::vector<ConvexSet> cells_;
  Generator generator_;
  std::size_t regions_ = 0;
};

struct PartitionValidation {
  std::size_t points = 0;
  std::size_t uncovered = 0;
  std::size_t multiply_claimed = 0;  // points inside more than one listed cell
};

/// Checks coverage on `points` draws from N(center, I); throws PartitionInvalid on any uncovered point.
inline PartitionValidation validate_partition(const ConvexPartition& p, const Vector& center, std::size_t points,
                                              Rng& rng) {
  PartitionValidation v;
  v.points = points;
  std::normal_distribution<double> g(0.0, 1.0);
  Vector x(center.size());
  for (std::size_t n = 0; n < points; ++n) {
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = center[i] + g(rng);
    if (!p.locate(x)) ++v.uncovered;
    if (!p.is_generated()) {
      std::size_t claims = 0;
      for (const auto& c : p.cells()) claims += c.contains(x) ? 1 : 0;
      if (claims > 1) ++v.multiply_claimed;
    }
  }
  if (v.uncovered > 0)
    throw PartitionInvalid("partition leaves " + std::to_string(v.uncovered) + " of " + std::to_string(points) +
                           " Gaussian test points uncovered");
  return v;
}

class GaussianPartitionDistribution {
 public:
  GaussianPartitionDistribution(std::size_t d, std::vector<ConvexPartition> partitions, std::vector<double> weights)
      : d_(d), partitions_(std::move(partitions)), weights_(std::move(weights)) {
    if (d_ == 0) throw InvalidArgument("GaussianPartitionDistribution: d must be >= 1");
    if (partitions_.empty()) throw InvalidArgument("GaussianPartitionDistribution: needs at least one partition");
    if (partitions_.size() != weights_.size()) throw InvalidArgument("GaussianPartitionDistribution: weight count");
    double s = 0.0;
    for (double w : weights_) {
      if (!(w >= 0.0)) throw InvalidArgument("GaussianPartitionDistribution: negative weight");
      cumulative_.push_back(s += w);
    }
    if (std::abs(s - 1.0) > 1e-12) throw InvalidArgument("GaussianPartitionDistribution: weights must sum to 1");
  }

  static GaussianPartitionDistribution single(std::size_t d, ConvexPartition p) {
    return GaussianPartitionDistribution(d, {std::move(p)}, {1.0});
  }

  std::size_t d() const noexcept { return d_; }
  const std::vector<ConvexPartition>& partitions() const noexcept { return partitions_; }
  const std::vector<double>& weights() const noexcept { return weights_; }

  std::size_t draw_index(Rng& rng) const {
    const double u = uniform01(rng) * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    if (it == cumulative_.end()) --it;
    return static_cast<std::size_t>(it - cumulative_.begin());
  }

  bool is_convex() const {
    for (const auto& p : partitions_)
      if (!p.is_convex()) return false;
    return true;
  }

 private:
  std::size_t d_;
  std::vector<ConvexPartition> partitions_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
};

// ---- partition generators ----

/// Voronoi cells of `sites` (each cell an intersection of bisector halfspaces).
inline ConvexPartition voronoi_partition(const std::vector<Vector>& sites) {
  std::vector<ConvexSet> cells;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    std::vector<ConvexSet> hs;
    for (std::size_t j = 0; j < sites.size(); ++j) {
      if (i == j) continue;
      // |x - s_i|^2 <= |x - s_j|^2  <=>  2 (s_j - s_i).x <= |s_j|^2 - |s_i|^2
      hs.push_back(ConvexSet::halfspace(2.0 * (sites[j] - sites[i]),
                                        sites[j].squaredNorm() - sites[i].squaredNorm()));
    }
    cells.push_back(hs.empty() ? ConvexSet::whole() : ConvexSet::intersection(std::move(hs)));
  }
  return ConvexPartition(std::move(cells));
}

/// Common refinement: all pairwise intersections of cells of a and b.
inline ConvexPartition refine(const ConvexPartition& a, const ConvexPartition& b) {
  if (a.is_generated() || b.is_generated()) throw InvalidArgument("refine: finite partitions only");
  std::vector<ConvexSet> cells;
  for (const auto& x : a.cells())
    for (const auto& y : b.cells()) cells.push_back(ConvexSet::intersection({x, y}));
  return ConvexPartition(std::move(cells));
}

/// d = 1: {x < t} and {x >= t}.
inline ConvexPartition halfline_partition(double t = 0.0) {
  const double inf = std::numeric_limits<double>::infinity();
  Vector lo(1), hi(1);
  ConvexSet left = ConvexSet::halfspace(Vector::Constant(1, 1.0), std::nextafter(t, -inf));
  lo << t;
  hi << inf;
  ConvexSet right = ConvexSet::box(lo, hi);
  return ConvexPartition({left, right});
}

/// Parallel strips of `width` along coordinate `axis` covering R^d, cut at
/// offsets {c_0 < c_1 < ...}: (-inf, c_0), [c_0, c_1), ..., [c_last, inf).
inline ConvexPartition strip_partition(std::size_t d, std::size_t axis, const std::vector<double>& cuts) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<ConvexSet> cells;
  double lo_v = -inf;
  for (std::size_t i = 0; i <= cuts.size(); ++i) {
    Vector lo = Vector::Constant(static_cast<Eigen::Index>(d), -inf);
    Vector hi = Vector::Constant(static_cast<Eigen::Index>(d), inf);
    lo[static_cast<Eigen::Index>(axis)] = lo_v;
    hi[static_cast<Eigen::Index>(axis)] = i < cuts.size() ? std::nextafter(cuts[i], -inf) : inf;
    cells.push_back(ConvexSet::box(lo, hi));
    if (i < cuts.size()) lo_v = cuts[i];
  }
  return ConvexPartition(std::move(cells));
}

/// Axis-aligned grid with the given cut points on every coordinate.
inline ConvexPartition axis_box_partition(std::size_t d, const std::vector<double>& cuts) {
  ConvexPartition p = strip_partition(d, 0, cuts);
  for (std::size_t a = 1; a < d; ++a) p = refine(p, strip_partition(d, a, cuts));
  return p;
}

inline std::uint64_t double_key(double v) {
  std::uint64_t k;
  std::memcpy(&k, &v, sizeof k);
  return k;
}

/// Region of x in the 2-d ReLU partition: 0 both negative, 1 only x1 positive,
/// 2 only x2 positive, 3 both positive.
inline std::size_t relu_region(const Vector& x) { return (x[0] > 0.0 ? 1u : 0u) + (x[1] > 0.0 ? 2u : 0u); }

/// Preimage partition of the 2-d ReLU map. Points with both coordinates positive
/// are observed exactly; with one positive coordinate the cell is the half-line
/// {x_pos = z_pos, x_neg <= 0}; the negative orthant is one cell.
inline ConvexPartition relu_partition() {
  const double inf = std::numeric_limits<double>::infinity();
  auto orthant = std::make_shared<const ConvexSet>(
      ConvexSet::box(Vector::Constant(2, -inf), Vector::Constant(2, 0.0)));
  return ConvexPartition::generated(
      [orthant, inf](const Vector& x) -> std::optional<LocatedCell> {
        const std::size_t r = relu_region(x);
        Vector lo(2), hi(2);
        switch (r) {
          case 0:
            return LocatedCell{*orthant, 0, 0};
          case 1:
            lo << x[0], -inf;
            hi << x[0], 0.0;
            return LocatedCell{ConvexSet::box(lo, hi), double_key(x[0]) | 1u, 1};
          case 2:
            lo << -inf, x[1];
            hi << 0.0, x[1];
            return LocatedCell{ConvexSet::box(lo, hi), double_key(x[1]) | 2u, 2};
          default:
            return LocatedCell{ConvexSet::box(x, x), double_key(x[0]) ^ (double_key(x[1]) * 0x9E3779B97F4A7C15ull),
                               3};
        }
      },
      4);
}

// ---- sampling ----

struct ObservedSet {
  ConvexSet set;
  std::size_t partition = 0;
  std::size_t region = 0;
};

inline Vector draw_gaussian(const Vector& mu, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector x(mu.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = mu[i] + g(rng);
  return x;
}

/// z ~ N(mu*, I), partition ~ pi, returns the cell containing z.
inline ObservedSet sample_coarse_gaussian(const Vector& mu_star, const GaussianPartitionDistribution& pi, Rng& rng) {
  if (static_cast<std::size_t>(mu_star.size()) != pi.d()) throw InvalidArgument("sample_coarse_gaussian: dimension");
  const Vector z = draw_gaussian(mu_star, rng);
  const std::size_t s = pi.draw_index(rng);
  auto cell = pi.partitions()[s].locate(z);
  if (!cell) throw PartitionInvalid("sample_coarse_gaussian: point not covered by any cell");
  return {std::move(cell->set), s, cell->region};
}

inline std::vector<ConvexSet> sample_coarse_gaussian_sets(const Vector& mu_star,
                                                          const GaussianPartitionDistribution& pi, std::size_t n,
                                                          Rng& rng) {
  std::vector<ConvexSet> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample_coarse_gaussian(mu_star, pi, rng).set);
  return out;
}

// ---- likelihood ----

struct GaussianCoarseConfig {
  std::size_t mc_samples = 2000;
  double step0 = 1.0;
  std::size_t iters = 300;
  bool averaging = true;
  std::size_t min_cell_hits = 20;
  double radius = 10.0;  // iterates are projected onto the ball of this radius
  std::optional<Vector> init;

  void validate() const {
    if (mc_samples < 1 || iters < 1 || min_cell_hits < 1) throw InvalidArgument("GaussianCoarseConfig: counts >= 1");
    if (!(step0 > 0.0) || !(radius > 0.0)) throw InvalidArgument("GaussianCoarseConfig: step0, radius > 0");
  }
};

struct ConditionalMean {
  Vector mean;
  Vector variance;  // per-coordinate sample variance of accepted points
  double mass = 0.0;  // acceptance rate, times the density factor of degenerate box coordinates
  std::size_t accepted = 0;
  std::size_t drawn = 0;
};

/// Mean of N(mu, I) restricted to S, and the estimated mass N(mu; S), by
/// rejection sampling: at least mc_samples proposals, continuing until
/// min_cell_hits are accepted or 200 * mc_samples proposals were spent.
/// Whole-space is exact. For a box, degenerate coordinates (lo == hi) are fixed
/// and contribute their density; the remaining coordinates are sampled.
inline ConditionalMean conditional_mean(const Vector& mu, const ConvexSet& s, const GaussianCoarseConfig& cfg,
                                        Rng& rng) {
  const Eigen::Index d = mu.size();
  ConditionalMean r;
  if (s.is_whole()) {
    r.mean = mu;
    r.variance = Vector::Ones(d);
    r.mass = 1.0;
    return r;
  }
  std::vector<Eigen::Index> fixed;
  double density = 1.0;
  Vector base = mu;
  if (const auto* b = std::get_if<ConvexSet::Box>(&s.node())) {
    for (Eigen::Index i = 0; i < d; ++i) {
      if (b->lo[i] == b->hi[i]) {
        fixed.push_back(i);
        density *= normal_pdf(b->lo[i] - mu[i]);
        base[i] = b->lo[i];
      }
    }
  }
  auto is_fixed = [&fixed](Eigen::Index i) { return std::find(fixed.begin(), fixed.end(), i) != fixed.end(); };

  const std::size_t cap = 200 * cfg.mc_samples;
  std::normal_distribution<double> g(0.0, 1.0);
  Vector x = base;
  Vector sum = Vector::Zero(d);
  Vector sumsq = Vector::Zero(d);
  while (r.drawn < cap && (r.drawn < cfg.mc_samples || r.accepted < cfg.min_cell_hits)) {
    for (Eigen::Index i = 0; i < d; ++i)
      if (!is_fixed(i)) x[i] = mu[i] + g(rng);
    ++r.drawn;
    if (s.contains(x)) {
      ++r.accepted;
      sum += x;
      sumsq += x.cwiseProduct(x);
    }
  }
  if (r.accepted == 0)
    throw LowMassCell("conditional_mean: no accepted draws in " + std::to_string(r.drawn) + " proposals",
                      3.0 / static_cast<double>(r.drawn));
  const double n = static_cast<double>(r.accepted);
  r.mean = sum / n;
  r.variance = (sumsq / n - r.mean.cwiseProduct(r.mean)).cwiseMax(0.0);
  if (r.accepted > 1) r.variance *= n / (n - 1.0);
  for (Eigen::Index i : fixed) {
    r.mean[i] = base[i];
    r.variance[i] = 0.0;
  }
  r.mass = density * static_cast<double>(r.accepted) / static_cast<double>(r.drawn);
  return r;
}

struct LoglikGrad {
  double loglik = 0.0;
  Vector grad;
  double loglik_se = 0.0;
  Vector grad_se;
};

/// Monte-Carlo estimate of (1/N) sum_i log N(mu; S_i) and its gradient
/// (1/N) sum_i (E_{N_{S_i}(mu)}[x] - mu). Repeated descriptors (same identity)
/// share one conditional-mean estimate.
inline LoglikGrad loglik_and_grad(const Vector& mu, const std::vector<ConvexSet>& sets,
                                  const GaussianCoarseConfig& cfg, Rng& rng) {
  if (sets.empty()) throw InvalidArgument("loglik_and_grad: no sets");
  std::map<const void*, std::size_t> index;
  std::vector<ConvexSet> unique;
  std::vector<double> counts;
  for (const auto& s : sets) {
    auto [it, inserted] = index.emplace(s.identity(), unique.size());
    if (inserted) {
      unique.push_back(s);
      counts.push_back(0.0);
    }
    counts[it->second] += 1.0;
  }
  std::vector<Rng> streams;
  streams.reserve(unique.size());
  for (std::size_t i = 0; i < unique.size(); ++i) streams.push_back(derive_stream(rng));
  std::vector<ConditionalMean> cm(unique.size());
  parallel_for(unique.size(), [&](std::size_t i) { cm[i] = conditional_mean(mu, unique[i], cfg, streams[i]); });

  const double n = static_cast<double>(sets.size());
  LoglikGrad out;
  out.grad = Vector::Zero(mu.size());
  Vector grad_var = Vector::Zero(mu.size());
  double ll_var = 0.0;
  for (std::size_t i = 0; i < unique.size(); ++i) {
    const double w = counts[i] / n;
    out.loglik += w * std::log(cm[i].mass);
    out.grad += w * (cm[i].mean - mu);
    if (cm[i].drawn > 0) {
      grad_var += (w * w / static_cast<double>(cm[i].accepted)) * cm[i].variance;
      const double rate = static_cast<double>(cm[i].accepted) / static_cast<double>(cm[i].drawn);
      ll_var += w * w * (1.0 - rate) / (rate * static_cast<double>(cm[i].drawn));
    }
  }
  out.grad_se = grad_var.cwiseSqrt();
  out.loglik_se = std::sqrt(ll_var);
  return out;
}

struct GaussianFit {
  Vector mean;
  std::vector<Vector> trace;  // raw iterates, trace[0] = initialization
};

/// Projected stochastic gradient ascent with step step0 / sqrt(t); with
/// averaging, returns the mean of the second half of the iterates.
inline GaussianFit fit_gaussian_mean(const std::vector<ConvexSet>& sets, std::size_t d,
                                     const GaussianCoarseConfig& cfg, Rng& rng) {
  cfg.validate();
  if (sets.empty()) throw InvalidArgument("fit_gaussian_mean: no sets");
  for (const auto& s : sets)
    if (!s.is_convex()) throw InvalidArgument("fit_gaussian_mean: non-convex cell; concavity does not hold");
  Vector mu = cfg.init ? *cfg.init : Vector::Zero(static_cast<Eigen::Index>(d));
  if (static_cast<std::size_t>(mu.size()) != d) throw InvalidArgument("fit_gaussian_mean: init dimension");
  GaussianFit fit;
  fit.trace.push_back(mu);
  Vector avg = Vector::Zero(mu.size());
  std::size_t averaged = 0;
  for (std::size_t t = 1; t <= cfg.iters; ++t) {
    const LoglikGrad lg = loglik_and_grad(mu, sets, cfg, rng);
    mu += (cfg.step0 / std::sqrt(static_cast<double>(t))) * lg.grad;
    const double norm = mu.norm();
    if (norm > cfg.radius) mu *= cfg.radius / norm;
    fit.trace.push_back(mu);
    if (2 * t > cfg.iters) {
      avg += mu;
      ++averaged;
    }
  }
  fit.mean = cfg.averaging ? Vector(avg / static_cast<double>(averaged)) : mu;
  return fit;
}

/// TV between N(mu1, I) and N(mu2, I): 2 Phi(|mu1 - mu2| / 2) - 1.
inline double tv_gaussians(const Vector& mu1, const Vector& mu2) {
  if (mu1.size() != mu2.size()) throw InvalidArgument("tv_gaussians: dimension mismatch");
  return 2.0 * normal_cdf((mu1 - mu2).norm() / 2.0) - 1.0;
}

// ---- geometric information preservation ----

struct Hyperplane {
  Vector w;
  double c;
};

/// For each hyperplane, Monte-Carlo estimate of E_{S~pi}[N(mu*; union of cells
/// not cut by the hyperplane)]. A cell is uncut when all of its sample points
/// fall strictly on one side. The same mc_samples points serve every hyperplane.
inline std::vector<double> uncut_mass(const GaussianPartitionDistribution& pi, const Vector& mu_star,
                                      const std::vector<Hyperplane>& planes, const GaussianCoarseConfig& cfg,
                                      Rng& rng) {
  const std::size_t m = cfg.mc_samples;
  std::vector<Vector> pts;
  pts.reserve(m);
  for (std::size_t i = 0; i < m; ++i) pts.push_back(draw_gaussian(mu_star, rng));
  std::vector<std::vector<std::uint64_t>> keys(pi.partitions().size(), std::vector<std::uint64_t>(m));
  for (std::size_t s = 0; s < pi.partitions().size(); ++s) {
    for (std::size_t i = 0; i < m; ++i) {
      auto cell = pi.partitions()[s].locate(pts[i]);
      if (!cell) throw PartitionInvalid("uncut_mass: point not covered by any cell");
      keys[s][i] = cell->key;
    }
  }
  std::vector<double> out;
  for (const auto& h : planes) {
    double total = 0.0;
    for (std::size_t s = 0; s < pi.partitions().size(); ++s) {
      std::map<std::uint64_t, std::pair<std::size_t, unsigned>> cells;  // key -> (count, side bits)
      for (std::size_t i = 0; i < m; ++i) {
        const double v = h.w.dot(pts[i]) - h.c;
        auto& e = cells[keys[s][i]];
        ++e.first;
        e.second |= v > 0.0 ? 1u : (v < 0.0 ? 2u : 3u);
      }
      std::size_t uncut = 0;
      for (const auto& [key, e] : cells)
        if (e.second != 3u) uncut += e.first;
      total += pi.weights()[s] * static_cast<double>(uncut) / static_cast<double>(m);
    }
    out.push_back(total);
  }
  return out;
}

/// Minimum uncut mass over n_hyperplanes random hyperplanes: w uniform on the
/// sphere, offset c = w.mu* + g with g ~ N(0, 1).
inline double check_geometric_preservation(const GaussianPartitionDistribution& pi, const Vector& mu_star,
                                           std::size_t n_hyperplanes, const GaussianCoarseConfig& cfg, Rng& rng) {
  if (n_hyperplanes < 1) throw InvalidArgument("check_geometric_preservation: n_hyperplanes must be >= 1");
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Hyperplane> planes;
  for (std::size_t h = 0; h < n_hyperplanes; ++h) {
    Vector w(mu_star.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = g(rng);
    w.normalize();
    planes.push_back({w, w.dot(mu_star) + g(rng)});
  }
  const auto mass = uncut_mass(pi, mu_star, planes, cfg, rng);
  return *std::min_element(mass.begin(), mass.end());
}

}  // namespace coarse
