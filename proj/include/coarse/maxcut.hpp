#pragma once

// Coarse Gaussian instance built from a graph: with known covariance
// Sigma = opt * (R L_G R^T)^{-1}, the cells are d bands {-1 <= x_i <= 1} and the
// ellipsoid T = {x^T Sigma^{-1} x <= q}, each observed against its complement.
// Matching these cell probabilities amounts to finding a near-maximum cut.
//
// opt is the quadratic form value x^T L_G x = 4 * (number of cut edges).

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cstdint>
#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "coarse/errors.hpp"
#include "coarse/gaussian.hpp"
#include "coarse/normal.hpp"
#include "coarse/random.hpp"

namespace coarse {

struct Graph {
  std::size_t n = 0;
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // 0-based, unordered

  Graph() = default;
  Graph(std::size_t n_, std::vector<std::pair<std::size_t, std::size_t>> e) : n(n_), edges(std::move(e)) {
    validate();
  }

  void validate() const {
    if (n == 0) throw InvalidGraph("graph needs at least one vertex");
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (auto [u, v] : edges) {
      if (u >= n || v >= n) throw InvalidGraph("edge endpoint outside the vertex range");
      if (u == v) throw InvalidGraph("self-loop at vertex " + std::to_string(u + 1));
      if (!seen.insert({std::min(u, v), std::max(u, v)}).second)
        throw InvalidGraph("duplicate edge " + std::to_string(u + 1) + " " + std::to_string(v + 1));
    }
  }

  bool connected() const {
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&parent](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    std::size_t components = n;
    for (auto [u, v] : edges) {
      const std::size_t a = find(u), b = find(v);
      if (a != b) {
        parent[a] = b;
        --components;
      }
    }
    return components == 1;
  }

  static Graph cycle(std::size_t n) {
    std::vector<std::pair<std::size_t, std::size_t>> e;
    for (std::size_t i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
    return Graph(n, std::move(e));
  }
  static Graph complete(std::size_t n) {
    std::vector<std::pair<std::size_t, std::size_t>> e;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) e.emplace_back(i, j);
    return Graph(n, std::move(e));
  }
};

/// Edge list, one "u v" pair per line (1-based); '#' starts a comment. n is the largest label.
inline Graph read_edge_list(std::istream& in) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::size_t n = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    long long u = 0, v = 0;
    if (!(ss >> u >> v)) throw ParseError("expected two vertex labels", lineno, 1);
    std::string rest;
    if (ss >> rest) throw ParseError("trailing characters after edge", lineno, line.find(rest) + 1);
    if (u < 1 || v < 1) throw ParseError("vertex labels are 1-based", lineno, 1);
    edges.emplace_back(static_cast<std::size_t>(u - 1), static_cast<std::size_t>(v - 1));
    n = std::max<std::size_t>(n, static_cast<std::size_t>(std::max(u, v)));
  }
  try {
    return Graph(n, std::move(edges));
  } catch (const InvalidGraph& e) {
    throw ParseError(std::string("edge list: ") + e.what());
  }
}

inline Matrix laplacian(const Graph& g) {
  Matrix l = Matrix::Zero(static_cast<Eigen::Index>(g.n), static_cast<Eigen::Index>(g.n));
  for (auto [u, v] : g.edges) {
    const auto a = static_cast<Eigen::Index>(u), b = static_cast<Eigen::Index>(v);
    l(a, a) += 1.0;
    l(b, b) += 1.0;
    l(a, b) -= 1.0;
    l(b, a) -= 1.0;
  }
  return l;
}

struct MaxCut {
  double opt = 0.0;  // x^T L_G x of the witness
  std::vector<int> witness;
};

/// Exhaustive search over {-1, 1}^n with x_1 = +1 (the objective is sign-symmetric), Gray-code order.
inline MaxCut max_cut_bruteforce(const Graph& g) {
  g.validate();
  if (g.n > 24) throw InvalidArgument("max_cut_bruteforce: refusing n > 24");
  std::vector<std::vector<std::size_t>> adj(g.n);
  for (auto [u, v] : g.edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  std::vector<int> x(g.n, 1);
  long long cut = 0;
  MaxCut best{0.0, x};
  const std::uint64_t total = std::uint64_t{1} << (g.n - 1);
  for (std::uint64_t i = 1; i < total; ++i) {
    const std::size_t v = static_cast<std::size_t>(std::countr_zero(i)) + 1;  // flipped vertex
    for (std::size_t u : adj[v]) cut += x[u] == x[v] ? 1 : -1;
    x[v] = -x[v];
    if (4.0 * static_cast<double>(cut) > best.opt) best = {4.0 * static_cast<double>(cut), x};
  }
  return best;
}

inline double cut_quadratic(const Matrix& l, const std::vector<int>& x) {
  Vector v(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) v[static_cast<Eigen::Index>(i)] = x[i];
  return v.dot(l * v);
}

/// (n-1) x n orthonormal basis of the complement of the all-ones vector
/// (Helmert rows: row k is (1, ..., 1, -k, 0, ..., 0) / sqrt(k (k + 1))).
inline Matrix complement_isometry(std::size_t n) {
  if (n < 2) throw InvalidGraph("reduction needs at least two vertices");
  Matrix r = Matrix::Zero(static_cast<Eigen::Index>(n - 1), static_cast<Eigen::Index>(n));
  for (std::size_t k = 1; k < n; ++k) {
    const double s = 1.0 / std::sqrt(static_cast<double>(k * (k + 1)));
    for (std::size_t j = 0; j < k; ++j) r(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(j)) = s;
    r(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(k)) = -static_cast<double>(k) * s;
  }
  return r;
}

/// q = d + |v|^2 + sqrt(2 d + 4 |v|^2).
inline double ellipsoid_threshold(std::size_t d, double v_sq = 1.0) {
  const double dd = static_cast<double>(d);
  return dd + v_sq + std::sqrt(2.0 * dd + 4.0 * v_sq);
}

/// Pr[|sqrt(v_sq) e_1 + x|^2 <= q] for x ~ N(0, I_d): noncentral chi-square CDF.
inline double ellipsoid_probability(double v_sq, std::size_t d, double q) {
  if (v_sq <= 0.0) {
    boost::math::chi_squared_distribution<double> chi(static_cast<double>(d));
    return boost::math::cdf(chi, q);
  }
  boost::math::non_central_chi_squared_distribution<double> nc(static_cast<double>(d), v_sq);
  return boost::math::cdf(nc, q);
}

/// The reduction's output. Holds no mean: the coarse sampler only needs cell_probs.
struct HardInstance {
  std::size_t d = 0;   // n - 1
  Matrix isometry;     // R, (n-1) x n
  Matrix projected_laplacian;  // L' = R L_G R^T
  Matrix sigma;        // opt * L'^{-1}
  Matrix sigma_sqrt;   // symmetric square root of sigma
  double ellipsoid_threshold = 0.0;
  // cell_probs[i] for band i < d, cell_probs[d] for the ellipsoid T
  std::vector<double> cell_probs;
  double opt = 0.0;

  std::size_t set_count() const noexcept { return d + 1; }
};

inline HardInstance reduce_instance(const Graph& g, double opt) {
  g.validate();
  if (!(opt > 0.0)) throw InvalidArgument("reduce_instance: opt must be > 0");
  if (!g.connected()) throw InvalidGraph("reduce_instance: graph must be connected");
  HardInstance inst;
  inst.d = g.n - 1;
  inst.opt = opt;
  inst.isometry = complement_isometry(g.n);
  inst.projected_laplacian = inst.isometry * laplacian(g) * inst.isometry.transpose();
  Eigen::LLT<Matrix> llt(inst.projected_laplacian);
  if (llt.info() != Eigen::Success) throw InvalidGraph("reduce_instance: projected Laplacian is singular");
  inst.sigma = opt * llt.solve(Matrix::Identity(inst.projected_laplacian.rows(), inst.projected_laplacian.cols()));
  inst.sigma = 0.5 * (inst.sigma + inst.sigma.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(inst.sigma);
  inst.sigma_sqrt = eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
  inst.ellipsoid_threshold = ellipsoid_threshold(inst.d);
  for (std::size_t i = 0; i < inst.d; ++i) {
    const double sd = std::sqrt(inst.sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)));
    inst.cell_probs.push_back(normal_interval_mass(1.0, sd, -1.0, 1.0));
  }
  inst.cell_probs.push_back(ellipsoid_probability(1.0, inst.d, inst.ellipsoid_threshold));
  return inst;
}

struct HardSample {
  std::size_t set_id = 0;  // band index < d, or d for the ellipsoid
  bool inside = false;
};

inline HardSample sample_hard_coarse(const HardInstance& inst, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, inst.set_count() - 1);
  const std::size_t s = pick(rng);
  return {s, bernoulli(rng, inst.cell_probs[s])};
}

/// Band i, or the ellipsoid T for i == d, as a set in the original coordinates.
inline ConvexSet hard_instance_set(const HardInstance& inst, std::size_t i) {
  const auto d = static_cast<Eigen::Index>(inst.d);
  if (i < inst.d) {
    const double inf = std::numeric_limits<double>::infinity();
    Vector lo = Vector::Constant(d, -inf), hi = Vector::Constant(d, inf);
    lo[static_cast<Eigen::Index>(i)] = -1.0;
    hi[static_cast<Eigen::Index>(i)] = 1.0;
    return ConvexSet::box(lo, hi);
  }
  if (i == inst.d) return ConvexSet::ellipsoid(inst.sigma.inverse(), Vector::Zero(d), inst.ellipsoid_threshold);
  throw InvalidArgument("hard_instance_set: index out of range");
}

/// Each set against its complement, one partition per set, uniform weights.
/// Complements are flagged non-convex, so the fitter rejects the instance.
inline GaussianPartitionDistribution hard_instance_partitions(const HardInstance& inst) {
  std::vector<ConvexPartition> parts;
  for (std::size_t i = 0; i < inst.set_count(); ++i) {
    ConvexSet s = hard_instance_set(inst, i);
    parts.emplace_back(std::vector<ConvexSet>{s, ConvexSet::complement(s)});
  }
  std::vector<double> w(parts.size(), 1.0 / static_cast<double>(parts.size()));
  return GaussianPartitionDistribution(inst.d, std::move(parts), std::move(w));
}

/// Membership oracle for Sigma^{-1/2} S: y is inside iff Sigma^{1/2} y is in S.
inline ConvexSet rotate_to_identity(const Matrix& sigma_sqrt, const ConvexSet& s) {
  return ConvexSet::affine(sigma_sqrt, Vector::Zero(sigma_sqrt.rows()), s);
}

inline ConvexSet rotate_to_identity(const HardInstance& inst, const ConvexSet& s) {
  return rotate_to_identity(inst.sigma_sqrt, s);
}

struct RoundedCut {
  std::vector<int> corner;  // n signs
  double cut_quadratic = 0.0;
  double ratio = 0.0;
};

/// Lifts mu_tilde to y = R^T mu_tilde in the complement of 1 and rounds by
/// sgn(y - c), sweeping c over the gaps between sorted coordinates (the
/// coordinate along 1 is free). Returns the best corner; sgn(0) = +1.
inline RoundedCut round_and_score(const Vector& mu_tilde, const HardInstance& inst, const Graph& g) {
  if (static_cast<std::size_t>(mu_tilde.size()) != inst.d || g.n != inst.d + 1)
    throw InvalidArgument("round_and_score: dimension mismatch");
  const Vector y = inst.isometry.transpose() * mu_tilde;
  const Matrix l = laplacian(g);
  std::vector<double> sorted(y.data(), y.data() + y.size());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> thresholds{0.0};
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) thresholds.push_back(0.5 * (sorted[i] + sorted[i + 1]));
  RoundedCut best;
  best.cut_quadratic = -1.0;
  for (double c : thresholds) {
    std::vector<int> x(g.n);
    for (std::size_t i = 0; i < g.n; ++i) x[i] = y[static_cast<Eigen::Index>(i)] - c >= 0.0 ? 1 : -1;
    const double v = cut_quadratic(l, x);
    if (v > best.cut_quadratic) best = {x, v, 0.0};
  }
  best.ratio = best.cut_quadratic / inst.opt;
  return best;
}

struct SensitivityGap {
  double gap = 0.0;
  double bound = 0.0;
  double se = 0.0;  // MC standard error of the gap (0 when exact)
};

/// |Pr[(|v*| + x_1)^2 + s <= q] - Pr[(|v| + x_1)^2 + s <= q]| with x_1 ~ N(0,1),
/// s ~ chi^2_{d-1}, shared between both terms; q = d + 1 + sqrt(2d + 4).
/// bound = (v*^2 - v^2) / (6 sqrt(2d + 4)).
inline SensitivityGap ellipsoid_gap(double v_star_sq, double v_sq, std::size_t d, std::size_t n_mc, Rng& rng) {
  if (!(0.0 <= v_sq && v_sq <= v_star_sq)) throw InvalidArgument("ellipsoid_gap: need 0 <= v_sq <= v_star_sq");
  if (d < 1 || n_mc < 2) throw InvalidArgument("ellipsoid_gap: need d >= 1 and n_mc >= 2");
  const double q = ellipsoid_threshold(d, v_star_sq);
  const double a = std::sqrt(v_star_sq), b = std::sqrt(v_sq);
  std::normal_distribution<double> g(0.0, 1.0);
  std::chi_squared_distribution<double> chi(d > 1 ? static_cast<double>(d - 1) : 1.0);
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t i = 0; i < n_mc; ++i) {
    const double x = g(rng);
    const double s = d > 1 ? chi(rng) : 0.0;
    const double diff = static_cast<double>((a + x) * (a + x) + s <= q) - static_cast<double>((b + x) * (b + x) + s <= q);
    sum += diff;
    sumsq += diff * diff;
  }
  const double n = static_cast<double>(n_mc);
  const double mean = sum / n;
  SensitivityGap r;
  r.gap = std::abs(mean);
  r.se = std::sqrt(std::max(0.0, sumsq / n - mean * mean) / (n - 1.0));
  r.bound = (v_star_sq - v_sq) / (6.0 * std::sqrt(2.0 * static_cast<double>(d) + 4.0));
  return r;
}

/// Band constant c, calibrated on the grid mu in [-2, 2] step 0.05,
/// sigma in [0.5, 3] step 0.25 with Q = max(1, sigma^2).
inline constexpr double kBandConstant = 0.125;

/// |Pr_{N(1, s2)}[-1, 1] - Pr_{N(mu, s2)}[-1, 1]| (exact), bound = c min(1, (1 - |mu|)^2) / Q^4.
inline SensitivityGap band_gap(double mu, double variance, double q_bound, double c = kBandConstant) {
  if (!(variance > 0.0)) throw InvalidArgument("band_gap: variance must be > 0");
  if (variance > q_bound) throw InvalidArgument("band_gap: variance exceeds the declared bound Q");
  const double sd = std::sqrt(variance);
  SensitivityGap r;
  r.gap = std::abs(normal_interval_mass(1.0, sd, -1.0, 1.0) - normal_interval_mass(mu, sd, -1.0, 1.0));
  const double m = 1.0 - std::abs(mu);
  r.bound = c * std::min(1.0, m * m) / std::pow(q_bound, 4);
  return r;
}

inline SensitivityGap band_gap(double mu, double variance) {
  return band_gap(mu, variance, std::max(1.0, variance));
}

/// Largest power of two (at most 1) not exceeding min gap / (min(1, (1 - |mu|)^2) / Q^4) over the grid.
inline double calibrate_band_constant(const std::vector<double>& mus, const std::vector<double>& sigmas) {
  double worst = std::numeric_limits<double>::infinity();
  for (double s : sigmas) {
    const double v = s * s;
    for (double mu : mus) {
      const SensitivityGap g = band_gap(mu, v, std::max(1.0, v), 1.0);
      if (g.bound > 0.0) worst = std::min(worst, g.gap / g.bound);
    }
  }
  double c = 1.0;
  while (c > worst) c *= 0.5;
  return c;
}

inline std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> out;
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / step));
  for (std::size_t i = 0; i <= n; ++i) out.push_back(lo + step * static_cast<double>(i));
  return out;
}

}  // namespace coarse
