// Fits a 2-d Gaussian mean from Voronoi-cell observations.
#include <cstdio>

#include "coarse/gaussian.hpp"

int main() {
  using namespace coarse;
  Rng rng = make_rng(11);
  std::normal_distribution<double> g(0.0, 2.0);
  std::vector<Vector> sites(16, Vector(2));
  for (auto& s : sites) s << g(rng), g(rng);
  const auto pi = GaussianPartitionDistribution::single(2, voronoi_partition(sites));

  Vector mu_star(2);
  mu_star << 0.5, -0.3;
  const auto sets = sample_coarse_gaussian_sets(mu_star, pi, 20000, rng);
  const GaussianFit fit = fit_gaussian_mean(sets, 2, GaussianCoarseConfig{}, rng);

  std::printf("mu*    = (%.4f, %.4f)\n", mu_star[0], mu_star[1]);
  std::printf("mu_hat = (%.4f, %.4f)\n", fit.mean[0], fit.mean[1]);
  std::printf("tv     = %.4f\n", tv_gaussians(fit.mean, mu_star));
  for (std::size_t t : {0u, 10u, 50u, 150u, 300u})
    if (t < fit.trace.size()) std::printf("  iter %3zu: (%.4f, %.4f)\n", t, fit.trace[t][0], fit.trace[t][1]);
}
