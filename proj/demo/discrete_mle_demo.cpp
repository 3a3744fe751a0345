// Recovers p* = (0.2, 0.3, 0.5) from coarse samples and prints the TV error
// as the sample size grows.
#include <cstdio>
#include <vector>

#include "coarse/discrete_mle.hpp"
#include "coarse/instances.hpp"

int main() {
  using namespace coarse;
  const auto inst = instances::three_label();
  Rng rng = make_rng(7);
  std::vector<LabelSet> samples;
  std::printf("%8s  %-28s  %s\n", "N", "p_hat", "tv");
  for (std::size_t n : {100u, 1000u, 10000u, 100000u}) {
    while (samples.size() < n) samples.push_back(sample_coarse_discrete(inst.truth, inst.pi, rng));
    const MleFit fit = mle_fit(samples, 3, MleConfig{}, rng);
    const auto& p = fit.dist.probs();
    std::printf("%8zu  (%.4f, %.4f, %.4f)  %.5f\n", n, p[0], p[1], p[2], tv_discrete(fit.dist, inst.truth));
  }
}
