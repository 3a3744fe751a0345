#include <gtest/gtest.h>

#include <cmath>

#include "coarse/instances.hpp"
#include "coarse/softmax.hpp"

using namespace coarse;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, double scale, Rng& rng) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = g(rng);
  return m;
}

std::vector<FineExample> random_examples(std::size_t count, Eigen::Index n, std::size_t k, Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<std::size_t> lab(0, k - 1);
  std::vector<FineExample> out;
  for (std::size_t i = 0; i < count; ++i) {
    FeatureVector x(n);
    for (Eigen::Index j = 0; j < n; ++j) x[j] = u(rng);
    out.emplace_back(x, lab(rng));
  }
  return out;
}

std::vector<FeatureVector> test_features(const SoftmaxTask& task, std::size_t count, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::vector<FeatureVector> xs(count);
  for (auto& x : xs) x = task.draw_features(rng);
  return xs;
}

}  // namespace

TEST(SoftmaxPredict, Examples) {
  SoftmaxModel zero{Eigen::MatrixXd::Zero(4, 3), 1.0};
  const auto u = softmax_predict(zero, FeatureVector::Constant(3, 0.7));
  for (std::size_t z = 0; z < 4; ++z) EXPECT_NEAR(u[z], 0.25, 1e-15);

  SoftmaxModel tied{Eigen::MatrixXd::Constant(2, 1, 1.3), 1.0};
  const auto h = softmax_predict(tied, FeatureVector::Constant(1, 2.0));
  EXPECT_NEAR(h[0], 0.5, 1e-15);

  Eigen::MatrixXd w(2, 1);
  w << std::log(3.0), 0.0;
  const auto p = softmax_predict(SoftmaxModel{w, 1.0}, FeatureVector::Constant(1, 1.0));
  EXPECT_NEAR(p[0], 0.75, 1e-12);
  EXPECT_NEAR(p[1], 0.25, 1e-12);

  EXPECT_THROW(softmax_predict(zero, FeatureVector::Zero(2)), InvalidArgument);
}

TEST(SoftmaxPredict, OverflowSafe) {
  Eigen::MatrixXd w(3, 1);
  w << 1000.0, 999.0, -1000.0;
  const auto p = softmax_predict(SoftmaxModel{w, 1.0}, FeatureVector::Constant(1, 1.0));
  EXPECT_NEAR(p[0], 1.0 / (1.0 + std::exp(-1.0)), 1e-12);
  EXPECT_NEAR(p[0] + p[1] + p[2], 1.0, 1e-12);
}

TEST(SoftmaxPredict, RowShiftInvariance) {
  Rng rng = make_rng(60);
  for (int t = 0; t < 100; ++t) {
    const Eigen::MatrixXd w = random_matrix(4, 3, 2.0, rng);
    const Eigen::RowVectorXd shift = random_matrix(1, 3, 5.0, rng);
    Eigen::MatrixXd ws = w;
    ws.rowwise() += shift;
    const FeatureVector x = random_matrix(3, 1, 1.0, rng);
    const auto a = softmax_predict(SoftmaxModel{w, 1.0}, x);
    const auto b = softmax_predict(SoftmaxModel{ws, 1.0}, x);
    double s = 0.0;
    for (std::size_t z = 0; z < 4; ++z) {
      EXPECT_NEAR(a[z], b[z], 1e-12);
      s += a[z];
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(FineLoglik, Examples) {
  Rng rng = make_rng(61);
  const auto ex = random_examples(10, 2, 3, rng);
  EXPECT_NEAR(fine_loglik(SoftmaxModel{Eigen::MatrixXd::Zero(3, 2), 1.0}, ex), -std::log(3.0), 1e-15);

  Eigen::MatrixXd w(2, 1);
  w << std::log(3.0), 0.0;
  const std::vector<FineExample> one{{FeatureVector::Constant(1, 1.0), 0}};
  EXPECT_NEAR(fine_loglik(SoftmaxModel{w, 1.0}, one), std::log(0.75), 1e-12);

  const std::vector<FineExample> bad{{FeatureVector::Constant(1, 1.0), 2}};
  EXPECT_THROW(fine_loglik(SoftmaxModel{w, 1.0}, bad), InvalidArgument);
}

TEST(FineLoglik, GradientMatchesFiniteDifferences) {
  Rng rng = make_rng(62);
  for (int t = 0; t < 30; ++t) {
    const std::size_t k = 2 + t % 4;
    const Eigen::Index n = 1 + t % 3;
    SoftmaxModel m{random_matrix(static_cast<Eigen::Index>(k), n, 1.5, rng), 1.0};
    const auto ex = random_examples(25, n, k, rng);
    const Eigen::MatrixXd g = fine_loglik_gradient(m, ex);
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < m.weights.rows(); ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        SoftmaxModel up = m, dn = m;
        up.weights(i, j) += h;
        dn.weights(i, j) -= h;
        const double fd = (fine_loglik(up, ex) - fine_loglik(dn, ex)) / (2 * h);
        EXPECT_NEAR(g(i, j), fd, 1e-6 * std::max(1.0, std::abs(fd)));
      }
  }
}

TEST(FineLoglik, MidpointConcavity) {
  Rng rng = make_rng(63);
  std::uniform_real_distribution<double> lam(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    const std::size_t k = 2 + t % 5;
    const Eigen::Index n = 1 + t % 4;
    const auto ex = random_examples(20, n, k, rng);
    const Eigen::MatrixXd a = random_matrix(static_cast<Eigen::Index>(k), n, 3.0, rng);
    const Eigen::MatrixXd b = random_matrix(static_cast<Eigen::Index>(k), n, 3.0, rng);
    const double l = lam(rng);
    const double mid = fine_loglik(SoftmaxModel{l * a + (1 - l) * b, 1.0}, ex);
    const double chord = l * fine_loglik(SoftmaxModel{a, 1.0}, ex) + (1 - l) * fine_loglik(SoftmaxModel{b, 1.0}, ex);
    EXPECT_GE(mid, chord - 1e-9);
  }
}

TEST(GradientCoordinateQuery, RangeAndExpectation) {
  Rng rng = make_rng(64);
  const Eigen::MatrixXd w = random_matrix(3, 2, 2.0, rng);
  const auto ex = random_examples(200, 2, 3, rng);
  const Eigen::MatrixXd g = fine_loglik_gradient(SoftmaxModel{w, 1.0}, ex);
  for (Label c = 0; c < 3; ++c)
    for (Eigen::Index i = 0; i < 2; ++i) {
      const auto q = gradient_coordinate_query(w, c, i, 2.0);
      double s = 0.0;
      for (const auto& [x, z] : ex) {
        const double v = q(x, z);
        EXPECT_LE(std::abs(v), 1.0);
        s += v;
      }
      EXPECT_NEAR(2.0 * s / 200.0, g(c, i), 1e-12);
      EXPECT_EQ(q.clamped_evaluations(), 0u);
    }
}

TEST(TrainCoarseLogreg, RejectsBadArguments) {
  Rng rng = make_rng(65);
  const auto oracle = instances::logreg_task().oracle(instances::logreg_partitions());
  EXPECT_THROW(train_coarse_logreg(oracle, 2, 1, 0.3, 0.1, 1, 1.0, rng), InvalidArgument);
  EXPECT_THROW(train_coarse_logreg(oracle, 2, 3, 0.3, 0.1, 0, 1.0, rng), InvalidArgument);
  EXPECT_THROW(train_coarse_logreg(oracle, 2, 3, 0.3, 0.1, 1, 0.0, rng), InvalidArgument);
}

TEST(TrainCoarseLogreg, SeparableTwoClassWithFineLabels) {
  Eigen::MatrixXd truth(2, 2);
  truth << 25.0, 0.0, -25.0, 0.0;
  const SoftmaxTask task{truth, 1.0};
  Rng rng = make_rng(66);
  LogregOptions opts;
  opts.mle_const = 0.01;
  const auto r = train_coarse_logreg(task.oracle(PartitionDistribution::single(DiscretePartition::singletons(2))),
                                     2, 2, 0.1, 0.1, 10, 5.0, rng, opts);
  EXPECT_EQ(r.steps.size(), 10u);
  std::size_t total = 0;
  for (const auto& s : r.steps) total += s.samples_drawn;
  EXPECT_EQ(total, r.total_samples);
  EXPECT_GE(task.expected_accuracy(r.model.weights, test_features(task, 20000, 7)), 0.95);
}

TEST(TrainCoarseLogreg, MergedClassesStayIndistinguishable) {
  const auto task = instances::logreg_task();
  const PartitionDistribution merged =
      PartitionDistribution::single(DiscretePartition(3, {LabelSet::of({0, 1}), LabelSet::of({2})}));
  LogregOptions opts;
  opts.mle_const = 0.01;
  opts.alpha = 0.5;
  Rng rng_a = make_rng(67), rng_b = make_rng(67);
  const auto m = train_coarse_logreg(task.oracle(merged), 2, 3, 0.4, 0.1, 8, 2.0, rng_a, opts);
  const auto f = train_coarse_logreg(task.oracle(PartitionDistribution::single(DiscretePartition::singletons(3))),
                                     2, 3, 0.4, 0.1, 8, 2.0, rng_b, opts);
  const double merged_gap = (m.model.weights.row(0) - m.model.weights.row(1)).norm();
  const double fine_gap = (f.model.weights.row(0) - f.model.weights.row(1)).norm();
  EXPECT_LE(merged_gap, 0.25 * fine_gap) << "merged " << merged_gap << " fine " << fine_gap;

  // symmetric behaviour: classes 1 and 2 are predicted about equally often
  const auto xs = test_features(task, 20000, 8);
  double p0 = 0.0, p1 = 0.0;
  for (const auto& x : xs) {
    const Eigen::VectorXd p = softmax_probs(m.model.weights, x);
    p0 += p[0];
    p1 += p[1];
  }
  EXPECT_NEAR(p0 / xs.size(), p1 / xs.size(), 0.05);
}

TEST(TrainCoarseLogreg, SqGradientWithinToleranceOnFiniteInstance) {
  // finite feature grid with an exact joint, so the fine gradient is enumerable
  const auto task = instances::logreg_task();
  std::vector<FeatureVector> grid;
  for (double a : {-1.0, -0.3, 0.4, 1.0})
    for (double b : {-0.8, 0.1, 0.9}) grid.push_back((FeatureVector(2) << a, b).finished());
  std::vector<std::vector<double>> joint;
  for (const auto& x : grid) {
    const Eigen::VectorXd p = softmax_probs(task.truth, x);
    joint.push_back({p[0] / grid.size(), p[1] / grid.size(), p[2] / grid.size()});
  }
  const FineLabeledDistribution d(joint);
  const auto pi = instances::logreg_partitions();
  const CoarseOracle<FeatureVector> oracle([d, pi, grid](Rng& rng) {
    const auto e = sample_coarse_labeled(d, pi, rng);
    return CoarseExample<FeatureVector>{grid[e.context], e.cell};
  });

  Rng rng = make_rng(69);
  const Eigen::MatrixXd w = random_matrix(3, 2, 1.0, rng);
  Eigen::MatrixXd exact = Eigen::MatrixXd::Zero(3, 2);
  for (std::size_t x = 0; x < grid.size(); ++x) {
    const Eigen::VectorXd sig = softmax_probs(w, grid[x]);
    for (Label z = 0; z < 3; ++z) {
      Eigen::VectorXd r = -sig;
      r[static_cast<Eigen::Index>(z)] += 1.0;
      exact += d.mass(x, z) * r * grid[x].transpose();
    }
  }
  const double tau = 0.3, delta = 0.1, g_bound = 2.0;
  int ok = 0, total = 0;
  for (int run = 0; run < 5; ++run)
    for (Label c = 0; c < 3; ++c)
      for (Eigen::Index i = 0; i < 2; ++i) {
        SqBudget budget{tau, delta, 0.5};
        budget.mle_const = 0.01;
        const auto r = stat_query(gradient_coordinate_query(w, c, i, g_bound), oracle, budget, rng);
        ok += std::abs(g_bound * r.estimate - exact(c, i)) <= tau * g_bound;
        ++total;
      }
  EXPECT_GE(ok, static_cast<int>(std::ceil((1.0 - delta) * total)));
}

TEST(ModelToCsv, OneRowPerClass) {
  Eigen::MatrixXd w(2, 2);
  w << 1.5, -2.0, 0.25, 0.0;
  EXPECT_EQ(model_to_csv(SoftmaxModel{w, 1.0}), "1.5,-2\n0.25,0\n");
}
