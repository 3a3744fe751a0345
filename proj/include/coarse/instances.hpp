#pragma once

// Fixed synthetic instances shared by the CLI defaults, demos and tests.

#include <Eigen/Dense>
#include <vector>

#include "coarse/core.hpp"
#include "coarse/softmax.hpp"
#include "coarse/sq.hpp"

namespace coarse::instances {

struct DiscreteInstance {
  PartitionDistribution pi;
  DiscreteDistribution truth;
};

/// k = 3: pi = 1/2 {{1},{2,3}} + 1/2 {{1,2},{3}}, p* = (0.2, 0.3, 0.5). alpha = 1/2.
inline DiscreteInstance three_label() {
  auto c = [](std::initializer_list<Label> l) { return LabelSet::of(l); };
  PartitionDistribution pi({DiscretePartition(3, {c({0}), c({1, 2})}), DiscretePartition(3, {c({0, 1}), c({2})})},
                           {0.5, 0.5});
  return {std::move(pi), DiscreteDistribution({0.2, 0.3, 0.5})};
}

/// k = 5: pi = 1/2 singletons + 1/2 {{1,2,3},{4,5}}.
inline DiscreteInstance five_label() {
  auto c = [](std::initializer_list<Label> l) { return LabelSet::of(l); };
  PartitionDistribution pi({DiscretePartition::singletons(5), DiscretePartition(5, {c({0, 1, 2}), c({3, 4})})},
                           {0.5, 0.5});
  return {std::move(pi), DiscreteDistribution({0.1, 0.15, 0.2, 0.25, 0.3})};
}

struct SqInstance {
  FineLabeledDistribution dist;
  PartitionDistribution pi;
  std::vector<std::vector<double>> query;  // query[x][z]
  double alpha;                            // information preservation of pi
};

/// Four contexts, three labels, pi = 1/2 singletons + 1/2 {{1,2},{3}} (alpha = 1/2).
inline SqInstance four_point() {
  FineLabeledDistribution d({{0.10, 0.05, 0.05},
                             {0.05, 0.15, 0.05},
                             {0.10, 0.10, 0.05},
                             {0.02, 0.08, 0.20}});
  PartitionDistribution pi(
      {DiscretePartition::singletons(3), DiscretePartition(3, {LabelSet::of({0, 1}), LabelSet::of({2})})},
      {0.5, 0.5});
  std::vector<std::vector<double>> q{{0.9, -0.4, 0.2}, {-0.7, 0.6, 0.1}, {0.3, 0.8, -0.9}, {-0.2, -0.5, 1.0}};
  return {std::move(d), std::move(pi), std::move(q), 0.5};
}

inline QueryFunction<std::size_t> table_query(const std::vector<std::vector<double>>& table) {
  return QueryFunction<std::size_t>([table](const std::size_t& x, Label z) { return table[x][z]; },
                                    table.front().size());
}

/// 3 classes in 2-d, features uniform on [-1, 1]^2.
inline SoftmaxTask logreg_task() {
  Eigen::MatrixXd w(3, 2);
  w << 3.0, 0.0, -1.5, 2.6, -1.5, -2.6;
  return {w, 1.0};
}

/// 1/2 singletons + 1/2 {{1,2},{3}} over three classes.
inline PartitionDistribution logreg_partitions() {
  return PartitionDistribution(
      {DiscretePartition::singletons(3), DiscretePartition(3, {LabelSet::of({0, 1}), LabelSet::of({2})})},
      {0.5, 0.5});
}

}  // namespace coarse::instances
