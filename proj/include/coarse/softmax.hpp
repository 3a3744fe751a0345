#pragma once

// Multiclass logistic regression trained from coarse labels.
//
// The coarse-label likelihood of a softmax model is not concave in W, but the
// fine-label log-likelihood is, and each coordinate of its gradient is the
// expectation of a bounded query of (x, z). Training therefore runs plain
// gradient ascent on the fine objective with every gradient coordinate answered
// by a simulated statistical query.

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "coarse/core.hpp"
#include "coarse/sq.hpp"
#include "json.hpp"

namespace coarse {

using FeatureVector = Eigen::VectorXd;

struct SoftmaxModel {
  Eigen::MatrixXd weights;     // k x n, row z is w_z
  double feature_bound = 1.0;  // ||x||_inf <= B

  std::size_t k() const { return static_cast<std::size_t>(weights.rows()); }
  std::size_t n() const { return static_cast<std::size_t>(weights.cols()); }

  void validate() const {
    if (weights.rows() < 2 || weights.cols() < 1) throw InvalidArgument("SoftmaxModel: need k >= 2 and n >= 1");
    if (!weights.allFinite()) throw InvalidArgument("SoftmaxModel: non-finite weights");
    if (!(feature_bound > 0.0)) throw InvalidArgument("SoftmaxModel: feature bound must be > 0");
  }
};

/// Class probabilities exp(w_z.x) / sum_y exp(w_y.x), max-shifted.
inline Eigen::VectorXd softmax_probs(const Eigen::MatrixXd& w, const FeatureVector& x) {
  Eigen::VectorXd s = w * x;
  s.array() -= s.maxCoeff();
  s = s.array().exp().matrix();
  return s / s.sum();
}

inline DiscreteDistribution softmax_predict(const SoftmaxModel& model, const FeatureVector& x) {
  if (static_cast<std::size_t>(x.size()) != model.n()) throw InvalidArgument("softmax_predict: dimension mismatch");
  const Eigen::VectorXd p = softmax_probs(model.weights, x);
  return DiscreteDistribution::normalized(std::vector<double>(p.data(), p.data() + p.size()));
}

inline Label softmax_argmax(const Eigen::MatrixXd& w, const FeatureVector& x) {
  Eigen::Index best = 0;
  (w * x).maxCoeff(&best);
  return static_cast<Label>(best);
}

using FineExample = std::pair<FeatureVector, Label>;

inline double log_sum_exp(const Eigen::VectorXd& s) {
  const double m = s.maxCoeff();
  return m + std::log((s.array() - m).exp().sum());
}

/// Mean of w_z.x - log sum_j exp(w_j.x).
inline double fine_loglik(const SoftmaxModel& model, const std::vector<FineExample>& examples) {
  if (examples.empty()) throw InvalidArgument("fine_loglik: no examples");
  double total = 0.0;
  for (const auto& [x, z] : examples) {
    if (z >= model.k()) throw InvalidArgument("fine_loglik: label outside [1, k]");
    const Eigen::VectorXd s = model.weights * x;
    total += s[static_cast<Eigen::Index>(z)] - log_sum_exp(s);
  }
  return total / static_cast<double>(examples.size());
}

/// d/dW_{c,i} = mean of (1{z = c} - sigma_c(x)) x_i.
inline Eigen::MatrixXd fine_loglik_gradient(const SoftmaxModel& model, const std::vector<FineExample>& examples) {
  if (examples.empty()) throw InvalidArgument("fine_loglik_gradient: no examples");
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(model.weights.rows(), model.weights.cols());
  for (const auto& [x, z] : examples) {
    Eigen::VectorXd r = -softmax_probs(model.weights, x);
    r[static_cast<Eigen::Index>(z)] += 1.0;
    g += r * x.transpose();
  }
  return g / static_cast<double>(examples.size());
}

/// Knobs beyond the core signature. The SQ constants apply to every coordinate query.
struct LogregOptions {
  double feature_bound = 1.0;
  double lr_decay = 0.0;  // lr_t = lr / (1 + decay * t)
  double alpha = 1.0;
  double hoeffding_const = 8.0;
  double mle_const = 4.0;
  // Optional per-step loss evaluation (e.g. exact population loss on synthetic tasks).
  std::function<double(const SoftmaxModel&)> evaluate;
};

struct LogregTrace {
  std::size_t step = 0;
  std::size_t samples_drawn = 0;
  std::optional<double> loss;
  double gradient_norm = 0.0;
};

struct LogregResult {
  SoftmaxModel model;
  std::vector<LogregTrace> steps;
  std::size_t total_samples = 0;
};

/// Query whose expectation is the (c, i) fine-gradient coordinate divided by G.
inline QueryFunction<FeatureVector> gradient_coordinate_query(const Eigen::MatrixXd& w, Label c, Eigen::Index i,
                                                              double g_bound) {
  const std::size_t k = static_cast<std::size_t>(w.rows());
  return QueryFunction<FeatureVector>(
      [w, c, i, g_bound](const FeatureVector& x, Label z) {
        const Eigen::VectorXd s = w * x;
        const double lse = log_sum_exp(s);
        const double sig = std::exp(s[static_cast<Eigen::Index>(c)] - lse);
        return ((z == c ? 1.0 : 0.0) - sig) * x[i] / g_bound;
      },
      k);
}

/// Gradient ascent from W = 0: each step estimates all k*n coordinates of the
/// fine-label gradient by stat_query (tolerance tau, confidence delta/(steps k n),
/// queries scaled by G = 2B) and moves by lr_t times the estimate.
inline LogregResult train_coarse_logreg(const CoarseOracle<FeatureVector>& oracle, std::size_t n, std::size_t k,
                                        double tau, double delta, std::size_t steps, double lr, Rng& rng,
                                        const LogregOptions& opts = {}) {
  if (k < 2 || n < 1) throw InvalidArgument("train_coarse_logreg: need k >= 2 and n >= 1");
  if (steps < 1) throw InvalidArgument("train_coarse_logreg: steps must be >= 1");
  if (!(lr > 0.0)) throw InvalidArgument("train_coarse_logreg: lr must be > 0");
  LogregResult result;
  result.model.weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n));
  result.model.feature_bound = opts.feature_bound;
  result.model.validate();
  const double g_bound = 2.0 * opts.feature_bound;
  const double per_query_delta = delta / static_cast<double>(steps * k * n);

  for (std::size_t t = 0; t < steps; ++t) {
    Eigen::MatrixXd grad(result.model.weights.rows(), result.model.weights.cols());
    LogregTrace trace;
    trace.step = t + 1;
    for (Label c = 0; c < k; ++c) {
      for (Eigen::Index i = 0; i < grad.cols(); ++i) {
        SqBudget budget;
        budget.tau = tau;
        budget.delta = per_query_delta;
        budget.alpha = opts.alpha;
        budget.hoeffding_const = opts.hoeffding_const;
        budget.mle_const = opts.mle_const;
        const auto q = gradient_coordinate_query(result.model.weights, c, i, g_bound);
        const StatQueryResult r = stat_query(q, oracle, budget, rng);
        grad(static_cast<Eigen::Index>(c), i) = g_bound * r.estimate;
        trace.samples_drawn += r.samples_drawn;
      }
    }
    const double step_lr = lr / (1.0 + opts.lr_decay * static_cast<double>(t));
    result.model.weights += step_lr * grad;
    trace.gradient_norm = grad.norm();
    if (opts.evaluate) trace.loss = opts.evaluate(result.model);
    result.total_samples += trace.samples_drawn;
    result.steps.push_back(trace);
  }
  return result;
}

inline nlohmann::json to_json(const LogregResult& r) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : r.steps) {
    nlohmann::json j{{"step", s.step}, {"samples_drawn", s.samples_drawn}, {"gradient_norm", s.gradient_norm}};
    j["loss"] = s.loss ? nlohmann::json(*s.loss) : nlohmann::json(nullptr);
    steps.push_back(j);
  }
  return {{"total_samples", r.total_samples}, {"steps", steps}};
}

/// Checkpoint: one CSV row per class.
inline std::string model_to_csv(const SoftmaxModel& m) {
  std::string out;
  char buf[64];
  for (Eigen::Index r = 0; r < m.weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.weights.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", m.weights(r, c));
      out += (c ? "," : "");
      out += buf;
    }
    out += '\n';
  }
  return out;
}

/// Synthetic task: x uniform on [-B, B]^n, z ~ softmax(W* x), cell from pi.
struct SoftmaxTask {
  Eigen::MatrixXd truth;
  double feature_bound = 1.0;

  FeatureVector draw_features(Rng& rng) const {
    std::uniform_real_distribution<double> u(-feature_bound, feature_bound);
    FeatureVector x(truth.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = u(rng);
    return x;
  }

  Label draw_label(const FeatureVector& x, Rng& rng) const {
    const Eigen::VectorXd p = softmax_probs(truth, x);
    double u = uniform01(rng);
    for (Eigen::Index z = 0; z + 1 < p.size(); ++z) {
      if (u < p[z]) return static_cast<Label>(z);
      u -= p[z];
    }
    return static_cast<Label>(p.size() - 1);
  }

  CoarseOracle<FeatureVector> oracle(PartitionDistribution pi) const {
    auto pp = std::make_shared<const PartitionDistribution>(std::move(pi));
    SoftmaxTask self = *this;
    return CoarseOracle<FeatureVector>([self, pp](Rng& rng) {
      FeatureVector x = self.draw_features(rng);
      const Label z = self.draw_label(x, rng);
      return CoarseExample<FeatureVector>{std::move(x), pp->coarsen(z, rng)};
    });
  }

  /// Mean over `xs` of the true probability of the model's predicted class.
  double expected_accuracy(const Eigen::MatrixXd& w, const std::vector<FeatureVector>& xs) const {
    double s = 0.0;
    for (const auto& x : xs) s += softmax_probs(truth, x)[static_cast<Eigen::Index>(softmax_argmax(w, x))];
    return s / static_cast<double>(xs.size());
  }

  /// Mean over `xs` of the expected fine log-likelihood under the true conditional.
  double expected_loglik(const Eigen::MatrixXd& w, const std::vector<FeatureVector>& xs) const {
    double s = 0.0;
    for (const auto& x : xs) {
      const Eigen::VectorXd p = softmax_probs(truth, x);
      const Eigen::VectorXd sc = w * x;
      s += p.dot(sc) - log_sum_exp(sc);
    }
    return s / static_cast<double>(xs.size());
  }
};

}  // namespace coarse
