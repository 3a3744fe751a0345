#pragma once

// End-to-end experiment runner behind the coarse-learn CLI.
//
// Config file:
//   {"seed": 7, "paths": {"partitions": "...", "out": "..."}, "params": {"N": 100000}}
// Keys missing from "params" take per-kind defaults; unknown keys are errors.
// Values in the file override command-line flags, which override defaults.

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "coarse/core.hpp"
#include "coarse/core_io.hpp"
#include "coarse/discrete_mle.hpp"
#include "coarse/gaussian.hpp"
#include "coarse/gaussian_io.hpp"
#include "coarse/instances.hpp"
#include "coarse/maxcut.hpp"
#include "coarse/softmax.hpp"
#include "coarse/sq.hpp"
#include "json.hpp"

namespace coarse {

using nlohmann::json;

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"discrete-mle",  "sq-query",   "coarse-logreg",
                                              "gaussian-mean", "maxcut-demo", "alpha-diag"};
  return kinds;
}

/// Default parameters per kind. null means "derived from other inputs".
inline json experiment_defaults(const std::string& kind) {
  if (kind == "discrete-mle")
    return {{"instance", "three-label"}, {"N", 100000},        {"p_star", nullptr}, {"k", nullptr},
            {"epsilon", 1e-3},           {"tol", 1e-8},        {"max_iters", 10000}, {"curve_ns", json::array()}};
  if (kind == "sq-query")
    return {{"tau", 0.1},   {"delta", 0.1},   {"alpha", nullptr}, {"hoeffding_const", 8.0}, {"mle_const", 0.01},
            {"query", "table"}, {"value", 1.0}, {"label", 1},       {"max_samples", nullptr}};
  if (kind == "coarse-logreg")
    return {{"tau", 0.2},          {"delta", 0.1},    {"steps", 25},        {"lr", 2.0},
            {"lr_decay", 0.0},     {"alpha", 0.5},    {"hoeffding_const", 8.0}, {"mle_const", 0.01},
            {"test_points", 2000}, {"baseline", true}};
  if (kind == "gaussian-mean")
    return {{"d", 2},          {"mu_star", nullptr}, {"N", 20000},   {"sites", 16},
            {"site_scale", 2.0}, {"mc_samples", 2000}, {"step0", 1.0}, {"iters", 300},
            {"averaging", true}, {"min_cell_hits", 20}, {"radius", 10.0}};
  if (kind == "maxcut-demo")
    return {{"graph", "cycle4"}, {"opt", nullptr}, {"samples", 100000}, {"export_partitions", false}};
  if (kind == "alpha-diag")
    return {{"domain", "discrete"}, {"trials", 1000}, {"n_hyperplanes", 200}, {"mc_samples", 20000},
            {"d", 2},               {"sites", 16},    {"site_scale", 2.0},    {"mu_star", nullptr}};
  throw ParseError("unknown experiment kind \"" + kind + "\"");
}

inline std::vector<std::string> experiment_path_keys(const std::string& kind) {
  if (kind == "discrete-mle") return {"partitions", "samples", "out"};
  if (kind == "sq-query") return {"query", "out"};
  if (kind == "coarse-logreg") return {"partitions", "out"};
  if (kind == "gaussian-mean") return {"partitions", "out"};
  if (kind == "maxcut-demo") return {"graph", "out"};
  if (kind == "alpha-diag") return {"partitions", "out"};
  throw ParseError("unknown experiment kind \"" + kind + "\"");
}

struct ExperimentConfig {
  std::string kind;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> paths;
  json params;  // fully resolved, defaults included
  std::string out_dir = ".";

  json resolved() const {
    json p = json::object();
    for (const auto& [k, v] : paths) p[k] = v;
    return {{"kind", kind}, {"seed", seed}, {"paths", p}, {"params", params}};
  }
};

namespace detail {

// Position of the first occurrence of "key" in the config text, for error messages.
inline std::pair<std::size_t, std::size_t> key_position(const std::string& text, const std::string& key) {
  const auto at = text.find("\"" + key + "\"");
  return at == std::string::npos ? std::pair<std::size_t, std::size_t>{0, 0} : line_column(text, at);
}

inline bool compatible(const json& def, const json& v) {
  if (def.is_null()) return true;
  if (def.is_number()) return v.is_number();
  if (def.is_boolean()) return v.is_boolean();
  if (def.is_string()) return v.is_string();
  if (def.is_array()) return v.is_array();
  return def.type() == v.type();
}

}  // namespace detail

/// Builds the resolved config from the config file text (may be empty) and flags.
inline ExperimentConfig parse_experiment_config(const std::string& kind, const std::string& text,
                                                std::optional<std::uint64_t> seed_flag,
                                                std::optional<std::string> out_flag, const std::string& origin) {
  ExperimentConfig cfg;
  cfg.kind = kind;
  const json defaults = experiment_defaults(kind);
  json file = text.empty() ? json::object() : parse_json_text(text, origin);
  auto fail = [&](const std::string& msg, const std::string& key) -> ParseError {
    auto [line, col] = detail::key_position(text, key);
    return ParseError(origin + ": " + msg, line, col);
  };
  if (!file.is_object()) throw ParseError(origin + ": config must be a JSON object", 1, 1);
  for (const auto& [key, value] : file.items()) {
    if (key != "kind" && key != "seed" && key != "paths" && key != "params")
      throw fail("unknown top-level key \"" + key + "\"", key);
  }
  if (file.contains("kind") && file["kind"] != kind)
    throw fail("config is for kind " + file["kind"].dump() + ", not \"" + kind + "\"", "kind");

  std::optional<std::uint64_t> seed = seed_flag;
  if (file.contains("seed")) {
    if (!file["seed"].is_number_integer() || file["seed"].get<long long>() < 0)
      throw fail("seed must be a non-negative integer", "seed");
    seed = file["seed"].get<std::uint64_t>();
  }
  if (!seed) throw ParseError(origin + ": a seed is required (config \"seed\" or --seed)");
  cfg.seed = *seed;

  const auto path_keys = experiment_path_keys(kind);
  if (file.contains("paths")) {
    if (!file["paths"].is_object()) throw fail("\"paths\" must be an object", "paths");
    for (const auto& [key, value] : file["paths"].items()) {
      if (std::find(path_keys.begin(), path_keys.end(), key) == path_keys.end())
        throw fail("unknown path key \"" + key + "\" for " + kind, key);
      if (!value.is_string()) throw fail("path \"" + key + "\" must be a string", key);
      cfg.paths[key] = value.get<std::string>();
    }
  }
  if (out_flag && !cfg.paths.count("out")) cfg.out_dir = *out_flag;
  if (cfg.paths.count("out")) cfg.out_dir = cfg.paths.at("out");

  cfg.params = defaults;
  if (file.contains("params")) {
    if (!file["params"].is_object()) throw fail("\"params\" must be an object", "params");
    for (const auto& [key, value] : file["params"].items()) {
      if (!defaults.contains(key)) throw fail("unknown parameter \"" + key + "\" for " + kind, key);
      if (!detail::compatible(defaults[key], value)) throw fail("parameter \"" + key + "\" has the wrong type", key);
      cfg.params[key] = value;
    }
  }
  return cfg;
}

struct ExperimentReport {
  json results;
  std::map<std::string, std::string> csv;  // file name -> contents
  bool budget_exhausted = false;
};

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<double> to_vector(const json& j) { return j.get<std::vector<double>>(); }

inline Vector to_eigen(const std::vector<double>& v) { return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())); }

inline std::vector<double> from_eigen(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline std::size_t count_param(const json& params, const char* key) {
  const json& v = params.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw ParseError(std::string("parameter \"") + key + "\" must be a non-negative integer");
  return v.get<std::size_t>();
}

inline GaussianPartitionDistribution default_gaussian_partitions(std::size_t d, std::size_t sites, double scale,
                                                                 Rng& rng) {
  if (d == 1) return GaussianPartitionDistribution::single(1, halfline_partition(0.0));
  std::normal_distribution<double> g(0.0, scale);
  std::vector<Vector> s(sites);
  for (auto& v : s) {
    v.resize(static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = g(rng);
  }
  return GaussianPartitionDistribution::single(d, voronoi_partition(s));
}

inline Vector default_mu_star(std::size_t d) {
  Vector mu(static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < mu.size(); ++i) mu[i] = (i % 2 == 0 ? 0.5 : -0.3);
  return mu;
}

inline ExperimentReport run_discrete_mle(const ExperimentConfig& cfg, Rng& rng) {
  const json& p = cfg.params;
  MleConfig mc;
  mc.epsilon = p.at("epsilon").get<double>();
  mc.tol = p.at("tol").get<double>();
  mc.max_iters = count_param(p, "max_iters");
  ExperimentReport rep;

  if (cfg.paths.count("samples")) {
    std::size_t k = 0;
    if (!p.at("k").is_null()) k = count_param(p, "k");
    if (cfg.paths.count("partitions")) k = load_partition_distribution(cfg.paths.at("partitions")).k();
    if (k == 0) throw ParseError("discrete-mle: set params.k or paths.partitions to read a sample file");
    std::ifstream in(cfg.paths.at("samples"));
    if (!in) throw ParseError("cannot open " + cfg.paths.at("samples"));
    const auto samples = read_coarse_samples(in, k);
    const MleFit fit = mle_fit(samples, k, mc, rng);
    rep.results = {{"N", samples.size()},
                   {"p_hat", fit.dist.probs()},
                   {"objective", fit.objective},
                   {"iterations", fit.iterations},
                   {"converged", fit.converged}};
    return rep;
  }

  instances::DiscreteInstance inst = p.at("instance") == "five-label" ? instances::five_label()
                                                                        : instances::three_label();
  if (p.at("instance") != "three-label" && p.at("instance") != "five-label")
    throw ParseError("discrete-mle: instance must be \"three-label\" or \"five-label\"");
  if (cfg.paths.count("partitions")) {
    PartitionDistribution pi = load_partition_distribution(cfg.paths.at("partitions"));
    if (p.at("p_star").is_null()) throw ParseError("discrete-mle: a partitions file needs params.p_star");
    inst = {std::move(pi), DiscreteDistribution(to_vector(p.at("p_star")))};
  } else if (!p.at("p_star").is_null()) {
    inst.truth = DiscreteDistribution(to_vector(p.at("p_star")));
  }
  check_same_k(inst.truth.k(), inst.pi.k(), "discrete-mle");
  const std::size_t k = inst.pi.k();

  auto run = [&](std::size_t n) {
    std::vector<LabelSet> samples(n);
    for (auto& s : samples) s = sample_coarse_discrete(inst.truth, inst.pi, rng);
    return mle_fit(samples, k, mc, rng);
  };
  const std::size_t n = count_param(p, "N");
  const MleFit fit = run(n);
  rep.results = {{"N", n},
                 {"p_hat", fit.dist.probs()},
                 {"p_star", inst.truth.probs()},
                 {"tv", tv_discrete(fit.dist, inst.truth)},
                 {"objective", fit.objective},
                 {"iterations", fit.iterations},
                 {"converged", fit.converged}};
  if (!p.at("curve_ns").empty()) {
    std::string csv = "N,tv\n";
    for (const auto& v : p.at("curve_ns")) {
      const std::size_t m = v.get<std::size_t>();
      csv += std::to_string(m) + "," + fmt(tv_discrete(run(m).dist, inst.truth)) + "\n";
    }
    rep.csv["tv_curve.csv"] = csv;
  }
  return rep;
}

inline ExperimentReport run_sq_query(const ExperimentConfig& cfg, Rng& rng) {
  const json& p = cfg.params;
  const instances::SqInstance inst = instances::four_point();
  const std::size_t k = inst.dist.k();
  std::optional<QueryFunction<std::size_t>> q;
  const std::string kind = p.at("query").get<std::string>();
  if (cfg.paths.count("query")) {
    std::ifstream in(cfg.paths.at("query"));
    if (!in) throw ParseError("cannot open " + cfg.paths.at("query"));
    q = read_query_csv(in, inst.dist.contexts(), k);
  } else if (kind == "table") {
    q = instances::table_query(inst.query);
  } else if (kind == "constant") {
    const double v = p.at("value").get<double>();
    q = QueryFunction<std::size_t>([v](const std::size_t&, Label) { return v; }, k);
  } else if (kind == "indicator") {
    const std::size_t label = count_param(p, "label");
    if (label < 1 || label > k) throw ParseError("sq-query: label outside [1, k]");
    q = QueryFunction<std::size_t>([label](const std::size_t&, Label z) { return z + 1 == label ? 1.0 : 0.0; }, k);
  } else {
    throw ParseError("sq-query: query must be \"table\", \"constant\" or \"indicator\"");
  }

  SqBudget b;
  b.tau = p.at("tau").get<double>();
  b.delta = p.at("delta").get<double>();
  b.alpha = p.at("alpha").is_null() ? inst.alpha : p.at("alpha").get<double>();
  b.hoeffding_const = p.at("hoeffding_const").get<double>();
  b.mle_const = p.at("mle_const").get<double>();
  CoarseOracle<std::size_t> oracle = labeled_oracle(inst.dist, inst.pi);
  if (!p.at("max_samples").is_null()) oracle = budget_limited(oracle, count_param(p, "max_samples"));

  const double exact = exact_expectation(inst.dist, *q);
  const std::size_t bound = stat_query_sample_bound(b, k);
  ExperimentReport rep;
  try {
    const StatQueryResult r = stat_query(*q, oracle, b, rng);
    rep.results = {{"estimate", r.estimate},
                   {"exact", exact},
                   {"abs_error", std::abs(r.estimate - exact)},
                   {"within_tau", std::abs(r.estimate - exact) <= b.tau},
                   {"samples_drawn", r.samples_drawn},
                   {"sample_bound", bound},
                   {"clamped_evaluations", r.clamped_evaluations}};
  } catch (const BudgetExhausted& e) {
    rep.budget_exhausted = true;
    rep.results = {{"budget_exhausted", true},
                   {"message", e.what()},
                   {"samples_drawn", e.samples_drawn()},
                   {"exact", exact},
                   {"sample_bound", bound}};
  }
  return rep;
}

inline ExperimentReport run_coarse_logreg(const ExperimentConfig& cfg, Rng& rng) {
  const json& p = cfg.params;
  const SoftmaxTask task = instances::logreg_task();
  PartitionDistribution pi = cfg.paths.count("partitions") ? load_partition_distribution(cfg.paths.at("partitions"))
                                                           : instances::logreg_partitions();
  check_same_k(pi.k(), static_cast<std::size_t>(task.truth.rows()), "coarse-logreg");
  const std::size_t k = pi.k(), n = static_cast<std::size_t>(task.truth.cols());
  LogregOptions opts;
  opts.feature_bound = task.feature_bound;
  opts.lr_decay = p.at("lr_decay").get<double>();
  opts.alpha = p.at("alpha").get<double>();
  opts.hoeffding_const = p.at("hoeffding_const").get<double>();
  opts.mle_const = p.at("mle_const").get<double>();
  const double tau = p.at("tau").get<double>(), delta = p.at("delta").get<double>(), lr = p.at("lr").get<double>();
  const std::size_t steps = count_param(p, "steps");

  Rng test_rng = derive_stream(rng);
  std::vector<FeatureVector> test(count_param(p, "test_points"));
  for (auto& x : test) x = task.draw_features(test_rng);
  if (test.empty()) throw ParseError("coarse-logreg: test_points must be >= 1");
  opts.evaluate = [&](const SoftmaxModel& m) { return -task.expected_loglik(m.weights, test); };

  Rng train_rng = derive_stream(rng);
  Rng base_rng = derive_stream(rng);
  const LogregResult r = train_coarse_logreg(task.oracle(pi), n, k, tau, delta, steps, lr, train_rng, opts);
  ExperimentReport rep;
  rep.results = {{"accuracy", task.expected_accuracy(r.model.weights, test)},
                 {"test_loss", -task.expected_loglik(r.model.weights, test)},
                 {"total_samples", r.total_samples},
                 {"weights", matrix_to_json(r.model.weights)}};
  std::string csv = "step,samples_drawn,test_loss,gradient_norm\n";
  for (const auto& s : r.steps)
    csv += std::to_string(s.step) + "," + std::to_string(s.samples_drawn) + "," + fmt(s.loss.value_or(0.0)) + "," +
           fmt(s.gradient_norm) + "\n";
  rep.csv["logreg_trace.csv"] = csv;
  if (p.at("baseline").get<bool>()) {
    opts.alpha = 1.0;
    const LogregResult b = train_coarse_logreg(task.oracle(PartitionDistribution::single(DiscretePartition::singletons(k))),
                                               n, k, tau, delta, steps, lr, base_rng, opts);
    const double acc = task.expected_accuracy(b.model.weights, test);
    rep.results["baseline_accuracy"] = acc;
    rep.results["accuracy_gap"] = acc - rep.results["accuracy"].get<double>();
  }
  rep.results["bayes_accuracy"] = task.expected_accuracy(task.truth, test);
  return rep;
}

inline GaussianCoarseConfig gaussian_config(const json& p) {
  GaussianCoarseConfig g;
  g.mc_samples = count_param(p, "mc_samples");
  g.step0 = p.at("step0").get<double>();
  g.iters = count_param(p, "iters");
  g.averaging = p.at("averaging").get<bool>();
  g.min_cell_hits = count_param(p, "min_cell_hits");
  g.radius = p.at("radius").get<double>();
  g.validate();
  return g;
}

inline ExperimentReport run_gaussian_mean(const ExperimentConfig& cfg, Rng& rng) {
  const json& p = cfg.params;
  const GaussianCoarseConfig g = gaussian_config(p);
  Rng part_rng = derive_stream(rng);
  GaussianPartitionDistribution pi =
      cfg.paths.count("partitions")
          ? load_gaussian_partitions(cfg.paths.at("partitions"))
          : default_gaussian_partitions(count_param(p, "d"), count_param(p, "sites"), p.at("site_scale").get<double>(),
                                        part_rng);
  const Vector mu_star = p.at("mu_star").is_null() ? default_mu_star(pi.d()) : to_eigen(to_vector(p.at("mu_star")));
  if (static_cast<std::size_t>(mu_star.size()) != pi.d()) throw ParseError("gaussian-mean: mu_star has the wrong dimension");
  const auto sets = sample_coarse_gaussian_sets(mu_star, pi, count_param(p, "N"), rng);
  const GaussianFit fit = fit_gaussian_mean(sets, pi.d(), g, rng);
  ExperimentReport rep;
  rep.results = {{"mu_hat", from_eigen(fit.mean)},
                 {"mu_star", from_eigen(mu_star)},
                 {"tv", tv_gaussians(fit.mean, mu_star)},
                 {"N", sets.size()}};
  std::ostringstream csv;
  write_trace_csv(csv, fit.trace);
  rep.csv["gaussian_trace.csv"] = csv.str();
  return rep;
}

inline ExperimentReport run_maxcut_demo(const ExperimentConfig& cfg, Rng& rng) {
  const json& p = cfg.params;
  Graph g;
  if (cfg.paths.count("graph")) {
    std::ifstream in(cfg.paths.at("graph"));
    if (!in) throw ParseError("cannot open " + cfg.paths.at("graph"));
    g = read_edge_list(in);
  } else {
    const std::string name = p.at("graph").get<std::string>();
    if (name.rfind("cycle", 0) == 0) {
      g = Graph::cycle(std::stoul(name.substr(5)));
    } else if (name.rfind("complete", 0) == 0) {
      g = Graph::complete(std::stoul(name.substr(8)));
    } else {
      throw ParseError("maxcut-demo: graph must be cycleN, completeN or a paths.graph edge list");
    }
  }
  const MaxCut mc = max_cut_bruteforce(g);
  const double opt = p.at("opt").is_null() ? mc.opt : p.at("opt").get<double>();
  const HardInstance inst = reduce_instance(g, opt);

  const std::size_t n = count_param(p, "samples");
  std::vector<std::size_t> chosen(inst.set_count(), 0), inside(inst.set_count(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    const HardSample s = sample_hard_coarse(inst, rng);
    ++chosen[s.set_id];
    inside[s.set_id] += s.inside ? 1 : 0;
  }
  json table = json::array();
  for (std::size_t s = 0; s < inst.set_count(); ++s) {
    table.push_back({{"set", s < inst.d ? "band_" + std::to_string(s + 1) : std::string("ellipsoid")},
                     {"chosen", chosen[s]},
                     {"inside_frequency", chosen[s] ? static_cast<double>(inside[s]) / static_cast<double>(chosen[s]) : 0.0},
                     {"cell_prob", inst.cell_probs[s]}});
  }
  Vector w(static_cast<Eigen::Index>(g.n));
  for (std::size_t i = 0; i < g.n; ++i) w[static_cast<Eigen::Index>(i)] = mc.witness[i];
  const RoundedCut rc = round_and_score(inst.isometry * w, inst, g);
  ExperimentReport rep;
  rep.results = {{"n", g.n},
                 {"d", inst.d},
                 {"edges", g.edges.size()},
                 {"opt", opt},
                 {"bruteforce_opt", mc.opt},
                 {"witness", mc.witness},
                 {"q", inst.ellipsoid_threshold},
                 {"cell_probs", inst.cell_probs},
                 {"frequency_table", table},
                 {"witness_rounding", {{"corner", rc.corner}, {"cut_quadratic", rc.cut_quadratic}, {"ratio", rc.ratio}}}};
  if (p.at("export_partitions").get<bool>()) rep.csv["hard_instance_partitions.json"] = to_json(hard_instance_partitions(inst)).dump(2) + "\n";
  return rep;
}

inline ExperimentReport run_alpha_diag(const ExperimentConfig& cfg, Rng& rng) {
  const json& p = cfg.params;
  const std::string domain = p.at("domain").get<std::string>();
  ExperimentReport rep;
  if (domain == "discrete") {
    const PartitionDistribution pi = cfg.paths.count("partitions") ? load_partition_distribution(cfg.paths.at("partitions"))
                                                                   : instances::three_label().pi;
    rep.results = {{"domain", domain}, {"k", pi.k()}, {"alpha_estimate", estimate_alpha(pi, count_param(p, "trials"), rng)}};
    return rep;
  }
  if (domain != "gaussian") throw ParseError("alpha-diag: domain must be \"discrete\" or \"gaussian\"");
  Rng part_rng = derive_stream(rng);
  const GaussianPartitionDistribution pi =
      cfg.paths.count("partitions")
          ? load_gaussian_partitions(cfg.paths.at("partitions"))
          : default_gaussian_partitions(count_param(p, "d"), count_param(p, "sites"), p.at("site_scale").get<double>(),
                                        part_rng);
  const Vector mu_star = p.at("mu_star").is_null() ? default_mu_star(pi.d()) : to_eigen(to_vector(p.at("mu_star")));
  GaussianCoarseConfig g;
  g.mc_samples = count_param(p, "mc_samples");
  rep.results = {{"domain", domain},
                 {"d", pi.d()},
                 {"uncut_mass_min", check_geometric_preservation(pi, mu_star, count_param(p, "n_hyperplanes"), g, rng)}};
  return rep;
}

inline std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

}  // namespace detail

/// Runs the pipeline. Results depend only on the resolved config and seed.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  Rng rng = make_rng(cfg.seed);
  try {
    if (cfg.kind == "discrete-mle") return detail::run_discrete_mle(cfg, rng);
    if (cfg.kind == "sq-query") return detail::run_sq_query(cfg, rng);
    if (cfg.kind == "coarse-logreg") return detail::run_coarse_logreg(cfg, rng);
    if (cfg.kind == "gaussian-mean") return detail::run_gaussian_mean(cfg, rng);
    if (cfg.kind == "maxcut-demo") return detail::run_maxcut_demo(cfg, rng);
    if (cfg.kind == "alpha-diag") return detail::run_alpha_diag(cfg, rng);
  } catch (const json::exception& e) {
    throw ParseError(std::string("parameter error: ") + e.what());
  }
  throw ParseError("unknown experiment kind \"" + cfg.kind + "\"");
}

/// Report JSON; everything outside "timestamp" is a function of config and seed.
inline json report_json(const ExperimentConfig& cfg, const ExperimentReport& rep, double wall_seconds) {
  return {{"kind", cfg.kind},
          {"config", cfg.resolved()},
          {"results", rep.results},
          {"budget_exhausted", rep.budget_exhausted},
          {"timestamp", {{"finished_utc", detail::utc_now()}, {"wall_seconds", wall_seconds}}}};
}

/// Writes report.json and the CSV side files into cfg.out_dir; returns the report path.
inline std::string write_report(const ExperimentConfig& cfg, const ExperimentReport& rep, double wall_seconds) {
  std::filesystem::create_directories(cfg.out_dir);
  const std::filesystem::path dir(cfg.out_dir);
  for (const auto& [name, contents] : rep.csv) {
    std::ofstream(dir / name, std::ios::binary) << contents;
  }
  const auto path = dir / "report.json";
  std::ofstream(path, std::ios::binary) << report_json(cfg, rep, wall_seconds).dump(2) << '\n';
  return path.string();
}

}  // namespace coarse
