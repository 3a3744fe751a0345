#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "coarse/experiment.hpp"

using namespace coarse;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse(const std::string& kind, const std::string& text,
                       std::optional<std::uint64_t> seed = std::nullopt,
                       std::optional<std::string> out = std::nullopt) {
  return parse_experiment_config(kind, text, seed, out, "test.json");
}

ParseError parse_error(const std::string& kind, const std::string& text) {
  try {
    parse(kind, text, 1);
  } catch (const ParseError& e) {
    return e;
  }
  ADD_FAILURE() << "no ParseError for " << text;
  return ParseError("none");
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("coarse_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(COARSE_LEARN_BIN) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

json run(const std::string& kind, const std::string& text) {
  const ExperimentConfig cfg = parse(kind, text);
  return report_json(cfg, run_experiment(cfg), 0.0);
}

}  // namespace

TEST(ParseConfig, DefaultsAreResolved) {
  const auto cfg = parse("sq-query", "{\"seed\": 5}");
  EXPECT_EQ(cfg.seed, 5u);
  EXPECT_EQ(cfg.params, experiment_defaults("sq-query"));
  EXPECT_EQ(cfg.params["mle_const"], 0.01);
  EXPECT_EQ(cfg.out_dir, ".");
  const auto r = cfg.resolved();
  EXPECT_EQ(r["kind"], "sq-query");
  EXPECT_EQ(r["seed"], 5);
  EXPECT_TRUE(r["paths"].is_object());
}

TEST(ParseConfig, UnknownKeysReportPosition) {
  const auto top = parse_error("sq-query", "{\n  \"seed\": 1,\n  \"sede\": 2\n}");
  EXPECT_EQ(top.line(), 3u);
  EXPECT_EQ(top.column(), 3u);
  const auto param = parse_error("sq-query", "{\"seed\": 1, \"params\": {\n\"tua\": 0.2}}");
  EXPECT_EQ(param.line(), 2u);
  EXPECT_EQ(param.column(), 1u);
  const auto path = parse_error("maxcut-demo", "{\"seed\": 1, \"paths\": {\"partitions\": \"x\"}}");
  EXPECT_EQ(path.line(), 1u);
  EXPECT_NE(std::string(path.what()).find("partitions"), std::string::npos);
}

TEST(ParseConfig, TypeAndKindChecks) {
  EXPECT_THROW(parse("sq-query", "{\"seed\": 1, \"params\": {\"tau\": \"big\"}}"), ParseError);
  EXPECT_THROW(parse("sq-query", "{\"seed\": -1}"), ParseError);
  EXPECT_THROW(parse("sq-query", "{\"seed\": 1, \"kind\": \"maxcut-demo\"}"), ParseError);
  EXPECT_NO_THROW(parse("sq-query", "{\"seed\": 1, \"kind\": \"sq-query\"}"));
  EXPECT_THROW(parse("sq-query", "[1, 2]", 1), ParseError);
  EXPECT_THROW(parse("sq-query", "{\"seed\": 1,", 1), ParseError);
  EXPECT_THROW(parse("no-such-kind", "{}", 1), ParseError);
}

TEST(ParseConfig, SeedIsMandatory) {
  EXPECT_THROW(parse("discrete-mle", "{}"), ParseError);
  EXPECT_THROW(parse("discrete-mle", ""), ParseError);
  EXPECT_EQ(parse("discrete-mle", "", 9).seed, 9u);
}

TEST(ParseConfig, ConfigBeatsFlags) {
  const auto cfg = parse("discrete-mle", "{\"seed\": 3, \"paths\": {\"out\": \"from_config\"}}", 4, "from_flag");
  EXPECT_EQ(cfg.seed, 3u);
  EXPECT_EQ(cfg.out_dir, "from_config");
  const auto flags = parse("discrete-mle", "{}", 4, "from_flag");
  EXPECT_EQ(flags.seed, 4u);
  EXPECT_EQ(flags.out_dir, "from_flag");
}

TEST(RunExperiment, DeterministicApartFromTimestamp) {
  const std::string text = "{\"seed\": 17, \"params\": {\"N\": 2000, \"iters\": 60, \"mc_samples\": 300}}";
  json a = run("gaussian-mean", text);
  json b = run("gaussian-mean", text);
  a.erase("timestamp");
  b.erase("timestamp");
  EXPECT_EQ(a.dump(), b.dump());
  json c = run("gaussian-mean", "{\"seed\": 18, \"params\": {\"N\": 2000, \"iters\": 60, \"mc_samples\": 300}}");
  c.erase("timestamp");
  EXPECT_NE(a["results"].dump(), c["results"].dump());
}

TEST(RunExperiment, DiscreteMleRecoversTruth) {
  const json r = run("discrete-mle", "{\"seed\": 1, \"params\": {\"curve_ns\": [1000, 10000]}}")["results"];
  EXPECT_EQ(r["N"], 100000);
  EXPECT_LE(r["tv"].get<double>(), 1e-2);
  EXPECT_TRUE(r["converged"].get<bool>());
  EXPECT_EQ(r["p_star"], (std::vector<double>{0.2, 0.3, 0.5}));
  const ExperimentConfig cfg = parse("discrete-mle", "{\"seed\": 1, \"params\": {\"curve_ns\": [1000, 10000]}}");
  const auto rep = run_experiment(cfg);
  ASSERT_TRUE(rep.csv.count("tv_curve.csv"));
  const std::string csv = rep.csv.at("tv_curve.csv");
  EXPECT_EQ(csv.rfind("N,tv\n1000,", 0), 0u);
  EXPECT_NE(csv.find("\n10000,"), std::string::npos);
}

TEST(RunExperiment, DiscreteMleFromFiles) {
  const fs::path dir = scratch_dir("mle_files");
  write_file(dir / "samples.txt", "1\n2,3\n1,2\n3\n1\n");
  const std::string text =
      "{\"seed\": 1, \"paths\": {\"samples\": \"" + (dir / "samples.txt").string() + "\"}, \"params\": {\"k\": 3}}";
  const json r = run("discrete-mle", text)["results"];
  EXPECT_EQ(r["N"], 5);
  EXPECT_EQ(r["p_hat"].size(), 3u);
  EXPECT_FALSE(r.contains("tv"));
}

TEST(RunExperiment, SqQueryConstantAndTable) {
  const json c = run("sq-query", "{\"seed\": 2, \"params\": {\"query\": \"constant\", \"value\": 0.5}}")["results"];
  EXPECT_EQ(c["exact"], 0.5);
  EXPECT_LE(c["abs_error"].get<double>(), 0.1);
  EXPECT_LE(c["samples_drawn"].get<std::size_t>(), c["sample_bound"].get<std::size_t>());
  const json t = run("sq-query", "{\"seed\": 2}")["results"];
  EXPECT_NEAR(t["exact"].get<double>(), 0.361, 1e-12);
  EXPECT_TRUE(t["within_tau"].get<bool>());
}

TEST(RunExperiment, SqQueryBudgetExhaustion) {
  const ExperimentConfig cfg = parse("sq-query", "{\"seed\": 2, \"params\": {\"max_samples\": 100}}");
  const auto rep = run_experiment(cfg);
  EXPECT_TRUE(rep.budget_exhausted);
  EXPECT_TRUE(rep.results["budget_exhausted"].get<bool>());
  EXPECT_EQ(rep.results["samples_drawn"], 100);
}

TEST(RunExperiment, MaxcutDemoCycleFour) {
  const ExperimentConfig cfg = parse("maxcut-demo", "{\"seed\": 3, \"params\": {\"export_partitions\": true}}");
  const auto rep = run_experiment(cfg);
  const json& r = rep.results;
  EXPECT_EQ(r["n"], 4);
  EXPECT_EQ(r["d"], 3);
  EXPECT_EQ(r["opt"], 16.0);
  EXPECT_NEAR(r["q"].get<double>(), 7.1623, 1e-4);
  ASSERT_EQ(r["frequency_table"].size(), 4u);
  std::size_t total = 0;
  for (const auto& row : r["frequency_table"]) {
    total += row["chosen"].get<std::size_t>();
    const double p = row["cell_prob"].get<double>();
    const double n = row["chosen"].get<double>();
    EXPECT_NEAR(row["inside_frequency"].get<double>(), p, 5 * std::sqrt(p * (1 - p) / n));
  }
  EXPECT_EQ(total, 100000u);
  EXPECT_EQ(r["frequency_table"].back()["set"], "ellipsoid");
  EXPECT_EQ(r["witness_rounding"]["ratio"], 1.0);
  ASSERT_TRUE(rep.csv.count("hard_instance_partitions.json"));
  const json parts = json::parse(rep.csv.at("hard_instance_partitions.json"));
  EXPECT_EQ(parts["d"], 3);
  EXPECT_EQ(parts["partitions"].size(), 4u);
}

TEST(RunExperiment, AlphaDiag) {
  const json d = run("alpha-diag", "{\"seed\": 4, \"params\": {\"trials\": 300}}")["results"];
  EXPECT_GT(d["alpha_estimate"].get<double>(), 0.0);
  EXPECT_LE(d["alpha_estimate"].get<double>(), 1.0);
  const json g = run("alpha-diag",
                     "{\"seed\": 4, \"params\": {\"domain\": \"gaussian\", \"n_hyperplanes\": 20, "
                     "\"mc_samples\": 2000}}")["results"];
  EXPECT_GE(g["uncut_mass_min"].get<double>(), 0.0);
  EXPECT_THROW(run("alpha-diag", "{\"seed\": 4, \"params\": {\"domain\": \"other\"}}"), ParseError);
}

TEST(Cli, SuccessWritesReport) {
  const fs::path dir = scratch_dir("cli_ok");
  write_file(dir / "cfg.json", "{\"seed\": 5}");
  EXPECT_EQ(run_cli("maxcut-demo --config " + (dir / "cfg.json").string() + " --out " + dir.string()), 0);
  const json rep = read_json(dir / "report.json");
  EXPECT_EQ(rep["kind"], "maxcut-demo");
  EXPECT_EQ(rep["config"]["seed"], 5);
  EXPECT_FALSE(rep["budget_exhausted"].get<bool>());
  EXPECT_TRUE(rep["timestamp"].contains("finished_utc"));
  EXPECT_TRUE(rep["timestamp"].contains("wall_seconds"));
}

TEST(Cli, SeedFlagWithoutConfig) {
  const fs::path dir = scratch_dir("cli_flags");
  EXPECT_EQ(run_cli("maxcut-demo --seed 8 --out " + dir.string()), 0);
  EXPECT_EQ(read_json(dir / "report.json")["config"]["seed"], 8);
  EXPECT_EQ(run_cli("maxcut-demo --out " + dir.string()), 2);
}

TEST(Cli, BadConfigExitsTwo) {
  const fs::path dir = scratch_dir("cli_bad");
  write_file(dir / "cfg.json", "{\"seed\": 5, \"params\": {\"no_such\": 1}}");
  EXPECT_EQ(run_cli("sq-query --config " + (dir / "cfg.json").string() + " --out " + dir.string()), 2);
  EXPECT_FALSE(fs::exists(dir / "report.json"));
  write_file(dir / "graph.txt", "1 2\n3 4\n");
  write_file(dir / "cfg2.json", "{\"seed\": 5, \"paths\": {\"graph\": \"" + (dir / "graph.txt").string() + "\"}}");
  EXPECT_EQ(run_cli("maxcut-demo --config " + (dir / "cfg2.json").string() + " --out " + dir.string()), 2);
  EXPECT_EQ(run_cli("no-such-kind"), 2);
}

TEST(Cli, BudgetExhaustionExitsThreeWithPartialReport) {
  const fs::path dir = scratch_dir("cli_budget");
  write_file(dir / "cfg.json", "{\"seed\": 5, \"params\": {\"max_samples\": 50}}");
  EXPECT_EQ(run_cli("sq-query --config " + (dir / "cfg.json").string() + " --out " + dir.string()), 3);
  const json rep = read_json(dir / "report.json");
  EXPECT_TRUE(rep["budget_exhausted"].get<bool>());
  EXPECT_EQ(rep["results"]["samples_drawn"], 50);
}

TEST(Cli, SideFilesAreWritten) {
  const fs::path dir = scratch_dir("cli_side");
  write_file(dir / "cfg.json", "{\"seed\": 6, \"params\": {\"N\": 5000, \"curve_ns\": [100, 1000]}}");
  EXPECT_EQ(run_cli("discrete-mle --config " + (dir / "cfg.json").string() + " --out " + dir.string()), 0);
  EXPECT_TRUE(fs::exists(dir / "tv_curve.csv"));
  write_file(dir / "cfg2.json", "{\"seed\": 6, \"params\": {\"export_partitions\": true}}");
  EXPECT_EQ(run_cli("maxcut-demo --config " + (dir / "cfg2.json").string() + " --out " + dir.string()), 0);
  const json parts = read_json(dir / "hard_instance_partitions.json");
  EXPECT_EQ(parts["partitions"].size(), 4u);
}
