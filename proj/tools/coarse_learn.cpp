// coarse-learn <kind> --config <file> [--seed N] [--out DIR]
// Exit codes: 0 success, 2 configuration or input error, 3 sample budget exhausted.

#include <chrono>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "coarse/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Learning from coarse labels: experiment runner"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  for (const auto& kind : coarse::experiment_kinds()) {
    auto* sub = app.add_subcommand(kind, "run the " + kind + " experiment");
    sub->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "RNG seed (the config's \"seed\" takes precedence)");
    sub->add_option("--out", out, "output directory (default: current directory)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const std::string kind = app.get_subcommands().front()->get_name();
  try {
    const std::string text = config_path.empty() ? std::string() : coarse::read_text_file(config_path);
    const coarse::ExperimentConfig cfg =
        coarse::parse_experiment_config(kind, text, seed, out, config_path.empty() ? "<flags>" : config_path);
    const auto start = std::chrono::steady_clock::now();
    const coarse::ExperimentReport rep = coarse::run_experiment(cfg);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const std::string path = coarse::write_report(cfg, rep, wall);
    std::cout << path << '\n';
    if (rep.budget_exhausted) {
      std::cerr << "coarse-learn: sample budget exhausted; partial report written\n";
      return 3;
    }
    return 0;
  } catch (const coarse::BudgetExhausted& e) {
    std::cerr << "coarse-learn: " << e.what() << '\n';
    return 3;
  } catch (const coarse::ParseError& e) {
    std::cerr << "coarse-learn: " << e.what() << '\n';
    return 2;
  } catch (const coarse::InvalidArgument& e) {
    std::cerr << "coarse-learn: invalid configuration: " << e.what() << '\n';
    return 2;
  } catch (const coarse::InvalidGraph& e) {
    std::cerr << "coarse-learn: invalid graph: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "coarse-learn: " << e.what() << '\n';
    return 1;
  }
}
