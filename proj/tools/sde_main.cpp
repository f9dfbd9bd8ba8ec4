#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "sde/errors.hpp"
#include "sde/experiment.hpp"

namespace {

void print_errors(const sde::ConfigError& e) {
  for (const auto& msg : e.errors()) std::cerr << "error: " << msg << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Euler schemes, Gronwall and Lenglart experiments for SDEs with memory"};
  app.require_subcommand(1);

  std::string run_file;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::string> out;
  auto* run = app.add_subcommand("run", "run an experiment");
  run->add_option("config", run_file, "configuration file (JSON)")->required();
  run->add_option("--seed", seed, "random seed (overrides SDE_SEED and the file)");
  run->add_option("--threads", threads, "worker threads (overrides SDE_THREADS and the file)");
  run->add_option("--out", out, "output directory");

  std::string validate_file;
  auto* validate = app.add_subcommand("validate", "check a configuration without running it");
  validate->add_option("config", validate_file, "configuration file (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*validate) {
      const sde::ExperimentConfig config = sde::load_config(validate_file);
      std::cout << "valid " << config.kind << " configuration\n";
      return 0;
    }
    sde::ExperimentConfig config = sde::load_config(run_file);
    sde::apply_overrides(config, {seed, threads, out});
    const sde::RunResult result = sde::run_experiment(config);
    std::cout << "verdict: " << result.verdict << '\n';
    for (const auto& path : result.artifacts) std::cout << "wrote " << path.string() << '\n';
    return result.exit_code;
  } catch (const sde::ConfigError& e) {
    print_errors(e);
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
