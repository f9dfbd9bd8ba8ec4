#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace sde {

struct ModelConfig {
  std::string name = "gbm";
  double mu = 0.05;
  double sigma = 0.2;
  double x0 = 1.0;
  double delay = 1.0;
  double rate = 1.0;
  double jump_scale = 0.1;
};

struct NoiseConfig {
  std::size_t wiener = 1;
  double jump_rate = 0.0;
  std::vector<double> weights;  // finite marks
  std::vector<double> lower;    // rectangle marks
  std::vector<double> upper;
};

struct ExperimentConfig {
  std::string kind;
  ModelConfig model;
  NoiseConfig noise;
  std::size_t n = 64;
  double horizon = 1.0;
  std::vector<std::size_t> ns;
  std::size_t replications = 0;
  std::vector<double> p;
  std::vector<double> q;
  double alpha = 0.5;
  std::optional<double> epsilon;
  std::vector<std::string> variants{"c"};
  std::string ensemble = "gbm";
  bool enforce_preconditions = true;
  std::vector<std::string> conditions;
  double radius = 1.0;
  std::optional<double> sampler_radius;
  std::size_t samples = 1000;
  std::string generator = "brownian_square";
  std::size_t steps = 2048;
  double generator_rate = 1.0;
  double generator_sigma = 1.0;
  std::optional<double> tail_c;
  std::optional<double> tail_d;
  std::uint64_t seed = 0;
  std::optional<std::size_t> threads;
  std::string output = "sde-out";
};

// Strict JSON parsing. Throws ConfigError listing every problem found.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& file);

// Command-line values; they win over the environment, which wins over the file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::string> output;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

// Reads SDE_SEED and SDE_THREADS from the process environment.
std::optional<std::string> process_env(const std::string& name);

void apply_overrides(ExperimentConfig& config, const Overrides& flags, const EnvLookup& env = process_env);

std::size_t effective_threads(const ExperimentConfig& config);

struct RunResult {
  int exit_code = 0;  // 0 success, 2 inequality violated
  std::string verdict;
  std::vector<std::filesystem::path> artifacts;
};

// Runs the experiment and writes its artifacts into config.output. Throws on
// operational failures (the CLI maps those to exit code 1).
RunResult run_experiment(const ExperimentConfig& config);

}  // namespace sde
