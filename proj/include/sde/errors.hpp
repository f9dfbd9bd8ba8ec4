#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sde {

// A time or parameter lies outside the domain of a function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed arguments (ordering, sizes, incompatible grids).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Inconsistent noise description.
class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A coefficient function failed during a solve.
class ModelError : public std::runtime_error {
 public:
  ModelError(const std::string& what, double time, std::size_t replication)
      : std::runtime_error(what + " (t=" + std::to_string(time) +
                           ", replication=" + std::to_string(replication) + ")"),
        time_(time),
        replication_(replication) {}

  double time() const { return time_; }
  std::size_t replication() const { return replication_; }

 private:
  double time_;
  std::size_t replication_;
};

// The trajectory left the configured explosion bound.
class ExplosionError : public ModelError {
 public:
  using ModelError::ModelError;
};

// Ensemble rejected by its structural checks, or a verifier precondition failed.
class EnsembleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Carries every problem found in a configuration, not just the first.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> errors)
      : std::runtime_error(join(errors)), errors_(std::move(errors)) {}

  const std::vector<std::string>& errors() const { return errors_; }

 private:
  static std::string join(const std::vector<std::string>& errors) {
    std::string out;
    for (const auto& e : errors) {
      if (!out.empty()) out += "; ";
      out += e;
    }
    return out;
  }
  std::vector<std::string> errors_;
};

}  // namespace sde
