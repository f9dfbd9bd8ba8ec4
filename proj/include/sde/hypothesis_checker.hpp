#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "sde/cadlag_path.hpp"
#include "sde/coefficient_model.hpp"
#include "sde/martingale_noise.hpp"

namespace sde {

enum class Condition { c1, c2, c3, c4, c5 };

Condition parse_condition(const std::string& tag);  // "C1".."C5"
std::string to_string(Condition c);

// Random piecewise-constant paths on [-delay, t] with |x(s)| <= radius.
struct PathSampler {
  double radius = 1.0;
  double horizon = 1.0;  // t is drawn uniformly from [0, horizon]
  std::size_t max_breakpoints = 6;
  double perturbation_prob = 0.5;  // y is a small perturbation of x
  double zero_prob = 0.05;         // x (or y) is identically zero
  double terminal_jump_prob = 0.25;
};

struct Violation {
  std::size_t sample = 0;
  double t = 0.0;
  CadlagPath x;
  CadlagPath y;  // second path for C1, perturbation direction for C3, empty otherwise
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // lhs - rhs
};

struct ConditionReport {
  Condition condition = Condition::c1;
  double radius = 0.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::vector<Violation> violations;
  std::string rate_functions_used;

  nlohmann::json to_json() const;
};

struct ConditionValue {
  double lhs = 0.0;
  double rhs = 0.0;
};

// Allowed slack: 1e-9 (1 + |rhs|).
double condition_tolerance(double rhs);

// Evaluates one condition at (t, x, y). x and y live on [-delay, t].
// For C3, y is the perturbation direction and the value compares
// |f(t,x) - f(t, x + 1e-8 y)| against 1e-6 (1 + |f(t,x)|).
ConditionValue evaluate_condition(const CoefficientModel& model, const RateFunctions& rates,
                                  const MartingaleMeasureSpec& spec, Condition condition, double radius, double t,
                                  const CadlagPath& x, const CadlagPath& y = {});

ConditionReport check_condition(const CoefficientModel& model, const RateFunctions& rates,
                                const MartingaleMeasureSpec& spec, Condition condition, double radius,
                                const PathSampler& sampler, std::size_t samples, std::uint64_t seed,
                                std::size_t threads = 1);

// Step function through (times[i], values[i]); constant to the left of
// times[0] and to the right of times.back().
struct RateEnvelope {
  std::vector<double> times;
  std::vector<double> values;
  double operator()(double t) const;
};

// Per-t maximum of lhs / denominator over sampled paths, clamped at 0:
// denominator sup|x-y|^2 (C1), 1 + sup|x|^2 (C2), 1 (C4).
RateEnvelope suggest_rate(const CoefficientModel& model, const MartingaleMeasureSpec& spec, Condition condition,
                          double radius, std::span<const double> times, std::size_t samples, std::uint64_t seed,
                          const PathSampler& sampler = {}, std::size_t threads = 1);

void write_witnesses_csv(std::ostream& out, const ConditionReport& report);

}  // namespace sde
