#pragma once

#include <cstddef>
#include <span>

namespace sde {

// Standard normal quantiles used for confidence bounds.
inline constexpr double kZ99OneSided = 2.3263478740408408;
inline constexpr double kZ99TwoSided = 2.5758293035489004;
inline constexpr double kZ95TwoSided = 1.959963984540054;

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  bool contains(double v) const { return lower <= v && v <= upper; }
};

// Sample mean with its standard error.
struct MeanEstimate {
  double mean = 0.0;
  double variance = 0.0;  // unbiased sample variance
  double std_error = 0.0;
  std::size_t count = 0;

  Interval ci(double z = kZ99TwoSided) const { return {mean - z * std_error, mean + z * std_error}; }
  double upper(double z = kZ99OneSided) const { return mean + z * std_error; }
  double lower(double z = kZ99OneSided) const { return mean - z * std_error; }
};

MeanEstimate estimate_mean(std::span<const double> samples);

// Bernoulli proportion with a Wilson score interval.
struct ProportionEstimate {
  double p = 0.0;
  std::size_t successes = 0;
  std::size_t trials = 0;
  Interval ci;
};

ProportionEstimate estimate_proportion(std::size_t successes, std::size_t trials, double z = kZ99TwoSided);

// Least-squares line y = intercept + slope * x.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_std_error = 0.0;
};

LineFit fit_line(std::span<const double> x, std::span<const double> y);

// Fits log(y) against log(x).
LineFit fit_log_log(std::span<const double> x, std::span<const double> y);

}  // namespace sde
