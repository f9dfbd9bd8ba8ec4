#pragma once

#include <string>

#include "sde/coefficient_model.hpp"
#include "sde/martingale_noise.hpp"

namespace sde {

// A model together with the rate functions it is known to satisfy.
struct BuiltinModel {
  std::string name;
  CoefficientModel model;
  RateFunctions rates;
};

struct GbmParams {
  double mu = 0.05;
  double sigma = 0.2;
  double x0 = 1.0;
};

// dX = mu X dt + sigma X dW_1, scalar, no path dependence beyond x(t-).
BuiltinModel gbm_model(const GbmParams& params, double delay = 1.0);

// x0 exp((mu - sigma^2/2) T + sigma W_1(T)) from the realization's increments.
Vector gbm_exact_terminal(const GbmParams& params, const NoiseRealization& noise);

// GBM plus compensated relative jumps: g = jump_scale * x(t-) on every mark.
// `jump_rate_bound` is the largest intensity the noise will use (enters K).
BuiltinModel jump_gbm_model(const GbmParams& params, double jump_scale, double jump_rate_bound, double delay = 1.0);

// f = -rate * x(t-), g = sigma on every noise index. `wiener_count` and
// `jump_rate_bound` describe the noise the rates are certified for.
BuiltinModel linear_model(double rate, double sigma, double x0, std::size_t wiener_count, double jump_rate_bound);

// f = -rate * x(t - delay), g = sigma * x(t - delay) on Wiener component 0.
BuiltinModel delay_linear_model(double rate, double delay, double sigma, double x0);

// f = x(t-) |x(t-)|, g = 0. Ships with a coercivity claim K = 1 that is
// false; used to exercise the falsifier.
BuiltinModel superlinear_model(double x0);

// f = 0, g = 0, z = constant.
BuiltinModel zero_model(double value, double delay = 1.0);

}  // namespace sde
