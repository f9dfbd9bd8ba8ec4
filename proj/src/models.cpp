#include "sde/models.hpp"

#include <algorithm>
#include <cmath>

#include "sde/errors.hpp"

namespace sde {

namespace {

double lagged(const PathView& x, double t) { return x.left_limit(t)[0]; }

}  // namespace

BuiltinModel gbm_model(const GbmParams& p, double delay) {
  BuiltinModel out;
  out.name = "gbm";
  auto& m = out.model;
  m.delay = delay;
  m.dimension = 1;
  m.initial = CadlagPath::constant(-delay, 0.0, p.x0);
  m.drift = [mu = p.mu](double t, const PathView& x) { return Vector{mu * lagged(x, t)}; };
  m.diffusion = [sigma = p.sigma](double t, const PathView& x, const Mark& mark) {
    if (mark.is_jump || mark.index != 0) return Vector{0.0};
    return Vector{sigma * lagged(x, t)};
  };
  m.jump_mean = [](double, const PathView&) { return Vector{0.0}; };

  // 2 x mu x + sigma^2 x^2 = (2 mu + sigma^2) x^2.
  const double c = std::max(0.0, 2.0 * p.mu + p.sigma * p.sigma);
  out.rates.local_monotonicity = [c](double, double) { return c; };
  out.rates.coercivity = [c](double) { return c; };
  out.rates.local_bound = [mu = p.mu, s2 = p.sigma * p.sigma](double r, double) {
    return std::abs(mu) * r + s2 * r * r;
  };
  out.rates.description = "L_R = K = max(0, 2mu + sigma^2); K~_R = |mu| R + sigma^2 R^2";
  return out;
}

Vector gbm_exact_terminal(const GbmParams& p, const NoiseRealization& noise) {
  if (noise.wiener_count() < 1) throw ArgumentError("gbm_exact_terminal: needs one Wiener component");
  const double w = noise.wiener_terminal(0);
  const double t = noise.horizon();
  return {p.x0 * std::exp((p.mu - 0.5 * p.sigma * p.sigma) * t + p.sigma * w)};
}

BuiltinModel jump_gbm_model(const GbmParams& p, double jump_scale, double jump_rate_bound, double delay) {
  BuiltinModel out = gbm_model(p, delay);
  out.name = "jump-gbm";
  auto& m = out.model;
  m.diffusion = [sigma = p.sigma, jump_scale](double t, const PathView& x, const Mark& mark) {
    if (mark.is_jump) return Vector{jump_scale * lagged(x, t)};
    if (mark.index != 0) return Vector{0.0};
    return Vector{sigma * lagged(x, t)};
  };
  m.jump_mean = [jump_scale](double t, const PathView& x) { return Vector{jump_scale * lagged(x, t)}; };
  const double c = std::max(0.0, 2.0 * p.mu + p.sigma * p.sigma + jump_rate_bound * jump_scale * jump_scale);
  const double q = p.sigma * p.sigma + jump_rate_bound * jump_scale * jump_scale;
  out.rates.local_monotonicity = [c](double, double) { return c; };
  out.rates.coercivity = [c](double) { return c; };
  out.rates.local_bound = [mu = p.mu, q](double r, double) { return std::abs(mu) * r + q * r * r; };
  out.rates.description =
      "L_R = K = max(0, 2mu + sigma^2 + lambda gamma^2); K~_R = |mu| R + (sigma^2 + lambda gamma^2) R^2";
  return out;
}

BuiltinModel linear_model(double rate, double sigma, double x0, std::size_t wiener_count, double jump_rate_bound) {
  BuiltinModel out;
  out.name = "linear";
  auto& m = out.model;
  m.delay = 1.0;
  m.dimension = 1;
  m.initial = CadlagPath::constant(-1.0, 0.0, x0);
  m.drift = [rate](double t, const PathView& x) { return Vector{-rate * lagged(x, t)}; };
  m.diffusion = [sigma](double, const PathView&, const Mark&) { return Vector{sigma}; };
  m.jump_mean = [sigma](double, const PathView&) { return Vector{sigma}; };

  // int |g|^2 nu_t = sigma^2 (wiener_count + lambda(t)).
  const double noise_mass = sigma * sigma * (static_cast<double>(wiener_count) + jump_rate_bound);
  const double rate_plus = std::max(0.0, -rate);
  out.rates.local_monotonicity = [rate_plus](double, double) { return 2.0 + 2.0 * rate_plus; };
  out.rates.coercivity = [noise_mass, rate_plus](double) { return std::max(noise_mass, 2.0 * rate_plus); };
  out.rates.local_bound = [rate, noise_mass](double r, double) { return std::abs(rate) * r + noise_mass; };
  out.rates.description = "L_R = 2 + 2 max(0,-a); K = sigma^2 (m + lambda_bar); K~_R = |a| R + sigma^2 (m + lambda_bar)";
  return out;
}

BuiltinModel delay_linear_model(double rate, double delay, double sigma, double x0) {
  BuiltinModel out;
  out.name = "delay-linear";
  auto& m = out.model;
  m.delay = delay;
  m.dimension = 1;
  m.initial = CadlagPath::constant(-delay, 0.0, x0);
  m.drift = [rate, delay](double t, const PathView& x) { return Vector{-rate * x.value_at(t - delay)[0]}; };
  if (sigma != 0.0) {
    m.diffusion = [sigma, delay](double t, const PathView& x, const Mark& mark) {
      if (mark.is_jump || mark.index != 0) return Vector{0.0};
      return Vector{sigma * x.value_at(t - delay)[0]};
    };
    m.jump_mean = [](double, const PathView&) { return Vector{0.0}; };
  }
  // 2|a| |x(t-)| |x(t-delay)| + sigma^2 x(t-delay)^2 <= (2|a| + sigma^2) sup^2.
  const double c = 2.0 * std::abs(rate) + sigma * sigma;
  out.rates.local_monotonicity = [c](double, double) { return c; };
  out.rates.coercivity = [c](double) { return c; };
  out.rates.local_bound = [rate, s2 = sigma * sigma](double r, double) { return std::abs(rate) * r + s2 * r * r; };
  out.rates.description = "L_R = K = 2|a| + sigma^2; K~_R = |a| R + sigma^2 R^2";
  return out;
}

BuiltinModel superlinear_model(double x0) {
  BuiltinModel out;
  out.name = "superlinear";
  auto& m = out.model;
  m.delay = 1.0;
  m.dimension = 1;
  m.initial = CadlagPath::constant(-1.0, 0.0, x0);
  m.drift = [](double t, const PathView& x) {
    const double v = lagged(x, t);
    return Vector{v * std::abs(v)};
  };
  out.rates.coercivity = [](double) { return 1.0; };
  out.rates.local_monotonicity = [](double r, double) { return 4.0 * r; };
  out.rates.local_bound = [](double r, double) { return r * r; };
  out.rates.description = "K = 1 (false claim); L_R = 4R; K~_R = R^2";
  return out;
}

BuiltinModel zero_model(double value, double delay) {
  BuiltinModel out;
  out.name = "zero";
  auto& m = out.model;
  m.delay = delay;
  m.dimension = 1;
  m.initial = CadlagPath::constant(-delay, 0.0, value);
  m.drift = [](double, const PathView&) { return Vector{0.0}; };
  out.rates.local_monotonicity = [](double, double) { return 0.0; };
  out.rates.coercivity = [](double) { return 0.0; };
  out.rates.local_bound = [](double, double) { return 0.0; };
  out.rates.description = "L_R = K = K~_R = 0";
  return out;
}

}  // namespace sde
