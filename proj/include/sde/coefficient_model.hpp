#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "sde/cadlag_path.hpp"
#include "sde/martingale_noise.hpp"

namespace sde {

using DriftFn = std::function<Vector(double t, const PathView& history)>;
using DiffusionFn = std::function<Vector(double t, const PathView& history, const Mark& mark)>;
// Closed form of int g(t, history, xi) mu(d xi) over the jump marks.
using JumpMeanFn = std::function<Vector(double t, const PathView& history)>;

// Coefficients (f, g) of dX = f(t, X) dt + int g(t, X, xi) M~(dt, d xi) with
// delay tau and initial segment z on [-tau, 0]. An empty `diffusion` means
// g = 0; an empty `jump_mean` means the spec's mark quadrature is used.
struct CoefficientModel {
  double delay = 1.0;
  std::size_t dimension = 1;
  DriftFn drift;
  DiffusionFn diffusion;
  CadlagPath initial;
  JumpMeanFn jump_mean;

  // Structural checks, including finiteness of sup |z|^2.
  void validate() const;
};

// Rate functions a model certifies for the monotonicity, coercivity and local
// boundedness conditions. Any may be empty when the model makes no claim.
struct RateFunctions {
  std::function<double(double radius, double t)> local_monotonicity;  // L_R(t)
  std::function<double(double t)> coercivity;                          // K(t)
  std::function<double(double radius, double t)> local_bound;          // K~_R(t)
  std::string description;
};

}  // namespace sde
