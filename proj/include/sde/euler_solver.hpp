#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "sde/cadlag_path.hpp"
#include "sde/coefficient_model.hpp"
#include "sde/martingale_noise.hpp"
#include "sde/rng.hpp"
#include "sde/stats.hpp"

namespace sde {

// Grid anchor: k/n for t in (k/n, (k+1)/n], and t itself for t in [-tau, 0].
double kappa(std::size_t n, double t, double delay);

struct SolveOptions {
  // Abort with ExplosionError once |X| exceeds this bound.
  std::optional<double> explosion_bound;
  // Reported in ModelError messages.
  std::size_t replication = 0;
};

// Euler approximation X^(n) driven by a given noise realization, whose grid
// must contain every point k/n up to its horizon. On each cell
// (k/n, (k+1)/n] the coefficients see history(X^(n), k/n); the drift is
// integrated by left-point sums on the union of grid points and jump times.
CadlagPath euler_solve(const CoefficientModel& model, const MartingaleMeasureSpec& spec, const NoiseRealization& noise,
                       std::size_t n, const SolveOptions& options = {});

// Same, sampling the noise on the Euler grid from `key`.
CadlagPath euler_solve(const CoefficientModel& model, const MartingaleMeasureSpec& spec, std::size_t n,
                       double horizon, StreamKey key, const SolveOptions& options = {});

// p^(n)(t) = X(kappa(n, t)) - X(t), stored right-continuously: at a grid
// point k/n the stored value is the right limit, which is 0.
CadlagPath remainder(const CadlagPath& solution, std::size_t n);

CadlagPath remainder(const CoefficientModel& model, const MartingaleMeasureSpec& spec, std::size_t n, double horizon,
                     StreamKey key);

// Per Euler cell k: sup over u in (k/n, (k+1)/n] of |X(k/n) - X(u)|, the
// cell's right end included.
std::vector<double> remainder_cell_sup(const CadlagPath& solution, std::size_t n);

// Estimate of P(sup_[0,T] |X^(n) - X^(m)| > epsilon), both solves driven by
// the same noise sampled on the 1/m grid.
ProportionEstimate resolution_gap(const CoefficientModel& model, const MartingaleMeasureSpec& spec, std::size_t n,
                                  std::size_t m, double horizon, double epsilon, std::size_t replications,
                                  std::uint64_t seed, std::size_t threads = 1);

// Exact terminal value X_T computed from the same noise realization.
using TerminalOracle = std::function<Vector(const NoiseRealization&)>;

struct StrongErrorPoint {
  std::size_t n = 0;
  MeanEstimate error;  // E|X^(n)_T - X_T|
};

struct StrongErrorStudy {
  std::vector<StrongErrorPoint> points;
  LineFit fit;  // log error against log n
};

// Strong error at T for each n, all resolutions coupled through one noise
// realization per replication sampled on the finest grid. Without an oracle,
// the finest resolution serves as the reference and is excluded from the fit.
StrongErrorStudy strong_error_study(const CoefficientModel& model, const MartingaleMeasureSpec& spec,
                                    std::span<const std::size_t> ns, double horizon, std::size_t replications,
                                    std::uint64_t seed, const TerminalOracle& oracle = {}, std::size_t threads = 1);

}  // namespace sde
