#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "sde/cadlag_path.hpp"
#include "sde/rng.hpp"
#include "sde/stats.hpp"

namespace sde {

// A point of the index space U = U1 (Wiener components) + U2 (jump marks).
struct Mark {
  bool is_jump = false;
  std::size_t index = 0;          // Wiener component, or label for finite mark sets
  std::span<const double> point;  // coordinates for rectangle mark spaces

  static Mark wiener(std::size_t i) { return {false, i, {}}; }
  static Mark jump(std::size_t label, std::span<const double> point = {}) { return {true, label, point}; }
};

// Finite label set {0, ..., k-1} with probabilities proportional to weights.
struct FiniteMarks {
  std::vector<double> weights;
};

// Axis-aligned box in R^k with the uniform mark distribution.
struct RectangleMarks {
  std::vector<double> lower;
  std::vector<double> upper;

  bool contains(std::span<const double> p) const;
  double volume() const;
};

using MarkSpace = std::variant<std::monostate, FiniteMarks, RectangleMarks>;

using IntensityFn = std::function<double(double)>;

// Weighted nodes approximating integrals against the mark distribution.
// Exact for finite label sets; a frozen Monte Carlo node set for rectangles.
class MarkQuadrature {
 public:
  struct Node {
    std::size_t label = 0;
    std::vector<double> point;
    double weight = 0.0;
  };

  MarkQuadrature() = default;
  explicit MarkQuadrature(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

  std::size_t size() const { return nodes_.size(); }
  Mark mark(std::size_t k) const { return Mark::jump(nodes_[k].label, nodes_[k].point); }
  double weight(std::size_t k) const { return nodes_[k].weight; }

 private:
  std::vector<Node> nodes_;
};

struct QuadratureOptions {
  std::size_t rectangle_nodes = 512;
  std::uint64_t seed = 0x9e3779b97f4a7c15ull;
};

// Orthogonal martingale measure made of `wiener_count` independent Wiener
// components (intensity 1 each) and a compensated Poisson random measure with
// intensity lambda(t) * mu(d xi). lambda is bounded by `intensity_bound`,
// which drives the thinning sampler.
class MartingaleMeasureSpec {
 public:
  MartingaleMeasureSpec(std::size_t wiener_count, IntensityFn intensity, double intensity_bound, MarkSpace marks,
                        QuadratureOptions quadrature = {});

  static MartingaleMeasureSpec wiener(std::size_t count);
  static MartingaleMeasureSpec poisson(std::size_t wiener_count, double rate, MarkSpace marks);

  std::size_t wiener_count() const { return wiener_count_; }
  double intensity(double t) const { return intensity_ ? intensity_(t) : 0.0; }
  double intensity_bound() const { return intensity_bound_; }
  bool has_jumps() const { return intensity_bound_ > 0.0; }
  const MarkSpace& marks() const { return marks_; }
  std::size_t mark_dimension() const;

  // Frozen for the lifetime of the spec so compensators are deterministic.
  const MarkQuadrature& mark_quadrature() const { return *quadrature_; }

  // Checks 0 <= lambda(t) <= bound on a probe set covering [0, horizon].
  void check_intensity(double horizon) const;

 private:
  std::size_t wiener_count_;
  IntensityFn intensity_;
  double intensity_bound_;
  MarkSpace marks_;
  std::shared_ptr<const MarkQuadrature> quadrature_;
};

struct JumpEvent {
  double time = 0.0;
  std::size_t label = 0;
  std::vector<double> point;

  Mark mark() const { return Mark::jump(label, point); }
};

// One sampled realization of the driving noise on a time grid.
class NoiseRealization {
 public:
  NoiseRealization() = default;
  NoiseRealization(std::vector<double> grid, std::size_t wiener_count, std::vector<double> increments,
                   std::vector<JumpEvent> events);

  std::span<const double> grid() const { return grid_; }
  double horizon() const { return grid_.back(); }
  std::size_t cells() const { return grid_.size() - 1; }
  std::size_t wiener_count() const { return wiener_count_; }

  // Increment of Wiener component i over cell (s_j, s_{j+1}].
  double increment(std::size_t j, std::size_t i) const { return increments_[j * wiener_count_ + i]; }
  std::span<const double> increments() const { return increments_; }
  std::span<const JumpEvent> events() const { return events_; }

  // Sum of all increments of component i, i.e. W_i(T).
  double wiener_terminal(std::size_t i) const;

 private:
  std::vector<double> grid_;
  std::size_t wiener_count_ = 0;
  std::vector<double> increments_;
  std::vector<JumpEvent> events_;
};

// Grid 0, h, 2h, ... with h = 1/steps_per_unit, closed by T.
std::vector<double> uniform_grid(std::size_t steps_per_unit, double horizon);

NoiseRealization sample_noise(const MartingaleMeasureSpec& spec, std::span<const double> grid, StreamKey key);

using Integrand = std::function<Vector(double t, const Mark& mark)>;
using MarkMean = std::function<Vector(double t)>;

// Path of t -> int_0^t int_U g dM~. Wiener parts use g at the left end of each
// grid cell, jumps use g at the event, and the compensator
// int lambda(s) (int g(s, .) d mu) ds is integrated in time by 3-point
// Gauss-Legendre between breakpoints. `mark_mean` is the closed form of
// t -> int g(t, xi) mu(d xi); when empty the spec's mark quadrature is used.
CadlagPath integrate(const Integrand& g, std::size_t dimension, const MartingaleMeasureSpec& spec,
                     const NoiseRealization& noise, const MarkMean& mark_mean = {});

// int_a^b lambda(s) c(s) ds by 3-point Gauss-Legendre.
Vector compensator_increment(const MartingaleMeasureSpec& spec, const MarkMean& mark_mean, double a, double b,
                             std::size_t dimension);

// Monte Carlo estimate of E[<M_T(A), M_T(B)>] from paired ensembles.
MeanEstimate empirical_covariation(std::span<const CadlagPath> paths_a, std::span<const CadlagPath> paths_b);

// Debug dumps.
void write_events_csv(std::ostream& out, const NoiseRealization& noise);
void write_increments_csv(std::ostream& out, const NoiseRealization& noise);

}  // namespace sde
