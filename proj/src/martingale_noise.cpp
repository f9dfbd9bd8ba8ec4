#include "sde/martingale_noise.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

#include "sde/csv.hpp"
#include "sde/errors.hpp"

namespace sde {

bool RectangleMarks::contains(std::span<const double> p) const {
  if (p.size() != lower.size()) return false;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] < lower[k] || p[k] >= upper[k]) return false;
  }
  return true;
}

double RectangleMarks::volume() const {
  double v = 1.0;
  for (std::size_t k = 0; k < lower.size(); ++k) v *= upper[k] - lower[k];
  return v;
}

namespace {

void draw_rectangle_point(RngStream& rng, const RectangleMarks& box, std::vector<double>& out) {
  out.resize(box.lower.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = rng.uniform(box.lower[k], box.upper[k]);
}

std::size_t draw_label(RngStream& rng, const std::vector<double>& cumulative) {
  const double u = rng.uniform() * cumulative.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

MarkQuadrature build_quadrature(const MarkSpace& marks, const QuadratureOptions& opts) {
  std::vector<MarkQuadrature::Node> nodes;
  if (const auto* fin = std::get_if<FiniteMarks>(&marks)) {
    const double total = std::accumulate(fin->weights.begin(), fin->weights.end(), 0.0);
    for (std::size_t k = 0; k < fin->weights.size(); ++k) {
      if (fin->weights[k] > 0.0) nodes.push_back({k, {}, fin->weights[k] / total});
    }
  } else if (const auto* box = std::get_if<RectangleMarks>(&marks)) {
    RngStream rng(opts.seed, 0, static_cast<std::uint64_t>(Substream::quadrature));
    const double w = 1.0 / static_cast<double>(opts.rectangle_nodes);
    for (std::size_t k = 0; k < opts.rectangle_nodes; ++k) {
      MarkQuadrature::Node node;
      draw_rectangle_point(rng, *box, node.point);
      node.weight = w;
      nodes.push_back(std::move(node));
    }
  }
  return MarkQuadrature(std::move(nodes));
}

}  // namespace

MartingaleMeasureSpec::MartingaleMeasureSpec(std::size_t wiener_count, IntensityFn intensity, double intensity_bound,
                                             MarkSpace marks, QuadratureOptions quadrature)
    : wiener_count_(wiener_count),
      intensity_(std::move(intensity)),
      intensity_bound_(intensity_bound),
      marks_(std::move(marks)) {
  if (!std::isfinite(intensity_bound_) || intensity_bound_ < 0.0)
    throw SpecError("intensity bound must be finite and non-negative");
  if (const auto* fin = std::get_if<FiniteMarks>(&marks_)) {
    if (fin->weights.empty()) throw SpecError("finite mark set needs at least one label");
    double total = 0.0;
    for (double w : fin->weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw SpecError("mark weights must be finite and non-negative");
      total += w;
    }
    if (!(total > 0.0)) throw SpecError("mark weights sum to zero");
  } else if (const auto* box = std::get_if<RectangleMarks>(&marks_)) {
    if (box->lower.empty() || box->lower.size() != box->upper.size())
      throw SpecError("rectangle marks need matching non-empty bounds");
    for (std::size_t k = 0; k < box->lower.size(); ++k) {
      if (!(box->lower[k] < box->upper[k])) throw SpecError("rectangle marks need lower < upper");
    }
    if (quadrature.rectangle_nodes == 0) throw SpecError("rectangle marks need at least one quadrature node");
  } else if (intensity_bound_ > 0.0) {
    throw SpecError("jump intensity given without a mark distribution");
  }
  quadrature_ = std::make_shared<const MarkQuadrature>(build_quadrature(marks_, quadrature));
}

MartingaleMeasureSpec MartingaleMeasureSpec::wiener(std::size_t count) {
  return MartingaleMeasureSpec(count, {}, 0.0, std::monostate{});
}

MartingaleMeasureSpec MartingaleMeasureSpec::poisson(std::size_t wiener_count, double rate, MarkSpace marks) {
  return MartingaleMeasureSpec(
      wiener_count, [rate](double) { return rate; }, rate, std::move(marks));
}

std::size_t MartingaleMeasureSpec::mark_dimension() const {
  if (const auto* box = std::get_if<RectangleMarks>(&marks_)) return box->lower.size();
  return 0;
}

void MartingaleMeasureSpec::check_intensity(double horizon) const {
  constexpr int probes = 256;
  for (int k = 0; k <= probes; ++k) {
    const double t = horizon * static_cast<double>(k) / probes;
    const double lam = intensity(t);
    if (!std::isfinite(lam) || lam < 0.0)
      throw SpecError("intensity must be finite and non-negative (t=" + format_double(t) + ")");
    if (lam > intensity_bound_ * (1.0 + 1e-12))
      throw SpecError("intensity " + format_double(lam) + " exceeds bound " + format_double(intensity_bound_) +
                      " at t=" + format_double(t));
  }
}

NoiseRealization::NoiseRealization(std::vector<double> grid, std::size_t wiener_count, std::vector<double> increments,
                                   std::vector<JumpEvent> events)
    : grid_(std::move(grid)),
      wiener_count_(wiener_count),
      increments_(std::move(increments)),
      events_(std::move(events)) {
  if (grid_.size() < 2 || grid_.front() != 0.0) throw ArgumentError("noise grid must start at 0 with one cell or more");
  for (std::size_t j = 1; j < grid_.size(); ++j) {
    if (!(grid_[j] > grid_[j - 1])) throw ArgumentError("noise grid must be strictly increasing");
  }
  if (increments_.size() != (grid_.size() - 1) * wiener_count_)
    throw ArgumentError("increment matrix does not match grid and Wiener count");
  for (std::size_t e = 0; e < events_.size(); ++e) {
    if (!(events_[e].time > 0.0 && events_[e].time <= grid_.back()))
      throw ArgumentError("jump event outside (0, T]");
    if (e > 0 && events_[e].time < events_[e - 1].time) throw ArgumentError("jump events must be time-sorted");
  }
}

double NoiseRealization::wiener_terminal(std::size_t i) const {
  double w = 0.0;
  for (std::size_t j = 0; j < cells(); ++j) w += increment(j, i);
  return w;
}

std::vector<double> uniform_grid(std::size_t steps_per_unit, double horizon) {
  if (steps_per_unit == 0) throw ArgumentError("uniform_grid: steps per unit must be positive");
  if (!(horizon > 0.0)) throw ArgumentError("uniform_grid: horizon must be positive");
  const double n = static_cast<double>(steps_per_unit);
  std::vector<double> grid{0.0};
  for (std::size_t k = 1;; ++k) {
    const double t = static_cast<double>(k) / n;
    if (t >= horizon) break;
    grid.push_back(t);
  }
  grid.push_back(horizon);
  return grid;
}

NoiseRealization sample_noise(const MartingaleMeasureSpec& spec, std::span<const double> grid, StreamKey key) {
  if (grid.size() < 2 || grid.front() != 0.0) throw ArgumentError("sample_noise: grid must start at 0");
  for (std::size_t j = 1; j < grid.size(); ++j) {
    if (!(grid[j] > grid[j - 1])) throw ArgumentError("sample_noise: grid must be strictly increasing");
  }
  const double horizon = grid.back();
  spec.check_intensity(horizon);

  const std::size_t m = spec.wiener_count();
  std::vector<double> increments((grid.size() - 1) * m);
  if (m > 0) {
    RngStream rng(key, Substream::wiener);
    for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
      const double sd = std::sqrt(grid[j + 1] - grid[j]);
      for (std::size_t i = 0; i < m; ++i) increments[j * m + i] = rng.normal(0.0, sd);
    }
  }

  std::vector<JumpEvent> events;
  if (spec.has_jumps()) {
    RngStream rng(key, Substream::jumps);
    const double bound = spec.intensity_bound();
    std::vector<double> cumulative;
    if (const auto* fin = std::get_if<FiniteMarks>(&spec.marks())) {
      cumulative.resize(fin->weights.size());
      std::partial_sum(fin->weights.begin(), fin->weights.end(), cumulative.begin());
    }
    double t = 0.0;
    while (true) {
      t += rng.exponential(bound);
      if (t > horizon) break;
      const double lam = spec.intensity(t);
      if (lam > bound * (1.0 + 1e-12)) throw SpecError("intensity exceeds its bound at t=" + format_double(t));
      if (rng.uniform() * bound >= lam) continue;  // thinned out
      JumpEvent ev;
      ev.time = t;
      if (!cumulative.empty()) {
        ev.label = draw_label(rng, cumulative);
      } else if (const auto* box = std::get_if<RectangleMarks>(&spec.marks())) {
        draw_rectangle_point(rng, *box, ev.point);
      }
      events.push_back(std::move(ev));
    }
  }
  return NoiseRealization(std::vector<double>(grid.begin(), grid.end()), m, std::move(increments), std::move(events));
}

Vector compensator_increment(const MartingaleMeasureSpec& spec, const MarkMean& mark_mean, double a, double b,
                             std::size_t dimension) {
  Vector out(dimension, 0.0);
  if (!spec.has_jumps() || !(b > a)) return out;
  static constexpr std::array<double, 3> nodes{-0.7745966692414834, 0.0, 0.7745966692414834};
  static constexpr std::array<double, 3> weights{5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  for (std::size_t q = 0; q < 3; ++q) {
    const double s = mid + half * nodes[q];
    const double lam = spec.intensity(s);
    if (lam == 0.0) continue;
    const Vector c = mark_mean(s);
    if (c.size() != dimension) throw ArgumentError("mark mean has wrong dimension");
    for (std::size_t k = 0; k < dimension; ++k) out[k] += half * weights[q] * lam * c[k];
  }
  return out;
}

CadlagPath integrate(const Integrand& g, std::size_t dimension, const MartingaleMeasureSpec& spec,
                     const NoiseRealization& noise, const MarkMean& mark_mean) {
  if (noise.wiener_count() != spec.wiener_count()) throw ArgumentError("integrate: noise does not match spec");
  auto eval = [&](double t, const Mark& mark) {
    Vector v = g(t, mark);
    if (v.size() != dimension) throw ArgumentError("integrate: integrand has wrong dimension");
    return v;
  };
  MarkMean mean = mark_mean;
  if (!mean && spec.has_jumps()) {
    const MarkQuadrature& quad = spec.mark_quadrature();
    if (quad.size() == 0) throw SpecError("integrate: no compensator and no samplable mark distribution");
    mean = [&](double t) {
      Vector acc(dimension, 0.0);
      for (std::size_t k = 0; k < quad.size(); ++k) {
        const Vector v = eval(t, quad.mark(k));
        for (std::size_t c = 0; c < dimension; ++c) acc[c] += quad.weight(k) * v[c];
      }
      return acc;
    };
  }

  Vector state(dimension, 0.0);
  PathBuilder path(dimension, 0.0, state);
  const auto grid = noise.grid();
  const auto events = noise.events();
  std::size_t e = 0;
  auto subtract_compensator = [&](double a, double b) {
    if (!spec.has_jumps()) return;
    const Vector c = compensator_increment(spec, mean, a, b, dimension);
    for (std::size_t k = 0; k < dimension; ++k) state[k] -= c[k];
  };
  for (std::size_t j = 0; j < noise.cells(); ++j) {
    const double a = grid[j];
    const double b = grid[j + 1];
    double left = a;
    for (; e < events.size() && events[e].time <= b; ++e) {
      const double te = events[e].time;
      subtract_compensator(left, te);
      const Vector jump = eval(te, events[e].mark());
      for (std::size_t k = 0; k < dimension; ++k) state[k] += jump[k];
      path.append(te, state);
      left = te;
    }
    subtract_compensator(left, b);
    for (std::size_t i = 0; i < noise.wiener_count(); ++i) {
      const double dw = noise.increment(j, i);
      const Vector v = eval(a, Mark::wiener(i));
      for (std::size_t k = 0; k < dimension; ++k) state[k] += v[k] * dw;
    }
    path.append(b, state);
  }
  return std::move(path).finish(noise.horizon());
}

MeanEstimate empirical_covariation(std::span<const CadlagPath> paths_a, std::span<const CadlagPath> paths_b) {
  if (paths_a.size() != paths_b.size()) throw ArgumentError("empirical_covariation: ensembles differ in size");
  if (paths_a.empty()) throw ArgumentError("empirical_covariation: empty ensemble");
  std::vector<double> products(paths_a.size());
  for (std::size_t r = 0; r < paths_a.size(); ++r) {
    const auto& pa = paths_a[r];
    const auto& pb = paths_b[r];
    if (pa.dimension() != pb.dimension()) throw ArgumentError("empirical_covariation: dimension mismatch");
    const auto xa = pa.value_at(pa.end());
    const auto xb = pb.value_at(pb.end());
    double dot = 0.0;
    for (std::size_t k = 0; k < xa.size(); ++k) dot += xa[k] * xb[k];
    products[r] = dot;
  }
  return estimate_mean(products);
}

void write_events_csv(std::ostream& out, const NoiseRealization& noise) {
  std::size_t dim = 0;
  for (const auto& ev : noise.events()) dim = std::max(dim, ev.point.size());
  out << "time,label";
  for (std::size_t k = 0; k < dim; ++k) out << ",m_" << (k + 1);
  out << '\n';
  for (const auto& ev : noise.events()) {
    out << format_double(ev.time) << ',' << ev.label;
    for (double c : ev.point) out << ',' << format_double(c);
    out << '\n';
  }
}

void write_increments_csv(std::ostream& out, const NoiseRealization& noise) {
  out << "cell,t_start,t_end";
  for (std::size_t i = 0; i < noise.wiener_count(); ++i) out << ",dW_" << (i + 1);
  out << '\n';
  const auto grid = noise.grid();
  for (std::size_t j = 0; j < noise.cells(); ++j) {
    out << j << ',' << format_double(grid[j]) << ',' << format_double(grid[j + 1]);
    for (std::size_t i = 0; i < noise.wiener_count(); ++i) out << ',' << format_double(noise.increment(j, i));
    out << '\n';
  }
}

}  // namespace sde
