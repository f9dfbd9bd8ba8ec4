#include "sde/euler_solver.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>

#include "sde/csv.hpp"
#include "sde/errors.hpp"
#include "sde/parallel.hpp"

namespace sde {

namespace {

// Largest k with k/n <= t, for t >= 0.
std::size_t floor_index(std::size_t n, double t) {
  const double nn = static_cast<double>(n);
  auto k = static_cast<long long>(std::floor(t * nn));
  if (k < 0) k = 0;
  while (static_cast<double>(k + 1) / nn <= t) ++k;
  while (k > 0 && static_cast<double>(k) / nn > t) --k;
  return static_cast<std::size_t>(k);
}

class CoefficientCaller {
 public:
  CoefficientCaller(const CoefficientModel& model, const MartingaleMeasureSpec& spec, std::size_t replication)
      : model_(model), spec_(spec), replication_(replication) {}

  Vector drift(double t, const PathView& view) const {
    return guarded(t, [&] { return model_.drift(t, view); });
  }

  Vector diffusion(double t, const PathView& view, const Mark& mark) const {
    return guarded(t, [&] { return model_.diffusion(t, view, mark); });
  }

  Vector jump_mean(double t, const PathView& view) const {
    if (model_.jump_mean) return guarded(t, [&] { return model_.jump_mean(t, view); });
    const MarkQuadrature& quad = spec_.mark_quadrature();
    if (quad.size() == 0) throw SpecError("no jump mean and no samplable mark distribution");
    Vector acc(model_.dimension, 0.0);
    for (std::size_t k = 0; k < quad.size(); ++k) {
      const Vector v = diffusion(t, view, quad.mark(k));
      for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += quad.weight(k) * v[c];
    }
    return acc;
  }

 private:
  template <class Fn>
  Vector guarded(double t, Fn&& fn) const {
    Vector v;
    try {
      v = fn();
    } catch (const ModelError&) {
      throw;
    } catch (const std::exception& ex) {
      throw ModelError(std::string("coefficient evaluation failed: ") + ex.what(), t, replication_);
    }
    if (v.size() != model_.dimension)
      throw ModelError("coefficient returned " + std::to_string(v.size()) + " components, expected " +
                           std::to_string(model_.dimension),
                       t, replication_);
    return v;
  }

  const CoefficientModel& model_;
  const MartingaleMeasureSpec& spec_;
  std::size_t replication_;
};

}  // namespace

double kappa(std::size_t n, double t, double delay) {
  if (n == 0) throw ArgumentError("kappa: n must be positive");
  if (t < -delay) throw DomainError("kappa: t=" + format_double(t) + " precedes -delay");
  if (t <= 0.0) return t;
  const double nn = static_cast<double>(n);
  auto k = static_cast<long long>(std::ceil(t * nn)) - 1;
  if (k < 0) k = 0;
  while (static_cast<double>(k + 1) / nn < t) ++k;
  while (k > 0 && static_cast<double>(k) / nn >= t) --k;
  return static_cast<double>(k) / nn;
}

CadlagPath euler_solve(const CoefficientModel& model, const MartingaleMeasureSpec& spec, const NoiseRealization& noise,
                       std::size_t n, const SolveOptions& options) {
  model.validate();
  if (n == 0) throw ArgumentError("euler_solve: n must be positive");
  if (noise.wiener_count() != spec.wiener_count()) throw ArgumentError("euler_solve: noise does not match spec");

  const std::size_t d = model.dimension;
  const double horizon = noise.horizon();
  const CoefficientCaller call(model, spec, options.replication);
  const bool has_noise_term = static_cast<bool>(model.diffusion);
  const bool has_jumps = has_noise_term && spec.has_jumps();

  PathBuilder x(model.initial);
  Vector state(x.current_value().begin(), x.current_value().end());
  auto record = [&](double t) {
    if (options.explosion_bound && !(norm(state) <= *options.explosion_bound))
      throw ExplosionError("trajectory exceeded explosion bound " + format_double(*options.explosion_bound), t,
                           options.replication);
    x.append(t, state);
  };

  const auto grid = noise.grid();
  const auto events = noise.events();
  std::size_t e = 0;
  for (std::size_t j = 0; j < noise.cells(); ++j) {
    const double a = grid[j];
    const double b = grid[j + 1];
    const double anchor = kappa(n, b, model.delay);
    if (anchor > a)
      throw ArgumentError("euler_solve: noise grid does not contain the Euler grid point " + format_double(anchor));
    const PathView frozen(x.path(), anchor, horizon, /*right_limit_at_freeze=*/true);

    MarkMean jump_mean;
    if (has_jumps) jump_mean = [&](double s) { return call.jump_mean(s, frozen); };

    // Drift and compensator over (left, right], evaluated at left+.
    auto advance = [&](double left, double right) {
      if (!(right > left)) return;
      const Vector f = call.drift(left, frozen);
      for (std::size_t k = 0; k < d; ++k) state[k] += f[k] * (right - left);
      if (has_jumps) {
        const Vector c = compensator_increment(spec, jump_mean, left, right, d);
        for (std::size_t k = 0; k < d; ++k) state[k] -= c[k];
      }
    };

    double left = a;
    for (; e < events.size() && events[e].time <= b; ++e) {
      const double te = events[e].time;
      advance(left, te);
      if (has_noise_term) {
        const Vector jump = call.diffusion(te, frozen, events[e].mark());
        for (std::size_t k = 0; k < d; ++k) state[k] += jump[k];
      }
      record(te);
      left = te;
    }
    advance(left, b);
    if (has_noise_term) {
      for (std::size_t i = 0; i < noise.wiener_count(); ++i) {
        const Vector g = call.diffusion(a, frozen, Mark::wiener(i));
        const double dw = noise.increment(j, i);
        for (std::size_t k = 0; k < d; ++k) state[k] += g[k] * dw;
      }
    }
    record(b);
  }
  return std::move(x).finish(horizon);
}

CadlagPath euler_solve(const CoefficientModel& model, const MartingaleMeasureSpec& spec, std::size_t n,
                       double horizon, StreamKey key, const SolveOptions& options) {
  const NoiseRealization noise = sample_noise(spec, uniform_grid(n, horizon), key);
  return euler_solve(model, spec, noise, n, options);
}

CadlagPath remainder(const CadlagPath& solution, std::size_t n) {
  if (n == 0) throw ArgumentError("remainder: n must be positive");
  const double horizon = solution.end();
  std::vector<double> times;
  times.push_back(solution.start());
  for (double s : solution.breakpoints()) {
    if (s >= 0.0) times.push_back(s);
  }
  const double nn = static_cast<double>(n);
  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) / nn;
    if (t > horizon) break;
    times.push_back(t);
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  const std::size_t d = solution.dimension();
  std::vector<double> values;
  values.reserve(times.size() * d);
  for (double s : times) {
    if (s < 0.0) {
      values.insert(values.end(), d, 0.0);
      continue;
    }
    const double anchor = static_cast<double>(floor_index(n, s)) / nn;
    const auto xa = solution.value_at(anchor);
    const auto xs = solution.value_at(s);
    for (std::size_t k = 0; k < d; ++k) values.push_back(xa[k] - xs[k]);
  }
  return CadlagPath(d, std::move(times), std::move(values), horizon);
}

CadlagPath remainder(const CoefficientModel& model, const MartingaleMeasureSpec& spec, std::size_t n, double horizon,
                     StreamKey key) {
  return remainder(euler_solve(model, spec, n, horizon, key), n);
}

std::vector<double> remainder_cell_sup(const CadlagPath& solution, std::size_t n) {
  if (n == 0) throw ArgumentError("remainder_cell_sup: n must be positive");
  const double horizon = solution.end();
  if (!(horizon > 0.0)) return {};
  const double nn = static_cast<double>(n);
  const std::size_t cells = floor_index(n, horizon) + (static_cast<double>(floor_index(n, horizon)) / nn < horizon ? 1 : 0);
  const auto bps = solution.breakpoints();
  const std::size_t d = solution.dimension();
  std::vector<double> out(cells, 0.0);
  for (std::size_t k = 0; k < cells; ++k) {
    const double lo = static_cast<double>(k) / nn;
    const double hi = std::min(static_cast<double>(k + 1) / nn, horizon);
    const auto xa = solution.value_at(lo);
    auto gap = [&](double u) {
      const auto xu = solution.value_at(u);
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += (xa[c] - xu[c]) * (xa[c] - xu[c]);
      return std::sqrt(s);
    };
    double sup = gap(hi);
    for (auto it = std::upper_bound(bps.begin(), bps.end(), lo); it != bps.end() && *it <= hi; ++it)
      sup = std::max(sup, gap(*it));
    out[k] = sup;
  }
  return out;
}

ProportionEstimate resolution_gap(const CoefficientModel& model, const MartingaleMeasureSpec& spec, std::size_t n,
                                  std::size_t m, double horizon, double epsilon, std::size_t replications,
                                  std::uint64_t seed, std::size_t threads) {
  if (n == 0 || m == 0) throw ArgumentError("resolution_gap: resolutions must be positive");
  if (m % n != 0) throw ArgumentError("resolution_gap: m must be a multiple of n");
  if (!(epsilon > 0.0)) throw ArgumentError("resolution_gap: epsilon must be positive");
  const std::vector<double> grid = uniform_grid(m, horizon);
  std::vector<unsigned char> exceeded(replications, 0);
  parallel_for(replications, threads, [&](std::size_t r) {
    const NoiseRealization noise = sample_noise(spec, grid, {seed, r});
    SolveOptions opts;
    opts.replication = r;
    const CadlagPath coarse = euler_solve(model, spec, noise, n, opts);
    const CadlagPath fine = euler_solve(model, spec, noise, m, opts);
    exceeded[r] = sup_distance(coarse, fine, 0.0, horizon) > epsilon ? 1 : 0;
  });
  std::size_t count = 0;
  for (unsigned char v : exceeded) count += v;
  return estimate_proportion(count, replications);
}

StrongErrorStudy strong_error_study(const CoefficientModel& model, const MartingaleMeasureSpec& spec,
                                    std::span<const std::size_t> ns, double horizon, std::size_t replications,
                                    std::uint64_t seed, const TerminalOracle& oracle, std::size_t threads) {
  if (ns.empty()) throw ArgumentError("strong_error_study: no resolutions given");
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (ns[i] == 0) throw ArgumentError("strong_error_study: resolutions must be positive");
    if (i > 0 && ns[i] <= ns[i - 1]) throw ArgumentError("strong_error_study: resolutions must increase");
  }
  const std::size_t finest = ns.back();
  for (std::size_t n : ns) {
    if (finest % n != 0) throw ArgumentError("strong_error_study: every n must divide the finest resolution");
  }
  const std::size_t studied = oracle ? ns.size() : ns.size() - 1;
  if (studied == 0) throw ArgumentError("strong_error_study: need a coarser resolution than the reference");

  const std::vector<double> grid = uniform_grid(finest, horizon);
  std::vector<double> errors(studied * replications);
  parallel_for(replications, threads, [&](std::size_t r) {
    const NoiseRealization noise = sample_noise(spec, grid, {seed, r});
    SolveOptions opts;
    opts.replication = r;
    Vector reference;
    if (oracle) {
      reference = oracle(noise);
    } else {
      const CadlagPath ref = euler_solve(model, spec, noise, finest, opts);
      const auto v = ref.value_at(horizon);
      reference.assign(v.begin(), v.end());
    }
    for (std::size_t i = 0; i < studied; ++i) {
      const CadlagPath x = euler_solve(model, spec, noise, ns[i], opts);
      const auto v = x.value_at(horizon);
      double s = 0.0;
      for (std::size_t k = 0; k < v.size(); ++k) s += (v[k] - reference[k]) * (v[k] - reference[k]);
      errors[i * replications + r] = std::sqrt(s);
    }
  });

  StrongErrorStudy study;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < studied; ++i) {
    StrongErrorPoint pt;
    pt.n = ns[i];
    pt.error = estimate_mean(std::span<const double>(errors).subspan(i * replications, replications));
    study.points.push_back(pt);
    if (pt.error.mean > 0.0) {
      xs.push_back(static_cast<double>(pt.n));
      ys.push_back(pt.error.mean);
    }
  }
  if (xs.size() >= 2) study.fit = fit_log_log(xs, ys);
  return study;
}

}  // namespace sde
