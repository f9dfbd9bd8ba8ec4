#include "sde/hypothesis_checker.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>

#include "sde/csv.hpp"
#include "sde/errors.hpp"
#include "sde/parallel.hpp"
#include "sde/rng.hpp"

namespace sde {

namespace {

constexpr int kProbeSteps = 8;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// x + k y on the union of breakpoints; both paths share one domain.
CadlagPath affine(const CadlagPath& x, double k, const CadlagPath& y) {
  std::vector<double> times(x.breakpoints().begin(), x.breakpoints().end());
  times.insert(times.end(), y.breakpoints().begin(), y.breakpoints().end());
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  const std::size_t d = x.dimension();
  std::vector<double> values;
  values.reserve(times.size() * d);
  for (double t : times) {
    const auto a = x.value_at(t);
    const auto b = y.value_at(t);
    for (std::size_t c = 0; c < d; ++c) values.push_back(a[c] + k * b[c]);
  }
  return CadlagPath(d, std::move(times), std::move(values), x.end());
}

std::vector<double> random_point(RngStream& rng, std::size_t dim, double radius) {
  std::vector<double> v(dim);
  double n = 0.0;
  do {
    for (double& c : v) c = rng.normal();
    n = norm(v);
  } while (n == 0.0);
  // Every fifth point sits on the boundary of the ball.
  const double r = rng.uniform() < 0.2 ? radius : radius * rng.uniform();
  for (double& c : v) c *= r / n;
  return v;
}

CadlagPath random_path(RngStream& rng, std::size_t dim, double start, double t, const PathSampler& s) {
  if (rng.uniform() < s.zero_prob) return CadlagPath::constant(start, t, std::vector<double>(dim, 0.0));
  std::vector<double> times{start};
  const auto k = static_cast<std::size_t>(rng.uniform() * static_cast<double>(s.max_breakpoints + 1));
  for (std::size_t i = 0; i < k; ++i) times.push_back(rng.uniform(start, t));
  if (rng.uniform() < s.terminal_jump_prob) times.push_back(t);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  std::vector<double> values;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const auto p = random_point(rng, dim, s.radius);
    values.insert(values.end(), p.begin(), p.end());
  }
  return CadlagPath(dim, std::move(times), std::move(values), t);
}

// Pulls every segment value back into the closed ball of the given radius.
CadlagPath clamp_to_ball(const CadlagPath& p, double radius) {
  std::vector<double> values;
  for (std::size_t i = 0; i < p.segment_count(); ++i) {
    const auto v = p.segment_value(i);
    const double n = norm(v);
    const double k = n > radius ? radius / n : 1.0;
    for (double c : v) values.push_back(c * k);
  }
  return CadlagPath(p.dimension(), {p.breakpoints().begin(), p.breakpoints().end()}, std::move(values), p.end());
}

struct Sample {
  double t = 0.0;
  CadlagPath x;
  CadlagPath y;
};

Sample draw_sample(RngStream& rng, std::size_t dim, double delay, double t, Condition c, const PathSampler& s) {
  Sample out;
  out.t = t;
  out.x = random_path(rng, dim, -delay, t, s);
  if (c == Condition::c1) {
    if (rng.uniform() < s.perturbation_prob) {
      PathSampler small = s;
      small.radius = s.radius * std::pow(10.0, -6.0 * rng.uniform());
      small.zero_prob = 0.0;
      out.y = clamp_to_ball(affine(out.x, 1.0, random_path(rng, dim, -delay, t, small)), s.radius);
    } else {
      out.y = random_path(rng, dim, -delay, t, s);
    }
  } else if (c == Condition::c3) {
    PathSampler dir = s;
    dir.zero_prob = 0.0;
    out.y = random_path(rng, dim, -delay, t, dir);
  }
  return out;
}

class Evaluator {
 public:
  Evaluator(const CoefficientModel& model, const MartingaleMeasureSpec& spec) : model_(model), spec_(spec) {}

  Vector drift(double t, const CadlagPath& x) const {
    Vector v = model_.drift(t, PathView(x, t, t));
    if (v.size() != model_.dimension) throw ModelError("drift returned a vector of the wrong dimension", t, 0);
    return v;
  }

  // int |g(x) - k g(y)|^2 nu_t(d xi); y may be null.
  double g_energy(double t, const CadlagPath& x, const CadlagPath* y) const {
    if (!model_.diffusion) return 0.0;
    const PathView vx(x, t, t);
    std::optional<PathView> vy;
    if (y) vy.emplace(*y, t, t);
    auto term = [&](const Mark& mark) {
      const Vector gx = model_.diffusion(t, vx, mark);
      if (!vy) return dot(gx, gx);
      return squared_distance(gx, model_.diffusion(t, *vy, mark));
    };
    double total = 0.0;
    for (std::size_t i = 0; i < spec_.wiener_count(); ++i) total += term(Mark::wiener(i));
    if (spec_.has_jumps()) {
      const double lam = spec_.intensity(t);
      const auto& quad = spec_.mark_quadrature();
      double acc = 0.0;
      for (std::size_t k = 0; k < quad.size(); ++k) acc += quad.weight(k) * term(quad.mark(k));
      total += lam * acc;
    }
    return total;
  }

 private:
  const CoefficientModel& model_;
  const MartingaleMeasureSpec& spec_;
};

void require_rates(const RateFunctions& rates, Condition c) {
  if (c == Condition::c1 && !rates.local_monotonicity) throw ArgumentError("model supplies no L_R(t) for C1");
  if (c == Condition::c2 && !rates.coercivity) throw ArgumentError("model supplies no K(t) for C2");
  if (c == Condition::c4 && !rates.local_bound) throw ArgumentError("model supplies no K~_R(t) for C4");
}

void check_path(const CadlagPath& p, const CoefficientModel& model, double t, const char* name) {
  if (p.empty() || p.dimension() != model.dimension) throw ArgumentError(std::string(name) + ": wrong dimension");
  if (std::abs(p.start() + model.delay) > 1e-12 || p.end() != t)
    throw ArgumentError(std::string(name) + ": path must live on [-delay, t]");
}

// lhs and the rate-free denominator shared by check_condition and suggest_rate.
struct RawValue {
  double lhs = 0.0;
  double denominator = 1.0;
};

RawValue raw_value(const Evaluator& ev, const CoefficientModel& model, Condition c, double t, const CadlagPath& x,
                   const CadlagPath& y) {
  const double start = -model.delay;
  switch (c) {
    case Condition::c1: {
      const Vector fx = ev.drift(t, x), fy = ev.drift(t, y);
      const auto xl = x.left_limit(t), yl = y.left_limit(t);
      double inner = 0.0;
      for (std::size_t i = 0; i < fx.size(); ++i) inner += (xl[i] - yl[i]) * (fx[i] - fy[i]);
      const double sup = sup_distance(x, y, start, t);
      return {2.0 * inner + ev.g_energy(t, x, &y), sup * sup};
    }
    case Condition::c2: {
      const Vector fx = ev.drift(t, x);
      const double sup = x.window_sup(start, t);
      return {2.0 * dot(x.left_limit(t), fx) + ev.g_energy(t, x, nullptr), 1.0 + sup * sup};
    }
    case Condition::c4: {
      const Vector fx = ev.drift(t, x);
      return {norm(fx) + ev.g_energy(t, x, nullptr), 1.0};
    }
    default:
      throw ArgumentError("no rate function is attached to " + to_string(c));
  }
}

}  // namespace

Condition parse_condition(const std::string& tag) {
  if (tag == "C1") return Condition::c1;
  if (tag == "C2") return Condition::c2;
  if (tag == "C3") return Condition::c3;
  if (tag == "C4") return Condition::c4;
  if (tag == "C5") return Condition::c5;
  throw ArgumentError("unknown condition \"" + tag + "\" (expected C1..C5)");
}

std::string to_string(Condition c) {
  switch (c) {
    case Condition::c1: return "C1";
    case Condition::c2: return "C2";
    case Condition::c3: return "C3";
    case Condition::c4: return "C4";
    case Condition::c5: return "C5";
  }
  return "?";
}

double condition_tolerance(double rhs) { return 1e-9 * (1.0 + std::abs(rhs)); }

ConditionValue evaluate_condition(const CoefficientModel& model, const RateFunctions& rates,
                                  const MartingaleMeasureSpec& spec, Condition condition, double radius, double t,
                                  const CadlagPath& x, const CadlagPath& y) {
  require_rates(rates, condition);
  const Evaluator ev(model, spec);
  if (condition == Condition::c5) {
    const double sup = model.initial.window_sup(model.initial.start(), model.initial.end());
    const double lhs = sup * sup;
    return {std::isfinite(lhs) ? lhs : std::numeric_limits<double>::infinity(), DBL_MAX};
  }
  check_path(x, model, t, "x");
  if (condition == Condition::c1 || condition == Condition::c3) check_path(y, model, t, "y");

  switch (condition) {
    case Condition::c1: {
      const RawValue v = raw_value(ev, model, condition, t, x, y);
      return {v.lhs, rates.local_monotonicity(radius, t) * v.denominator};
    }
    case Condition::c2: {
      const RawValue v = raw_value(ev, model, condition, t, x, y);
      return {v.lhs, rates.coercivity(t) * v.denominator};
    }
    case Condition::c4: {
      const RawValue v = raw_value(ev, model, condition, t, x, y);
      return {v.lhs, rates.local_bound(radius, t)};
    }
    case Condition::c3: {
      // Modulus-of-continuity probe along x + 10^-k y, k = 1..8.
      const Vector fx = ev.drift(t, x);
      double diff = 0.0;
      for (int k = 1; k <= kProbeSteps; ++k) {
        const Vector fk = ev.drift(t, affine(x, std::pow(10.0, -k), y));
        diff = std::sqrt(squared_distance(fx, fk));
      }
      return {diff, 1e-6 * (1.0 + norm(fx))};
    }
    case Condition::c5: break;
  }
  throw ArgumentError("unknown condition");
}

ConditionReport check_condition(const CoefficientModel& model, const RateFunctions& rates,
                                const MartingaleMeasureSpec& spec, Condition condition, double radius,
                                const PathSampler& sampler, std::size_t samples, std::uint64_t seed,
                                std::size_t threads) {
  require_rates(rates, condition);
  model.validate();
  if (!(radius > 0.0)) throw ArgumentError("radius R must be positive");
  if (!(sampler.radius > 0.0) || !(sampler.horizon >= 0.0)) throw ArgumentError("sampler radius and horizon must be positive");
  if ((condition == Condition::c1 || condition == Condition::c4) && sampler.radius > radius)
    throw ArgumentError("sampler radius " + format_double(sampler.radius) + " exceeds R = " + format_double(radius));

  ConditionReport report;
  report.condition = condition;
  report.radius = radius;
  report.seed = seed;
  report.rate_functions_used = rates.description;

  if (condition == Condition::c5) {
    const ConditionValue v = evaluate_condition(model, rates, spec, condition, radius, 0.0, {}, {});
    report.samples = 1;
    if (!std::isfinite(v.lhs)) report.violations.push_back({0, 0.0, model.initial, {}, v.lhs, v.rhs, v.lhs - v.rhs});
    return report;
  }

  report.samples = samples;
  std::vector<std::optional<Violation>> found(samples);
  parallel_for(samples, threads, [&](std::size_t i) {
    RngStream rng(StreamKey{seed, i}, Substream::sampler);
    const double t = sampler.horizon * rng.uniform();
    Sample s = draw_sample(rng, model.dimension, model.delay, t, condition, sampler);
    ConditionValue v;
    try {
      v = evaluate_condition(model, rates, spec, condition, radius, t, s.x, s.y);
    } catch (const ModelError&) {
      throw;
    } catch (const std::exception& e) {
      throw ModelError(std::string("coefficient evaluation failed: ") + e.what(), t, i);
    }
    if (!(v.lhs <= v.rhs + condition_tolerance(v.rhs)))
      found[i] = Violation{i, t, std::move(s.x), std::move(s.y), v.lhs, v.rhs, v.lhs - v.rhs};
  });
  for (auto& f : found) {
    if (f) report.violations.push_back(std::move(*f));
  }
  return report;
}

double RateEnvelope::operator()(double t) const {
  if (times.empty()) throw EstimationError("empty rate envelope");
  auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t i = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
  return values[i];
}

RateEnvelope suggest_rate(const CoefficientModel& model, const MartingaleMeasureSpec& spec, Condition condition,
                          double radius, std::span<const double> times, std::size_t samples, std::uint64_t seed,
                          const PathSampler& sampler, std::size_t threads) {
  if (condition != Condition::c1 && condition != Condition::c2 && condition != Condition::c4)
    throw ArgumentError("no rate function is attached to " + to_string(condition));
  model.validate();
  if (times.empty()) throw ArgumentError("suggest_rate: empty time grid");
  if (!std::is_sorted(times.begin(), times.end())) throw ArgumentError("suggest_rate: time grid must be sorted");
  if ((condition == Condition::c1 || condition == Condition::c4) && sampler.radius > radius)
    throw ArgumentError("sampler radius exceeds R");

  const Evaluator ev(model, spec);
  const std::size_t nt = times.size();
  std::vector<double> ratio(nt * samples, -1.0);
  std::vector<char> used(nt * samples, 0);
  parallel_for(nt * samples, threads, [&](std::size_t idx) {
    const std::size_t ti = idx / samples, si = idx % samples;
    RngStream rng(seed, ti, 0x100000000ull + si);
    const Sample s = draw_sample(rng, model.dimension, model.delay, times[ti], condition, sampler);
    const RawValue v = raw_value(ev, model, condition, times[ti], s.x, s.y);
    if (v.denominator > 0.0) {
      ratio[idx] = v.lhs / v.denominator;
      used[idx] = 1;
    }
  });

  RateEnvelope env;
  env.times.assign(times.begin(), times.end());
  env.values.assign(nt, 0.0);
  bool any = false;
  for (std::size_t idx = 0; idx < ratio.size(); ++idx) {
    if (!used[idx]) continue;
    any = true;
    env.values[idx / samples] = std::max(env.values[idx / samples], ratio[idx]);
  }
  if (!any) throw EstimationError("every sample had a zero denominator");
  return env;
}

nlohmann::json ConditionReport::to_json() const {
  nlohmann::json v = nlohmann::json::array();
  for (const auto& w : violations) {
    v.push_back({{"sample", w.sample}, {"t", w.t}, {"lhs", w.lhs}, {"rhs", w.rhs}, {"margin", w.margin}});
  }
  return {
      {"condition", to_string(condition)},
      {"radius", radius},
      {"samples", samples},
      {"seed", seed},
      {"violation_count", violations.size()},
      {"violations", v},
      {"rate_functions_used", rate_functions_used},
      {"verdict", violations.empty() ? "holds" : "violated"},
  };
}

void write_witnesses_csv(std::ostream& out, const ConditionReport& report) {
  std::size_t d = 1;
  for (const auto& w : report.violations) {
    if (!w.x.empty()) d = w.x.dimension();
  }
  out << "sample,path,t";
  for (std::size_t c = 1; c <= d; ++c) out << ",x_" << c;
  out << '\n';
  for (const auto& w : report.violations) {
    auto dump = [&](const CadlagPath& p, const char* name) {
      if (p.empty()) return;
      for (std::size_t i = 0; i < p.segment_count(); ++i) {
        out << w.sample << ',' << name << ',' << format_double(p.breakpoints()[i]);
        for (double c : p.segment_value(i)) out << ',' << format_double(c);
        out << '\n';
      }
    };
    dump(w.x, "x");
    dump(w.y, "y");
  }
}

}  // namespace sde
