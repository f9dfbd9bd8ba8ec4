#include "sde/gronwall_lab.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sde/csv.hpp"
#include "sde/errors.hpp"
#include "sde/euler_solver.hpp"
#include "sde/martingale_noise.hpp"
#include "sde/parallel.hpp"
#include "sde/rng.hpp"

namespace sde {

namespace {

void require_unit_interval(double v, const char* name) {
  if (!(v > 0.0 && v < 1.0)) throw DomainError(std::string(name) + " must lie in (0,1)");
}

double scalar_at(const CadlagPath& p, double t) { return p.value_at(t)[0]; }

}  // namespace

double c_p(double p) {
  require_unit_interval(p, "p");
  return std::pow(p, -p) / (1.0 - p);
}

GronwallVariant parse_variant(const std::string& tag) {
  if (tag == "a") return GronwallVariant::a;
  if (tag == "b") return GronwallVariant::b;
  if (tag == "c") return GronwallVariant::c;
  throw ArgumentError("unknown Gronwall variant \"" + tag + "\" (expected a, b or c)");
}

std::string to_string(GronwallVariant v) {
  switch (v) {
    case GronwallVariant::a: return "a";
    case GronwallVariant::b: return "b";
    case GronwallVariant::c: return "c";
  }
  return "?";
}

double gronwall_bound(GronwallVariant variant, double p, double a_T, double h_stat) {
  const double cp = c_p(p);
  switch (variant) {
    case GronwallVariant::a:
      return cp / p * h_stat * std::exp(std::pow(cp, 1.0 / p) * a_T);
    case GronwallVariant::b:
      return (cp + 1.0) / p * h_stat * std::exp(std::pow(cp + 1.0, 1.0 / p) * a_T);
    case GronwallVariant::c:
      return cp / p * std::pow(h_stat, p) * std::exp(std::pow(cp, 1.0 / p) * a_T);
  }
  throw ArgumentError("invalid Gronwall variant");
}

double stieltjes_running_sup(const CadlagPath& x, const Integrator& a, double t) {
  const auto bps = x.breakpoints();
  double total = 0.0;
  double running = 0.0;
  for (std::size_t i = 0; i < bps.size() && bps[i] < t; ++i) {
    running = std::max(running, norm(x.segment_value(i)));
    const double next = i + 1 < bps.size() ? std::min(bps[i + 1], t) : t;
    total += running * (a(next) - a(bps[i]));
  }
  return total;
}

void GronwallEnsemble::validate() const {
  if (x.empty()) throw EnsembleError("ensemble has no replications");
  if (m.size() != x.size() || h.size() != x.size()) throw EnsembleError("X, M and H ensembles differ in size");
  if (!a) throw EnsembleError("integrator A is missing");
  if (std::abs(a(0.0)) > 1e-12) throw EnsembleError("A(0) must be 0");

  std::vector<double> times;
  for (std::size_t r = 0; r < x.size(); ++r) {
    const CadlagPath* paths[] = {&x[r], &m[r], &h[r]};
    for (const CadlagPath* p : paths) {
      if (p->dimension() != 1) throw EnsembleError("ensemble paths must be scalar");
      if (p->start() != 0.0 || p->end() < horizon) throw EnsembleError("ensemble paths must cover [0, T]");
    }
    const auto rep = " (replication " + std::to_string(r) + ")";
    if (std::abs(scalar_at(m[r], 0.0)) > 1e-12) throw EnsembleError("M(0) must be 0" + rep);
    if (scalar_at(h[r], 0.0) < 0.0) throw EnsembleError("H(0) must be non-negative" + rep);
    for (std::size_t i = 1; i < h[r].segment_count(); ++i) {
      if (h[r].segment_value(i)[0] < h[r].segment_value(i - 1)[0]) throw EnsembleError("H must be non-decreasing" + rep);
    }
    for (std::size_t i = 0; i < x[r].segment_count(); ++i) {
      if (x[r].segment_value(i)[0] < 0.0) throw EnsembleError("X must be non-negative" + rep);
    }

    times.clear();
    for (const CadlagPath* p : paths) {
      for (double t : p->breakpoints()) {
        if (t <= horizon) times.push_back(t);
      }
    }
    times.push_back(horizon);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    // Walk the merged times keeping int_0^t X*(u-) dA(u) incrementally.
    const auto xb = x[r].breakpoints();
    std::size_t seg = 0;  // X segment containing the previous time
    double integral = 0.0;
    double running = scalar_at(x[r], 0.0);
    double prev_t = 0.0;
    double prev_a = a(0.0);
    for (double t : times) {
      const double at = a(t);
      if (at < prev_a) throw EnsembleError("A must be non-decreasing");
      integral += running * (at - prev_a);
      prev_a = at;
      prev_t = t;
      while (seg + 1 < xb.size() && xb[seg + 1] <= prev_t) ++seg;
      running = std::max(running, x[r].segment_value(seg)[0]);

      const double lhs = scalar_at(x[r], t);
      const double rhs = integral + scalar_at(m[r], t) + scalar_at(h[r], t);
      if (lhs > rhs + 1e-9 * std::max(1.0, std::abs(rhs)))
        throw EnsembleError("assumption X(t) <= int X*(u-) dA + M + H fails at t=" + format_double(t) + rep);
    }
  }
}

GronwallEnsemble GronwallEnsemble::scaled(double k) const {
  if (!(k > 0.0)) throw ArgumentError("scale factor must be positive");
  GronwallEnsemble out = *this;
  for (auto& p : out.x) p = p.scaled(k);
  for (auto& p : out.m) p = p.scaled(k);
  for (auto& p : out.h) p = p.scaled(k);
  return out;
}

GronwallEnsemble gbm_gronwall_ensemble(const GbmParams& params, std::size_t n, double horizon,
                                       std::size_t replications, std::uint64_t seed, std::size_t threads) {
  const BuiltinModel gbm = gbm_model(params);
  const MartingaleMeasureSpec spec = MartingaleMeasureSpec::wiener(1);
  const std::vector<double> grid = uniform_grid(n, horizon);
  double h_max = 0.0;
  for (std::size_t j = 0; j + 1 < grid.size(); ++j) h_max = std::max(h_max, grid[j + 1] - grid[j]);
  const double mu = params.mu, s2 = params.sigma * params.sigma;
  const double k_rate = std::max(0.0, 2.0 * mu + s2 + mu * mu * h_max);
  const double x0sq = params.x0 * params.x0;

  GronwallEnsemble ens;
  ens.horizon = horizon;
  ens.seed = seed;
  ens.h_predictable = true;
  ens.m_continuous = true;
  ens.a = [k_rate](double t) { return k_rate * t; };
  ens.x.resize(replications);
  ens.m.resize(replications);
  ens.h.resize(replications);

  std::vector<double> h_values(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) h_values[j] = x0sq + k_rate * grid[j];
  const CadlagPath h_path(1, grid, h_values, horizon);

  parallel_for(replications, threads, [&](std::size_t r) {
    const NoiseRealization noise = sample_noise(spec, grid, {seed, r});
    SolveOptions opts;
    opts.replication = r;
    const CadlagPath y = euler_solve(gbm.model, spec, noise, n, opts);
    std::vector<double> xs(grid.size()), ms(grid.size());
    double y_prev = scalar_at(y, 0.0);
    xs[0] = y_prev * y_prev;
    ms[0] = 0.0;
    for (std::size_t j = 1; j < grid.size(); ++j) {
      const double h = grid[j] - grid[j - 1];
      const double y_now = scalar_at(y, grid[j]);
      // Exact one-step conditional mean: E[Y_{j+1}^2 | F_j] = Y_j^2 (1 + (2mu + sigma^2 + mu^2 h) h).
      const double drift = (2.0 * mu + s2 + mu * mu * h) * h * y_prev * y_prev;
      xs[j] = y_now * y_now;
      ms[j] = ms[j - 1] + xs[j] - xs[j - 1] - drift;
      y_prev = y_now;
    }
    ens.x[r] = CadlagPath(1, grid, std::move(xs), horizon);
    ens.m[r] = CadlagPath(1, grid, std::move(ms), horizon);
    ens.h[r] = h_path;
  });
  return ens;
}

double counterexample_upper(double q, double alpha) {
  require_unit_interval(q, "q");
  require_unit_interval(alpha, "alpha");
  return std::pow(1.0 - q, 1.0 - 1.0 / alpha) / q;
}

double counterexample_lower(double q, double alpha) {
  require_unit_interval(q, "q");
  require_unit_interval(alpha, "alpha");
  return std::pow(1.0 - q, -1.0 / alpha);
}

double counterexample_lhs_exact(double q, double alpha, double p) {
  require_unit_interval(q, "q");
  require_unit_interval(alpha, "alpha");
  require_unit_interval(p, "p");
  return std::pow(1.0 - q, p * (1.0 - 1.0 / alpha)) * std::pow(q, 1.0 - p);
}

GronwallEnsemble counterexample_ensemble(double q, double alpha, std::size_t replications, std::uint64_t seed) {
  const double up = counterexample_upper(q, alpha);
  const double down = counterexample_lower(q, alpha);
  RngStream rng(StreamKey{seed, 0}, Substream::ensemble);
  GronwallEnsemble ens;
  ens.horizon = 1.0;
  ens.seed = seed;
  ens.h_predictable = false;
  ens.m_continuous = false;
  ens.a = [](double) { return 0.0; };
  for (std::size_t r = 0; r < replications; ++r) {
    const double s = rng.uniform() < q ? up : -down;
    const double s_plus = std::max(s, 0.0);
    const double s_minus = std::max(-s, 0.0);
    ens.m.push_back(CadlagPath::scalar({0.0, 1.0}, {0.0, s}, 1.0));
    ens.h.push_back(CadlagPath::scalar({0.0, 1.0}, {0.0, s_minus}, 1.0));
    ens.x.push_back(CadlagPath::scalar({0.0, 1.0}, {0.0, s_plus}, 1.0));
  }
  return ens;
}

GronwallEnsemble deterministic_ensemble(double h0, std::size_t replications, double horizon) {
  if (h0 < 0.0) throw ArgumentError("deterministic_ensemble: h0 must be non-negative");
  GronwallEnsemble ens;
  ens.horizon = horizon;
  ens.h_predictable = true;
  ens.m_continuous = true;
  ens.a = [](double) { return 0.0; };
  for (std::size_t r = 0; r < replications; ++r) {
    ens.x.push_back(CadlagPath::constant(0.0, horizon, h0));
    ens.m.push_back(CadlagPath::constant(0.0, horizon, 0.0));
    ens.h.push_back(CadlagPath::constant(0.0, horizon, h0));
  }
  return ens;
}

nlohmann::json VerificationReport::to_json() const {
  return {
      {"variant", to_string(variant)},
      {"p", p},
      {"lhs", lhs.mean},
      {"lhs_std_error", lhs.std_error},
      {"lhs_ci", {lhs_ci.lower, lhs_ci.upper}},
      {"h_stat", h_stat},
      {"A_T", a_T},
      {"rhs", rhs},
      {"verdict", holds ? "holds" : "violated"},
      {"replications", replications},
      {"seed", seed},
  };
}

VerificationReport verify_gronwall(const GronwallEnsemble& ensemble, GronwallVariant variant, double p,
                                   const VerifyOptions& options) {
  require_unit_interval(p, "p");
  ensemble.validate();
  if (options.enforce_preconditions) {
    if (variant == GronwallVariant::a && !ensemble.h_predictable)
      throw EnsembleError("variant a requires H to be certified predictable");
    if (variant == GronwallVariant::b && !ensemble.m_continuous) {
      for (const auto& path : ensemble.m) {
        for (std::size_t i = 1; i < path.segment_count(); ++i) {
          if (path.segment_value(i)[0] - path.segment_value(i - 1)[0] < -1e-12)
            throw EnsembleError("variant b requires M without negative jumps");
        }
      }
    }
  }

  const std::size_t reps = ensemble.replications();
  const double horizon = ensemble.horizon;
  std::vector<double> lhs(reps), hs(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    const double sup = ensemble.x[r].window_sup(0.0, horizon);
    lhs[r] = std::pow(sup, p);
    const double h_T = scalar_at(ensemble.h[r], horizon);
    hs[r] = variant == GronwallVariant::c ? h_T : std::pow(h_T, p);
  }

  VerificationReport rep;
  rep.variant = variant;
  rep.p = p;
  rep.lhs = estimate_mean(lhs);
  rep.lhs_ci = {rep.lhs.lower(), rep.lhs.upper()};
  rep.h_stat = estimate_mean(hs).mean;
  rep.a_T = ensemble.a(horizon);
  rep.rhs = gronwall_bound(variant, p, rep.a_T, rep.h_stat);
  rep.holds = rep.lhs_ci.upper <= rep.rhs;
  rep.replications = reps;
  rep.seed = ensemble.seed;
  return rep;
}

// ---- Lenglart ----

SupSamples sample_sups(const PairGenerator& generator, std::size_t replications, std::uint64_t seed,
                       std::size_t threads) {
  SupSamples out;
  out.x.resize(replications);
  out.g.resize(replications);
  parallel_for(replications, threads, [&](std::size_t r) {
    const DominatedPair pair = generator(seed, r);
    out.x[r] = pair.x.window_sup(pair.x.start(), pair.x.end());
    out.g[r] = pair.g.window_sup(pair.g.start(), pair.g.end());
  });
  return out;
}

SupSamples sups_of(std::span<const CadlagPath> x_paths, std::span<const CadlagPath> g_paths) {
  if (x_paths.size() != g_paths.size()) throw ArgumentError("X and G ensembles differ in size");
  SupSamples out;
  for (std::size_t r = 0; r < x_paths.size(); ++r) {
    out.x.push_back(x_paths[r].window_sup(x_paths[r].start(), x_paths[r].end()));
    out.g.push_back(g_paths[r].window_sup(g_paths[r].start(), g_paths[r].end()));
  }
  return out;
}

TailReport lenglart_tail(const SupSamples& sups, double c, double d) {
  if (!(c > 0.0) || !(d > 0.0)) throw DomainError("lenglart_tail: c and d must be positive");
  if (sups.x.size() != sups.g.size() || sups.x.empty()) throw ArgumentError("lenglart_tail: bad sample sizes");
  const std::size_t n = sups.x.size();
  std::size_t exceed = 0, g_large = 0;
  std::vector<double> capped(n);
  for (std::size_t r = 0; r < n; ++r) {
    if (sups.x[r] > c) ++exceed;
    if (sups.g[r] >= d) ++g_large;
    capped[r] = std::min(sups.g[r], d);
  }
  TailReport rep;
  rep.c = c;
  rep.d = d;
  rep.lhs = estimate_proportion(exceed, n, kZ99OneSided);
  const MeanEstimate cap = estimate_mean(capped);
  const ProportionEstimate tail = estimate_proportion(g_large, n, kZ99OneSided);
  rep.rhs = cap.mean / c + tail.p;
  rep.rhs_upper = cap.upper() / c + tail.ci.upper;
  rep.holds = rep.lhs.ci.lower <= rep.rhs_upper;
  return rep;
}

TailReport lenglart_tail(std::span<const CadlagPath> x_paths, std::span<const CadlagPath> g_paths, double c,
                         double d) {
  return lenglart_tail(sups_of(x_paths, g_paths), c, d);
}

MomentReport lenglart_moment(const SupSamples& sups, double p) {
  require_unit_interval(p, "p");
  if (sups.x.size() != sups.g.size() || sups.x.empty()) throw ArgumentError("lenglart_moment: bad sample sizes");
  std::vector<double> xs(sups.x.size()), gs(sups.g.size());
  for (std::size_t r = 0; r < xs.size(); ++r) {
    xs[r] = std::pow(sups.x[r], p);
    gs[r] = std::pow(sups.g[r], p);
  }
  MomentReport rep;
  rep.p = p;
  rep.lhs = estimate_mean(xs);
  rep.lhs_upper = rep.lhs.upper();
  rep.rhs = c_p(p) * estimate_mean(gs).mean;
  rep.holds = rep.lhs_upper <= rep.rhs;
  return rep;
}

MomentReport lenglart_moment(std::span<const CadlagPath> x_paths, std::span<const CadlagPath> g_paths, double p) {
  return lenglart_moment(sups_of(x_paths, g_paths), p);
}

PairGenerator brownian_square_pair(std::size_t steps) {
  if (steps == 0) throw ArgumentError("brownian_square_pair: steps must be positive");
  return [steps](std::uint64_t seed, std::size_t r) {
    RngStream rng(StreamKey{seed, r}, Substream::sampler);
    const double h = 1.0 / static_cast<double>(steps);
    const double sd = std::sqrt(h);
    std::vector<double> t(steps + 1), x(steps + 1), g(steps + 1);
    double b = 0.0;
    for (std::size_t j = 0; j <= steps; ++j) {
      if (j > 0) b += rng.normal(0.0, sd);
      t[j] = static_cast<double>(j) / static_cast<double>(steps);
      x[j] = b * b;
      g[j] = t[j];
    }
    return DominatedPair{CadlagPath(1, t, std::move(x), 1.0), CadlagPath(1, t, std::move(g), 1.0)};
  };
}

PairGenerator poisson_count_pair(double rate, double horizon) {
  if (!(rate > 0.0) || !(horizon > 0.0)) throw ArgumentError("poisson_count_pair: rate and horizon must be positive");
  return [rate, horizon](std::uint64_t seed, std::size_t r) {
    RngStream rng(StreamKey{seed, r}, Substream::sampler);
    std::vector<double> t{0.0}, x{0.0};
    double s = 0.0;
    while (true) {
      s += rng.exponential(rate);
      if (s > horizon) break;
      t.push_back(s);
      x.push_back(x.back() + 1.0);
    }
    std::vector<double> gt = t;
    if (gt.back() < horizon) gt.push_back(horizon);
    std::vector<double> g(gt.size());
    for (std::size_t i = 0; i < gt.size(); ++i) g[i] = rate * gt[i];
    return DominatedPair{CadlagPath(1, std::move(t), std::move(x), horizon),
                         CadlagPath(1, std::move(gt), std::move(g), horizon)};
  };
}

PairGenerator exponential_martingale_pair(double sigma, std::size_t steps, double horizon) {
  if (steps == 0 || !(horizon > 0.0)) throw ArgumentError("exponential_martingale_pair: bad grid");
  return [sigma, steps, horizon](std::uint64_t seed, std::size_t r) {
    RngStream rng(StreamKey{seed, r}, Substream::sampler);
    const double h = horizon / static_cast<double>(steps);
    std::vector<double> t(steps + 1), x(steps + 1);
    double b = 0.0;
    for (std::size_t j = 0; j <= steps; ++j) {
      if (j > 0) b += rng.normal(0.0, std::sqrt(h));
      t[j] = j == steps ? horizon : static_cast<double>(j) * h;
      x[j] = std::exp(sigma * b - 0.5 * sigma * sigma * t[j]);
    }
    return DominatedPair{CadlagPath(1, std::move(t), std::move(x), horizon), CadlagPath::constant(0.0, horizon, 1.0)};
  };
}

PairGenerator constant_pair(double value) {
  if (value < 0.0) throw ArgumentError("constant_pair: value must be non-negative");
  return [value](std::uint64_t, std::size_t) {
    return DominatedPair{CadlagPath::constant(0.0, 1.0, value), CadlagPath::constant(0.0, 1.0, value)};
  };
}

PairGenerator scaled_pair(PairGenerator base, double factor) {
  if (!(factor > 0.0)) throw ArgumentError("scaled_pair: factor must be positive");
  return [base = std::move(base), factor](std::uint64_t seed, std::size_t r) {
    DominatedPair pair = base(seed, r);
    return DominatedPair{pair.x.scaled(factor), pair.g.scaled(factor)};
  };
}

CounterexampleStats counterexample_stats(double q, double alpha, double p, std::size_t replications,
                                         std::uint64_t seed) {
  CounterexampleStats out;
  out.q = q;
  out.alpha = alpha;
  out.p = p;
  out.lhs_exact = counterexample_lhs_exact(q, alpha, p);
  out.h_moment_exact = 1.0;
  const double up = counterexample_upper(q, alpha);
  const double down = counterexample_lower(q, alpha);
  const double up_p = std::pow(up, p);
  const double down_alpha = std::pow(down, alpha);
  RngStream rng(StreamKey{seed, 0}, Substream::ensemble);
  std::vector<double> plus(replications), minus(replications), value(replications);
  for (std::size_t r = 0; r < replications; ++r) {
    const bool high = rng.uniform() < q;
    plus[r] = high ? up_p : 0.0;
    minus[r] = high ? 0.0 : down_alpha;
    value[r] = high ? up : -down;
  }
  out.lhs_mc = estimate_mean(plus);
  out.h_moment_mc = estimate_mean(minus);
  out.mean_mc = estimate_mean(value);
  return out;
}

}  // namespace sde
