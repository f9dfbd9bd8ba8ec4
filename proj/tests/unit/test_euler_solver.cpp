#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "oracles.hpp"
#include "sde/errors.hpp"
#include "sde/euler_solver.hpp"
#include "sde/models.hpp"

using namespace sde;

namespace {

CoefficientModel delay_ode() { return delay_linear_model(1.0, 1.0, 0.0, 1.0).model; }

const auto kNoNoise = MartingaleMeasureSpec::wiener(0);

double delay_error(std::size_t n) {
  const auto x = euler_solve(delay_ode(), kNoNoise, n, 2.0, {1, 0});
  return std::abs(x.value_at(2.0)[0] - oracle::delay_ode(2.0));
}

}  // namespace

TEST_CASE("kappa") {
  CHECK(kappa(2, 0.75, 1.0) == 0.5);
  CHECK(kappa(2, 0.5, 1.0) == 0.0);
  CHECK(kappa(3, -0.2, 1.0) == -0.2);
  CHECK(kappa(5, 0.0, 1.0) == 0.0);
  CHECK(kappa(4, 1.0, 1.0) == 0.75);
  CHECK(kappa(4, 1.01, 1.0) == 1.0);
  CHECK(kappa(10, 0.3, 1.0) == doctest::Approx(0.2));
  CHECK_THROWS_AS(kappa(2, -1.5, 1.0), DomainError);
  CHECK_THROWS_AS(kappa(0, 0.5, 1.0), ArgumentError);
  // anchors are grid points strictly left of t
  for (std::size_t n : {3u, 7u, 10u, 64u}) {
    for (std::size_t k = 0; k < 3 * n; ++k) {
      const double t = static_cast<double>(k + 1) / static_cast<double>(n);
      const double a = kappa(n, t, 1.0);
      CHECK(a < t);
      CHECK(a * static_cast<double>(n) == doctest::Approx(static_cast<double>(k)));
    }
  }
}

TEST_CASE("zero coefficients give the constant path") {
  const auto z = zero_model(2.5).model;
  const auto x = euler_solve(z, MartingaleMeasureSpec::wiener(1), 8, 1.0, {1, 0});
  for (std::size_t i = 0; i < x.segment_count(); ++i) CHECK(x.segment_value(i)[0] == 2.5);
  CHECK(x.start() == -1.0);
  CHECK(x.end() == 1.0);
  const auto p = remainder(x, 8);
  for (std::size_t i = 0; i < p.segment_count(); ++i) CHECK(p.segment_value(i)[0] == 0.0);
}

TEST_CASE("initial segment is reproduced bitwise") {
  auto m = delay_ode();
  m.initial = CadlagPath::scalar({-1.0, -0.4, -0.1}, {0.3, -1.7, 2.2}, 0.0);
  const auto x = euler_solve(m, kNoNoise, 16, 1.0, {1, 0});
  for (double s : {-1.0, -0.7, -0.4, -0.2, -0.1, -0.05}) CHECK(x.value_at(s)[0] == m.initial.value_at(s)[0]);
  CHECK(x.value_at(0.0)[0] == 2.2);
}

TEST_CASE("delay ODE against the method of steps") {
  for (std::size_t n : {16u, 64u, 256u}) CHECK(delay_error(n) <= 5.0 / static_cast<double>(n));
  std::vector<double> ns, errs;
  for (std::size_t n : {8u, 16u, 32u, 64u, 128u, 256u}) {
    ns.push_back(static_cast<double>(n));
    errs.push_back(delay_error(n));
  }
  const auto fit = fit_log_log(ns, errs);
  CHECK(fit.slope == doctest::Approx(-1.0).epsilon(0.2));
  // also pointwise on [0, 2]
  const auto x = euler_solve(delay_ode(), kNoNoise, 512, 2.0, {1, 0});
  for (double t : {0.25, 0.5, 1.0, 1.5, 1.75}) CHECK(std::abs(x.value_at(t)[0] - oracle::delay_ode(t)) <= 5.0 / 512);
}

TEST_CASE("GBM strong order") {
  const GbmParams p;
  const auto bm = gbm_model(p);
  const std::vector<std::size_t> ns{8, 16, 32, 64, 128};
  const auto study = strong_error_study(bm.model, MartingaleMeasureSpec::wiener(1), ns, 1.0, 2000, 99,
                                        [&](const NoiseRealization& w) { return gbm_exact_terminal(p, w); });
  REQUIRE(study.points.size() == 5);
  CHECK(study.fit.slope == doctest::Approx(-0.5).epsilon(0.3));
  for (std::size_t i = 1; i < study.points.size(); ++i)
    CHECK(study.points[i].error.mean < study.points[i - 1].error.mean);
}

TEST_CASE("strong error study without oracle uses the finest grid") {
  const auto bm = gbm_model({});
  const std::vector<std::size_t> ns{4, 8, 32};
  const auto study = strong_error_study(bm.model, MartingaleMeasureSpec::wiener(1), ns, 1.0, 200, 5);
  CHECK(study.points.size() == 2);
  const std::vector<std::size_t> bad{4, 6, 8};
  CHECK_THROWS_AS(strong_error_study(bm.model, MartingaleMeasureSpec::wiener(1), bad, 1.0, 10, 5), ArgumentError);
  const std::vector<std::size_t> single{8};
  CHECK_THROWS_AS(strong_error_study(bm.model, MartingaleMeasureSpec::wiener(1), single, 1.0, 10, 5), ArgumentError);
}

TEST_CASE("coarse solve on fine noise equals solve on aggregated increments") {
  const auto bm = gbm_model({0.3, 0.8, 1.0});
  const auto spec = MartingaleMeasureSpec::wiener(1);
  const auto fine = sample_noise(spec, uniform_grid(32, 1.0), {7, 3});
  std::vector<double> agg(8, 0.0);
  for (std::size_t j = 0; j < 32; ++j) agg[j / 4] += fine.increment(j, 0);
  const NoiseRealization coarse(uniform_grid(8, 1.0), 1, agg, {});
  const auto a = euler_solve(bm.model, spec, fine, 8);
  const auto b = euler_solve(bm.model, spec, coarse, 8);
  for (double t : {0.125, 0.5, 0.875, 1.0}) CHECK(a.value_at(t)[0] == doctest::Approx(b.value_at(t)[0]).epsilon(1e-12));
}

TEST_CASE("noise grid must refine the Euler grid") {
  const auto spec = MartingaleMeasureSpec::wiener(1);
  const auto noise = sample_noise(spec, uniform_grid(3, 1.0), {1, 1});
  CHECK_THROWS_AS(euler_solve(gbm_model({}).model, spec, noise, 4), ArgumentError);
  CHECK_THROWS_AS(euler_solve(gbm_model({}).model, MartingaleMeasureSpec::wiener(2), noise, 3), ArgumentError);
}

TEST_CASE("adaptedness: a shared noise prefix gives a shared solution prefix") {
  const auto spec = MartingaleMeasureSpec::poisson(1, 3.0, FiniteMarks{{1.0}});
  const auto bm = jump_gbm_model({0.1, 0.5, 1.0}, 0.2, 3.0);
  const auto a = sample_noise(spec, uniform_grid(16, 1.0), {1, 1});
  const auto b = sample_noise(spec, uniform_grid(16, 1.0), {2, 2});
  std::vector<double> inc(a.increments().begin(), a.increments().end());
  for (std::size_t j = 8; j < 16; ++j) inc[j] = b.increment(j, 0);
  std::vector<JumpEvent> ev;
  for (const auto& e : a.events()) {
    if (e.time <= 0.5) ev.push_back(e);
  }
  for (const auto& e : b.events()) {
    if (e.time > 0.5) ev.push_back(e);
  }
  const NoiseRealization mixed(uniform_grid(16, 1.0), 1, inc, ev);
  const auto xa = euler_solve(bm.model, spec, a, 16);
  const auto xm = euler_solve(bm.model, spec, mixed, 16);
  CHECK(xa.history(0.5) == xm.history(0.5));
}

TEST_CASE("coefficients see exactly the frozen history") {
  const auto spec = MartingaleMeasureSpec::poisson(1, 5.0, FiniteMarks{{1.0}});
  const auto bm = jump_gbm_model({0.1, 0.4, 1.0}, 0.3, 5.0);
  struct Seen {
    double t;
    double freeze;
    CadlagPath history;
  };
  std::vector<Seen> seen;
  auto model = bm.model;
  const auto drift = model.drift;
  model.drift = [&](double t, const PathView& x) {
    seen.push_back({t, x.freeze_time(), x.materialize()});
    return drift(t, x);
  };
  const auto g = model.diffusion;
  model.diffusion = [&](double t, const PathView& x, const Mark& m) {
    seen.push_back({t, x.freeze_time(), x.materialize()});
    return g(t, x, m);
  };
  const std::size_t n = 8;
  const auto noise = sample_noise(spec, uniform_grid(n, 1.0), {4, 2});
  REQUIRE_FALSE(noise.events().empty());
  const auto x = euler_solve(model, spec, noise, n);
  REQUIRE(seen.size() > 2 * n);
  for (const auto& s : seen) {
    const double anchor = std::floor(s.t * n) / n;
    // jump evaluations at t = (k+1)/n still belong to cell k
    const double expected = (s.t * n == std::floor(s.t * n) && s.t > s.freeze) ? s.t - 1.0 / n : anchor;
    CHECK(s.freeze == doctest::Approx(expected));
    CHECK(s.history == x.history(s.freeze));
  }
}

TEST_CASE("jumps are merged as breakpoints") {
  const auto spec = MartingaleMeasureSpec::poisson(0, 4.0, FiniteMarks{{1.0}});
  const auto bm = linear_model(0.0, 0.5, 0.0, 0, 4.0);
  const auto noise = sample_noise(spec, uniform_grid(4, 1.0), {9, 9});
  REQUIRE_FALSE(noise.events().empty());
  const auto x = euler_solve(bm.model, spec, noise, 4);
  for (const auto& e : noise.events()) {
    // f = 0: the state is 0.5 N(t) - 2 t, the compensator accrued since the
    // previous breakpoint is booked together with the jump
    const auto bps = x.breakpoints();
    const auto it = std::find(bps.begin(), bps.end(), e.time);
    REQUIRE(it != bps.end());
    const double prev = std::max(0.0, *(it - 1));
    CHECK(x.value_at(e.time)[0] - x.value_at(prev)[0] == doctest::Approx(0.5 - 2.0 * (e.time - prev)));
  }
  const double expected = 0.5 * static_cast<double>(noise.events().size()) - 0.5 * 4.0;
  CHECK(x.value_at(1.0)[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("model errors carry time and replication") {
  auto m = gbm_model({}).model;
  m.drift = [](double t, const PathView&) -> Vector {
    if (t > 0.5) throw std::runtime_error("boom");
    return {0.0};
  };
  SolveOptions opts;
  opts.replication = 17;
  try {
    euler_solve(m, MartingaleMeasureSpec::wiener(1), 4, 1.0, {1, 0}, opts);
    FAIL("expected a model error");
  } catch (const ModelError& e) {
    CHECK(e.replication() == 17);
    CHECK(e.time() == doctest::Approx(0.75));
    CHECK(std::string(e.what()).find("replication=17") != std::string::npos);
  }
  m.drift = [](double, const PathView&) { return Vector{0.0, 1.0}; };
  CHECK_THROWS_AS(euler_solve(m, MartingaleMeasureSpec::wiener(1), 4, 1.0, {1, 0}), ModelError);
}

TEST_CASE("model validation") {
  auto m = gbm_model({}).model;
  m.initial = CadlagPath::constant(-0.5, 0.0, 1.0);
  CHECK_THROWS_AS(euler_solve(m, MartingaleMeasureSpec::wiener(1), 4, 1.0, {1, 0}), ArgumentError);
  m = gbm_model({}).model;
  m.drift = nullptr;
  CHECK_THROWS_AS(m.validate(), ArgumentError);
  CHECK_THROWS_AS(euler_solve(gbm_model({}).model, MartingaleMeasureSpec::wiener(1), 0, 1.0, {1, 0}), ArgumentError);
}

TEST_CASE("explosion guard") {
  const auto bm = superlinear_model(1.0);
  SolveOptions opts;
  opts.explosion_bound = 1e6;
  CHECK_THROWS_AS(euler_solve(bm.model, kNoNoise, 64, 2.0, {1, 0}, opts), ExplosionError);
  CHECK_NOTHROW(euler_solve(bm.model, kNoNoise, 64, 0.5, {1, 0}, opts));
}

TEST_CASE("remainder vanishes at grid points") {
  const auto bm = gbm_model({0.05, 0.5, 1.0});
  const auto x = euler_solve(bm.model, MartingaleMeasureSpec::wiener(1), 16, 1.0, {3, 3});
  const auto fine = euler_solve(bm.model, MartingaleMeasureSpec::wiener(1), sample_noise(MartingaleMeasureSpec::wiener(1), uniform_grid(64, 1.0), {3, 3}), 16);
  for (const auto* path : {&x, &fine}) {
    const auto p = remainder(*path, 16);
    for (std::size_t k = 0; k <= 16; ++k) CHECK(p.value_at(k / 16.0)[0] == 0.0);
    for (double s : {-0.5, -0.01}) CHECK(p.value_at(s)[0] == 0.0);
    // inside a cell p = X(k/n) - X(s)
    const double s = 0.3;
    CHECK(p.value_at(s)[0] == path->value_at(0.25)[0] - path->value_at(s)[0]);
  }
  const auto sups = remainder_cell_sup(fine, 16);
  REQUIRE(sups.size() == 16);
  for (std::size_t k = 0; k < 16; ++k) {
    CHECK(sups[k] >= std::abs(fine.value_at((k + 1) / 16.0)[0] - fine.value_at(k / 16.0)[0]));
  }
}

TEST_CASE("remainder shrinks with n") {
  const auto bm = gbm_model({});
  const auto spec = MartingaleMeasureSpec::wiener(1);
  std::vector<ProportionEstimate> est;
  for (std::size_t n : {16u, 64u, 256u}) {
    std::size_t hits = 0;
    const std::size_t reps = 2000;
    for (std::size_t r = 0; r < reps; ++r) {
      const auto x = euler_solve(bm.model, spec, sample_noise(spec, uniform_grid(256, 1.0), {8, r}), n);
      const auto s = remainder_cell_sup(x, n);
      if (*std::max_element(s.begin(), s.end()) > 0.05) ++hits;
    }
    est.push_back(estimate_proportion(hits, reps));
  }
  for (std::size_t i = 1; i < est.size(); ++i) CHECK(est[i].ci.lower <= est[i - 1].ci.upper);
  CHECK(est.back().p < est.front().p);
}

TEST_CASE("resolution gap") {
  const auto bm = gbm_model({});
  const auto spec = MartingaleMeasureSpec::wiener(1);
  CHECK(resolution_gap(bm.model, spec, 8, 8, 1.0, 1e-12, 100, 1).p == 0.0);
  CHECK_THROWS_AS(resolution_gap(bm.model, spec, 8, 12, 1.0, 0.1, 10, 1), ArgumentError);
  CHECK(resolution_gap(delay_ode(), kNoNoise, 32, 64, 2.0, 0.1, 20, 1).p == 0.0);
  const auto loud = gbm_model({0.05, 1.0, 1.0});
  const auto a = resolution_gap(loud.model, spec, 8, 16, 1.0, 0.1, 1000, 2);
  const auto b = resolution_gap(loud.model, spec, 32, 64, 1.0, 0.1, 1000, 2);
  CHECK(a.p > 0.0);
  CHECK(b.ci.lower <= a.ci.upper);
}

TEST_CASE("GBM oracle uses the realization's Brownian path") {
  const auto spec = MartingaleMeasureSpec::wiener(1);
  const auto noise = sample_noise(spec, uniform_grid(4, 2.0), {1, 2});
  const GbmParams p{0.1, 0.3, 2.0};
  const double w = noise.wiener_terminal(0);
  CHECK(gbm_exact_terminal(p, noise)[0] == doctest::Approx(2.0 * std::exp((0.1 - 0.045) * 2.0 + 0.3 * w)));
}
