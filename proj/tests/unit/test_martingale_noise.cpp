#include "doctest.h"

#include <cmath>
#include <sstream>

#include "sde/errors.hpp"
#include "sde/martingale_noise.hpp"
#include "sde/parallel.hpp"

using namespace sde;

namespace {

const std::vector<double> kUnitGrid{0.0, 0.25, 0.5, 0.75, 1.0};

double within_sigmas(const MeanEstimate& e, double target) { return std::abs(e.mean - target) / e.std_error; }

std::vector<double> event_counts(const MartingaleMeasureSpec& spec, std::size_t reps, std::uint64_t seed) {
  std::vector<double> out(reps);
  for (std::size_t r = 0; r < reps; ++r) out[r] = static_cast<double>(sample_noise(spec, kUnitGrid, {seed, r}).events().size());
  return out;
}

Vector one(double) { return {1.0}; }

}  // namespace

TEST_CASE("null noise") {
  const auto spec = MartingaleMeasureSpec::wiener(0);
  const auto noise = sample_noise(spec, kUnitGrid, {1, 0});
  CHECK(noise.events().empty());
  CHECK(noise.increments().empty());
  CHECK_FALSE(spec.has_jumps());
}

TEST_CASE("spec errors") {
  CHECK_THROWS_AS(MartingaleMeasureSpec(0, [](double) { return 1.0; }, 0.0, FiniteMarks{{1.0}}).check_intensity(1.0),
                  SpecError);
  CHECK_THROWS_AS(MartingaleMeasureSpec(0, [](double) { return 1.0; }, 1.0, std::monostate{}), SpecError);
  CHECK_THROWS_AS(MartingaleMeasureSpec(0, [](double t) { return 3.0 * t; }, 2.0, FiniteMarks{{1.0}}).check_intensity(1.0),
                  SpecError);
  CHECK_THROWS_AS(MartingaleMeasureSpec::poisson(0, 1.0, FiniteMarks{{0.0, 0.0}}), SpecError);
  CHECK_THROWS_AS(MartingaleMeasureSpec::poisson(0, 1.0, RectangleMarks{{0.0}, {0.0}}), SpecError);
  CHECK_THROWS_AS(MartingaleMeasureSpec::poisson(0, -1.0, FiniteMarks{{1.0}}), SpecError);
}

TEST_CASE("grid errors") {
  const auto spec = MartingaleMeasureSpec::wiener(1);
  const std::vector<double> bad{0.0, 0.5, 0.5, 1.0};
  const std::vector<double> late{0.1, 0.5};
  CHECK_THROWS_AS(sample_noise(spec, bad, {1, 0}), ArgumentError);
  CHECK_THROWS_AS(sample_noise(spec, late, {1, 0}), ArgumentError);
}

TEST_CASE("uniform grid") {
  const auto g = uniform_grid(4, 1.1);
  REQUIRE(g.size() == 6);
  CHECK(g[4] == 1.0);
  CHECK(g[5] == 1.1);
  CHECK(uniform_grid(2, 1.0) == std::vector<double>{0.0, 0.5, 1.0});
}

TEST_CASE("sampling is deterministic per stream") {
  const auto spec = MartingaleMeasureSpec::poisson(2, 3.0, RectangleMarks{{0.0, -1.0}, {1.0, 1.0}});
  const auto a = sample_noise(spec, kUnitGrid, {5, 9});
  const auto b = sample_noise(spec, kUnitGrid, {5, 9});
  const auto c = sample_noise(spec, kUnitGrid, {5, 10});
  CHECK(std::equal(a.increments().begin(), a.increments().end(), b.increments().begin()));
  REQUIRE(a.events().size() == b.events().size());
  for (std::size_t e = 0; e < a.events().size(); ++e) {
    CHECK(a.events()[e].time == b.events()[e].time);
    CHECK(a.events()[e].point == b.events()[e].point);
    CHECK(a.events()[e].time > 0.0);
    CHECK(a.events()[e].time <= 1.0);
    CHECK(RectangleMarks{{0.0, -1.0}, {1.0, 1.0}}.contains(a.events()[e].point));
  }
  CHECK_FALSE(std::equal(a.increments().begin(), a.increments().end(), c.increments().begin()));
}

TEST_CASE("event times do not depend on the grid") {
  const auto spec = MartingaleMeasureSpec::poisson(1, 4.0, FiniteMarks{{1.0, 2.0}});
  const auto coarse = sample_noise(spec, uniform_grid(2, 1.0), {3, 1});
  const auto fine = sample_noise(spec, uniform_grid(64, 1.0), {3, 1});
  REQUIRE(coarse.events().size() == fine.events().size());
  for (std::size_t e = 0; e < fine.events().size(); ++e) CHECK(coarse.events()[e].time == fine.events()[e].time);
}

TEST_CASE("poisson counts, constant intensity") {
  const auto spec = MartingaleMeasureSpec::poisson(0, 2.0, FiniteMarks{{1.0}});
  const auto counts = event_counts(spec, 100000, 11);
  const auto e = estimate_mean(counts);
  CHECK(std::abs(e.mean - 2.0) <= 3.0 * std::sqrt(2.0) / std::sqrt(1e5));
}

TEST_CASE("poisson counts, thinned linear intensity") {
  const MartingaleMeasureSpec spec(0, [](double t) { return 2.0 * t; }, 2.0, FiniteMarks{{1.0}});
  const auto e = estimate_mean(event_counts(spec, 100000, 12));
  CHECK(std::abs(e.mean - 1.0) <= 3.0 / std::sqrt(1e5));
}

TEST_CASE("finite marks follow their weights") {
  const auto spec = MartingaleMeasureSpec::poisson(0, 50.0, FiniteMarks{{1.0, 3.0}});
  std::size_t ones = 0, total = 0;
  for (std::size_t r = 0; r < 2000; ++r) {
    for (const auto& ev : sample_noise(spec, kUnitGrid, {13, r}).events()) {
      ones += ev.label == 1;
      ++total;
    }
  }
  const auto p = estimate_proportion(ones, total);
  CHECK(p.ci.contains(0.75));
}

TEST_CASE("zero integrand") {
  const auto spec = MartingaleMeasureSpec::poisson(1, 2.0, FiniteMarks{{1.0}});
  const auto noise = sample_noise(spec, kUnitGrid, {1, 1});
  const auto path = integrate([](double, const Mark&) { return Vector{0.0}; }, 1, spec, noise);
  for (std::size_t i = 0; i < path.segment_count(); ++i) CHECK(path.segment_value(i)[0] == 0.0);
}

TEST_CASE("wiener integral equals W(T), isometry") {
  const auto spec = MartingaleMeasureSpec::wiener(1);
  const std::size_t reps = 100000;
  std::vector<double> terminal(reps), squares(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    const auto noise = sample_noise(spec, kUnitGrid, {21, r});
    const auto path = integrate([](double, const Mark&) { return Vector{1.0}; }, 1, spec, noise);
    terminal[r] = path.value_at(1.0)[0];
    CHECK(terminal[r] == doctest::Approx(noise.wiener_terminal(0)).epsilon(1e-12));
    squares[r] = terminal[r] * terminal[r];
  }
  CHECK(within_sigmas(estimate_mean(terminal), 0.0) <= 3.0);
  CHECK(within_sigmas(estimate_mean(squares), 1.0) <= 3.0);
}

TEST_CASE("compensated poisson moments") {
  const auto spec = MartingaleMeasureSpec::poisson(0, 1.0, FiniteMarks{{1.0}});
  const std::size_t reps = 100000;
  std::vector<double> terminal(reps), squares(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    const auto noise = sample_noise(spec, kUnitGrid, {22, r});
    const auto path = integrate([](double, const Mark& m) { return Vector{m.is_jump ? 1.0 : 0.0}; }, 1, spec, noise);
    terminal[r] = path.value_at(1.0)[0];
    CHECK(terminal[r] == doctest::Approx(static_cast<double>(noise.events().size()) - 1.0));
    squares[r] = terminal[r] * terminal[r];
  }
  CHECK(within_sigmas(estimate_mean(terminal), 0.0) <= 3.0);
  CHECK(within_sigmas(estimate_mean(squares), 1.0) <= 3.0);
}

TEST_CASE("closed-form and quadrature compensators agree for finite marks") {
  const auto spec = MartingaleMeasureSpec::poisson(0, 3.0, FiniteMarks{{1.0, 1.0}});
  const auto noise = sample_noise(spec, kUnitGrid, {4, 4});
  auto g = [](double t, const Mark& m) { return Vector{m.index == 0 ? t : 2.0}; };
  const auto quad = integrate(g, 1, spec, noise);
  const auto closed = integrate(g, 1, spec, noise, [](double t) { return Vector{0.5 * t + 1.0}; });
  CHECK(quad.value_at(1.0)[0] == doctest::Approx(closed.value_at(1.0)[0]).epsilon(1e-12));
  // int_0^1 3 (t/2 + 1) dt = 3.75
  const auto comp = compensator_increment(spec, [](double t) { return Vector{0.5 * t + 1.0}; }, 0.0, 1.0, 1);
  CHECK(comp[0] == doctest::Approx(3.75).epsilon(1e-14));
}

TEST_CASE("covariation: identity and orthogonality over mark rectangles") {
  const auto spec = MartingaleMeasureSpec::poisson(0, 2.0, RectangleMarks{{0.0, 0.0}, {1.0, 1.0}});
  const std::size_t reps = 100000;
  std::vector<CadlagPath> a(reps), b(reps);
  auto in_a = [](double, const Mark& m) { return Vector{m.point[0] < 0.3 ? 1.0 : 0.0}; };
  auto in_b = [](double, const Mark& m) { return Vector{m.point[0] >= 0.3 ? 1.0 : 0.0}; };
  parallel_for(reps, 1, [&](std::size_t r) {
    const auto noise = sample_noise(spec, kUnitGrid, {31, r});
    a[r] = integrate(in_a, 1, spec, noise, [](double) { return Vector{0.3}; });
    b[r] = integrate(in_b, 1, spec, noise, [](double) { return Vector{0.7}; });
  });
  const auto aa = empirical_covariation(a, a);
  CHECK(aa.ci(4.0).contains(2.0 * 0.3));
  const auto ab = empirical_covariation(a, b);
  CHECK(ab.ci(4.0).contains(0.0));
  // zero mean for each set
  std::vector<double> ta(reps);
  for (std::size_t r = 0; r < reps; ++r) ta[r] = a[r].value_at(1.0)[0];
  CHECK(estimate_mean(ta).ci(4.0).contains(0.0));
}

TEST_CASE("covariation errors and zero intensity") {
  std::vector<CadlagPath> one{CadlagPath::constant(0.0, 1.0, 0.0)};
  std::vector<CadlagPath> two(2, CadlagPath::constant(0.0, 1.0, 0.0));
  CHECK_THROWS_AS(empirical_covariation(one, two), ArgumentError);
  CHECK_THROWS_AS(empirical_covariation(std::span<const CadlagPath>{}, std::span<const CadlagPath>{}), ArgumentError);

  const MartingaleMeasureSpec spec(0, [](double) { return 0.0; }, 0.0, FiniteMarks{{1.0}});
  std::vector<CadlagPath> paths;
  for (std::size_t r = 0; r < 10; ++r)
    paths.push_back(integrate([](double, const Mark&) { return Vector{1.0}; }, 1, spec, sample_noise(spec, kUnitGrid, {1, r})));
  CHECK(empirical_covariation(paths, paths).mean == 0.0);
}

TEST_CASE("debug dumps") {
  const auto spec = MartingaleMeasureSpec::wiener(2);
  const auto noise = sample_noise(spec, std::vector<double>{0.0, 1.0}, {1, 0});
  std::ostringstream inc, ev;
  write_increments_csv(inc, noise);
  write_events_csv(ev, noise);
  CHECK(inc.str().rfind("cell,t_start,t_end,dW_1,dW_2\n", 0) == 0);
  CHECK(ev.str() == "time,label\n");
}
