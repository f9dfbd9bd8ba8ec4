#include "doctest.h"

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sde/errors.hpp"
#include "sde/gronwall_lab.hpp"

using namespace sde;

TEST_CASE("c_p values") {
  CHECK(c_p(0.5) == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-14));
  CHECK(c_p(0.5) == doctest::Approx(2.828427).epsilon(1e-6));
  CHECK(c_p(0.9) == doctest::Approx(10.9946).epsilon(1e-5));
  CHECK(c_p(1e-6) > 1.0);
  CHECK(c_p(1e-6) < 1.0001);
  for (double bad : {0.0, 1.0, 1.5, -0.1, std::nan("")}) CHECK_THROWS_AS(c_p(bad), DomainError);
}

TEST_CASE("c_p is the minimum of (1-p)^-1 l^(1-p) + l^-p at l = p") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  for (int i = 0; i < 200; ++i) {
    const double p = u(rng);
    auto obj = [p](double l) { return std::pow(l, 1.0 - p) / (1.0 - p) + std::pow(l, -p); };
    CHECK(c_p(p) > 1.0);
    CHECK(obj(p) == doctest::Approx(c_p(p)).epsilon(1e-12));
    CHECK(obj(p - 1e-3) >= c_p(p) - 1e-12);
    CHECK(obj(p + 1e-3) >= c_p(p) - 1e-12);
  }
}

TEST_CASE("gronwall bounds") {
  CHECK(gronwall_bound(GronwallVariant::c, 0.5, 1.0, 2.0) == doctest::Approx(8.0 * std::exp(8.0)).epsilon(1e-12));
  CHECK(gronwall_bound(GronwallVariant::c, 0.5, 1.0, 2.0) == doctest::Approx(23847.66).epsilon(1e-6));
  CHECK(gronwall_bound(GronwallVariant::b, 0.5, 0.0, 1.0) == doctest::Approx(7.65685).epsilon(1e-5));
  for (double p : {0.1, 0.5, 0.9}) CHECK(gronwall_bound(GronwallVariant::a, p, 3.0, 0.0) == 0.0);
  const double p = 0.3, cp = oracle::cp(p);
  CHECK(gronwall_bound(GronwallVariant::a, p, 0.7, 1.3) ==
        doctest::Approx(cp / p * 1.3 * std::exp(std::pow(cp, 1.0 / p) * 0.7)));
  CHECK(parse_variant("b") == GronwallVariant::b);
  CHECK(to_string(GronwallVariant::a) == "a");
  CHECK_THROWS_AS(parse_variant("d"), ArgumentError);
  CHECK_THROWS_AS(gronwall_bound(GronwallVariant::a, 1.0, 0.0, 1.0), DomainError);
}

TEST_CASE("stieltjes integral of the running sup") {
  const auto x = CadlagPath::scalar({0.0, 1.0, 2.0}, {1.0, 3.0, 2.0}, 3.0);
  CHECK(stieltjes_running_sup(x, [](double t) { return t; }, 2.5) == doctest::Approx(5.5));
  CHECK(stieltjes_running_sup(x, [](double t) { return t * t; }, 2.5) == doctest::Approx(16.75));
  CHECK(stieltjes_running_sup(x, [](double t) { return t; }, 0.0) == 0.0);
  CHECK(stieltjes_running_sup(x, [](double t) { return t; }, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("deterministic reduction") {
  const double h0 = 3.0, p = 0.4;
  const auto ens = deterministic_ensemble(h0, 50);
  const auto rep = verify_gronwall(ens, GronwallVariant::c, p);
  CHECK(rep.lhs.mean == doctest::Approx(std::pow(h0, p)));
  CHECK(rep.lhs.std_error == 0.0);
  CHECK(rep.rhs == doctest::Approx(c_p(p) / p * std::pow(h0, p)));
  CHECK(rep.rhs / rep.lhs.mean == doctest::Approx(c_p(p) / p));
  CHECK(rep.holds);
  for (auto v : {GronwallVariant::a, GronwallVariant::b}) CHECK(verify_gronwall(ens, v, p).holds);
}

TEST_CASE("GBM ensemble satisfies the assumption and all three bounds") {
  const auto ens = gbm_gronwall_ensemble({}, 32, 1.0, 2000, 77);
  CHECK_NOTHROW(ens.validate());
  CHECK(ens.h_predictable);
  for (auto v : {GronwallVariant::a, GronwallVariant::b, GronwallVariant::c}) {
    const auto rep = verify_gronwall(ens, v, 0.5);
    CHECK(rep.holds);
    CHECK(rep.lhs_ci.upper < rep.rhs);
    CHECK(rep.replications == 2000);
  }
  // martingale part has mean zero at T
  std::vector<double> mt;
  for (const auto& m : ens.m) mt.push_back(m.value_at(1.0)[0]);
  CHECK(estimate_mean(mt).ci(4.0).contains(0.0));
}

TEST_CASE("GBM ensemble is thread-count independent") {
  const auto a = gbm_gronwall_ensemble({}, 16, 1.0, 64, 5, 1);
  const auto b = gbm_gronwall_ensemble({}, 16, 1.0, 64, 5, 4);
  CHECK(a.x == b.x);
  CHECK(a.m == b.m);
}

TEST_CASE("verdicts are invariant under joint scaling") {
  const auto ens = gbm_gronwall_ensemble({0.1, 0.4, 1.0}, 16, 1.0, 500, 3);
  for (double k : {0.01, 7.0, 1e4}) {
    const auto scaled = ens.scaled(k);
    CHECK_NOTHROW(scaled.validate());
    for (auto v : {GronwallVariant::a, GronwallVariant::b, GronwallVariant::c}) {
      const double p = 0.6;
      const auto r0 = verify_gronwall(ens, v, p);
      const auto r1 = verify_gronwall(scaled, v, p);
      CHECK(r0.holds == r1.holds);
      CHECK(r1.lhs.mean == doctest::Approx(std::pow(k, p) * r0.lhs.mean));
      CHECK(r1.rhs == doctest::Approx(std::pow(k, p) * r0.rhs));
    }
  }
  CHECK_THROWS_AS(ens.scaled(0.0), ArgumentError);
}

TEST_CASE("counterexample ensemble") {
  const auto ens = counterexample_ensemble(0.99, 0.5, 100000, 1);
  CHECK_NOTHROW(ens.validate());
  CHECK_THROWS_AS(verify_gronwall(ens, GronwallVariant::a, 0.5), EnsembleError);
  CHECK_THROWS_AS(verify_gronwall(ens, GronwallVariant::b, 0.5), EnsembleError);
  const auto forced = verify_gronwall(ens, GronwallVariant::a, 0.5, {false});
  CHECK_FALSE(forced.holds);
  CHECK(forced.lhs.mean == doctest::Approx(counterexample_lhs_exact(0.99, 0.5, 0.5)).epsilon(0.01));
  CHECK(verify_gronwall(ens, GronwallVariant::c, 0.5).holds);
}

TEST_CASE("ensemble rejection") {
  auto ens = deterministic_ensemble(1.0, 3);
  ens.x[1] = CadlagPath::scalar({0.0, 0.5}, {1.0, 2.0}, 1.0);
  CHECK_THROWS_AS(ens.validate(), EnsembleError);  // assumption fails

  ens = deterministic_ensemble(1.0, 3);
  ens.x[0] = CadlagPath::scalar({0.0, 0.5}, {1.0, -0.5}, 1.0);
  CHECK_THROWS_AS(ens.validate(), EnsembleError);  // negative X

  ens = deterministic_ensemble(1.0, 3);
  ens.h[2] = CadlagPath::scalar({0.0, 0.5}, {1.0, 0.5}, 1.0);
  CHECK_THROWS_AS(ens.validate(), EnsembleError);  // H decreasing

  ens = deterministic_ensemble(1.0, 3);
  ens.m[0] = CadlagPath::constant(0.0, 1.0, 0.1);
  CHECK_THROWS_AS(ens.validate(), EnsembleError);  // M(0) != 0

  ens = deterministic_ensemble(1.0, 3);
  ens.a = [](double t) { return 1.0 + t; };
  CHECK_THROWS_AS(ens.validate(), EnsembleError);

  ens = deterministic_ensemble(1.0, 3);
  ens.a = [](double t) { return -t; };
  CHECK_THROWS_AS(ens.validate(), EnsembleError);

  ens = deterministic_ensemble(1.0, 3);
  ens.m.pop_back();
  CHECK_THROWS_AS(ens.validate(), EnsembleError);

  CHECK_THROWS_AS(deterministic_ensemble(1.0, 0).validate(), EnsembleError);

  // X = 1 + t is admissible once A(t) = t carries it
  ens = deterministic_ensemble(1.0, 1, 2.0);
  ens.x[0] = CadlagPath::scalar({0.0, 0.5, 1.0, 1.5}, {1.0, 1.5, 2.0, 2.5}, 2.0);
  ens.a = [](double t) { return t; };
  CHECK_NOTHROW(ens.validate());
  CHECK_THROWS_AS(verify_gronwall(ens, GronwallVariant::c, 1.5), DomainError);
}

TEST_CASE("negative jumps of M block variant b only without a certificate") {
  auto ens = deterministic_ensemble(2.0, 2);
  ens.m[0] = CadlagPath::scalar({0.0, 0.5}, {0.0, -1.0}, 1.0);
  ens.x[0] = CadlagPath::scalar({0.0, 0.5}, {2.0, 1.0}, 1.0);
  ens.m_continuous = false;
  CHECK_NOTHROW(ens.validate());
  CHECK_THROWS_AS(verify_gronwall(ens, GronwallVariant::b, 0.5), EnsembleError);
  ens.m_continuous = true;
  CHECK_NOTHROW(verify_gronwall(ens, GronwallVariant::b, 0.5));
}

TEST_CASE("report json") {
  const auto rep = verify_gronwall(deterministic_ensemble(1.0, 4), GronwallVariant::c, 0.5);
  const auto j = rep.to_json();
  for (const char* key : {"variant", "p", "lhs", "lhs_ci", "rhs", "verdict", "replications", "seed"})
    CHECK(j.contains(key));
  CHECK(j["verdict"] == "holds");
}

TEST_CASE("lenglart with deterministic pairs") {
  const auto sups = sample_sups(constant_pair(1.0), 10, 1);
  const auto tail = lenglart_tail(sups, 2.0, 5.0);
  CHECK(tail.lhs.p == 0.0);
  CHECK(tail.rhs == doctest::Approx(0.5));
  CHECK(tail.holds);
  const auto mom = lenglart_moment(sups, 0.5);
  CHECK(mom.lhs.mean == 1.0);
  CHECK(mom.rhs == doctest::Approx(2.8284271247));
  CHECK(mom.holds);
  CHECK_THROWS_AS(lenglart_tail(sups, 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(lenglart_tail(sups, 1.0, -1.0), DomainError);
  CHECK_THROWS_AS(lenglart_moment(sups, 1.0), DomainError);
}

TEST_CASE("lenglart on path ensembles") {
  std::vector<CadlagPath> x{CadlagPath::constant(0.0, 1.0, 1.0), CadlagPath::scalar({0.0, 0.5}, {0.0, 4.0}, 1.0)};
  std::vector<CadlagPath> g{CadlagPath::constant(0.0, 1.0, 2.0), CadlagPath::constant(0.0, 1.0, 2.0)};
  const auto tail = lenglart_tail(x, g, 3.0, 1.0);
  CHECK(tail.lhs.p == 0.5);
  CHECK(tail.rhs == doctest::Approx(1.0 / 3.0 + 1.0));
  const auto mom = lenglart_moment(x, g, 0.5);
  CHECK(mom.lhs.mean == doctest::Approx(1.5));
  CHECK_THROWS_AS(lenglart_moment(x, std::span<const CadlagPath>(g).first(1), 0.5), ArgumentError);
}

TEST_CASE("brownian pair against the reflection-principle oracle") {
  const auto sups = sample_sups(brownian_square_pair(2048), 20000, 8);
  const auto tail = lenglart_tail(sups, 1.0, 2.0);
  const double exact = 1.0 - oracle::sup_abs_bm_cdf(1.0);
  CHECK(exact == doctest::Approx(0.6292).epsilon(1e-3));
  CHECK(std::abs(tail.lhs.p - exact) < 0.03);
  CHECK(tail.rhs == doctest::Approx(1.0));
  CHECK(tail.holds);
  const auto mom = lenglart_moment(sups, 0.5);
  CHECK(std::abs(mom.lhs.mean - oracle::mean_sup_abs_bm()) < 0.03);
  CHECK(mom.rhs == doctest::Approx(c_p(0.5)));
}

TEST_CASE("large d leaves the first moment term") {
  const auto sups = sample_sups(poisson_count_pair(2.0, 1.0), 5000, 4);
  for (double g : sups.g) CHECK(g == doctest::Approx(2.0));
  const auto tail = lenglart_tail(sups, 4.0, 1e9);
  CHECK(tail.rhs == doctest::Approx(0.5));
  // sup_t N(t) = N(1), a Poisson(2) count
  CHECK(estimate_mean(sups.x).ci(4.0).contains(2.0));
}

TEST_CASE("certified generators survive random (c, d, p)") {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> uc(0.2, 5.0), up(0.05, 0.95);
  const std::vector<PairGenerator> gens{brownian_square_pair(256), poisson_count_pair(3.0, 1.0),
                                        exponential_martingale_pair(1.0, 256, 1.0), constant_pair(2.0),
                                        scaled_pair(brownian_square_pair(256), 10.0)};
  for (const auto& gen : gens) {
    const auto sups = sample_sups(gen, 2000, 6);
    for (int i = 0; i < 20; ++i) {
      const double c = uc(rng), d = uc(rng), p = up(rng);
      CHECK(lenglart_tail(sups, c, d).holds);
      CHECK(lenglart_moment(sups, p).holds);
    }
  }
}

TEST_CASE("scaled pair: both sides scale by 10^p") {
  const auto base = sample_sups(brownian_square_pair(128), 3000, 2);
  const auto big = sample_sups(scaled_pair(brownian_square_pair(128), 10.0), 3000, 2);
  for (double p : {0.2, 0.5, 0.8}) {
    const auto a = lenglart_moment(base, p), b = lenglart_moment(big, p);
    CHECK(b.lhs.mean == doctest::Approx(std::pow(10.0, p) * a.lhs.mean).epsilon(1e-12));
    CHECK(b.rhs == doctest::Approx(std::pow(10.0, p) * a.rhs).epsilon(1e-12));
    CHECK(a.holds == b.holds);
  }
}

TEST_CASE("sample_sups is thread-count independent") {
  const auto a = sample_sups(poisson_count_pair(5.0, 2.0), 300, 9, 1);
  const auto b = sample_sups(poisson_count_pair(5.0, 2.0), 300, 9, 3);
  CHECK(a.x == b.x);
  CHECK(a.g == b.g);
}

TEST_CASE("counterexample closed forms") {
  CHECK(counterexample_upper(0.5, 0.5) == doctest::Approx(4.0));
  CHECK(counterexample_lower(0.5, 0.5) == doctest::Approx(4.0));
  CHECK(counterexample_lhs_exact(0.5, 0.5, 0.5) == doctest::Approx(1.0));
  CHECK(counterexample_lhs_exact(0.9, 0.5, 0.5) == doctest::Approx(3.0));
  CHECK(counterexample_lhs_exact(0.99, 0.5, 0.5) == doctest::Approx(10.0 * std::sqrt(0.99)));
  CHECK(counterexample_lhs_exact(0.99, 0.5, 0.5) == doctest::Approx(9.94987).epsilon(1e-6));
  // E[S] = 0 exactly for every (q, alpha)
  for (double q : {0.1, 0.5, 0.95}) {
    for (double a : {0.2, 0.8}) {
      CHECK(q * counterexample_upper(q, a) - (1 - q) * counterexample_lower(q, a) == doctest::Approx(0.0).scale(10.0));
      CHECK((1 - q) * std::pow(counterexample_lower(q, a), a) == doctest::Approx(1.0));
    }
  }
  CHECK_THROWS_AS(counterexample_upper(1.0, 0.5), DomainError);
  CHECK_THROWS_AS(counterexample_lhs_exact(0.5, 0.5, 0.0), DomainError);
}

TEST_CASE("counterexample q = 0.5 is a symmetric +-4 coin") {
  const auto s = counterexample_stats(0.5, 0.5, 0.5, 100000, 3);
  CHECK(s.mean_mc.ci(4.0).contains(0.0));
  CHECK(s.lhs_exact == doctest::Approx(1.0));
  CHECK(s.h_moment_exact == 1.0);
}

TEST_CASE("counterexample Monte Carlo matches closed forms") {
  for (double q : {0.3, 0.6, 0.9}) {
    for (double a : {0.3, 0.7}) {
      for (double p : {0.4, 0.8}) {
        const auto s = counterexample_stats(q, a, p, 1000000, 10);
        CHECK(std::abs(s.lhs_mc.mean - s.lhs_exact) <= 4.0 * s.lhs_mc.std_error);
        CHECK(std::abs(s.h_moment_mc.mean - 1.0) <= 4.0 * s.h_moment_mc.std_error);
        CHECK(std::abs(s.mean_mc.mean) <= 4.0 * s.mean_mc.std_error);
      }
    }
  }
}
