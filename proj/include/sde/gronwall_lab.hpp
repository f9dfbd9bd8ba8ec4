#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "sde/cadlag_path.hpp"
#include "sde/models.hpp"
#include "sde/stats.hpp"

namespace sde {

// c_p = p^{-p} / (1 - p), p in (0, 1).
double c_p(double p);

enum class GronwallVariant { a, b, c };

GronwallVariant parse_variant(const std::string& tag);
std::string to_string(GronwallVariant v);

// Right-hand side of the stochastic Gronwall estimate:
//   a: (c_p / p)     E[H^p] exp(c_p^{1/p} A(T))
//   b: ((c_p+1) / p) E[H^p] exp((c_p+1)^{1/p} A(T))
//   c: (c_p / p)    (E[H])^p exp(c_p^{1/p} A(T))
// `h_stat` is E[H(T)^p] for a and b, E[H(T)] for c.
double gronwall_bound(GronwallVariant variant, double p, double a_T, double h_stat);

// Deterministic non-decreasing integrator A with A(0) = 0.
using Integrator = std::function<double(double)>;

// Simulated (X, M, H) triples on [0, T] sharing one deterministic A.
struct GronwallEnsemble {
  std::vector<CadlagPath> x;
  std::vector<CadlagPath> m;
  std::vector<CadlagPath> h;
  Integrator a;
  double horizon = 1.0;
  std::uint64_t seed = 0;
  // Construction-time certificates; predictability is not decidable from samples.
  bool h_predictable = false;
  // M discretizes a continuous martingale: its breakpoint jumps are grid
  // artefacts, not jumps of M.
  bool m_continuous = false;

  std::size_t replications() const { return x.size(); }

  // Throws EnsembleError unless every replication satisfies the structural
  // invariants and X(t) <= int_0^t X*(u-) dA(u) + M(t) + H(t) at every
  // breakpoint (tolerance 1e-9 relative to the right side).
  void validate() const;

  // (k X, k M, k H) with the same A.
  GronwallEnsemble scaled(double k) const;
};

// int_0^t X*(u-) dA(u) for piecewise-constant X; exact for any A because
// X*(u-) is constant on each (s_i, s_{i+1}].
double stieltjes_running_sup(const CadlagPath& x, const Integrator& a, double t);

// X = (Euler GBM)^2 on the n-grid with its exact discrete martingale part,
// A(t) = K t, H(t) = x0^2 + K t where K = max(0, 2mu + sigma^2 + mu^2/n).
GronwallEnsemble gbm_gronwall_ensemble(const GbmParams& params, std::size_t n, double horizon,
                                       std::size_t replications, std::uint64_t seed, std::size_t threads = 1);

// The two-point counterexample: M = 1_{t>=1} S, H = 1_{t>=1} S_-, X = M + H.
GronwallEnsemble counterexample_ensemble(double q, double alpha, std::size_t replications, std::uint64_t seed);

// M = 0, H = X = h0, A = 0.
GronwallEnsemble deterministic_ensemble(double h0, std::size_t replications, double horizon = 1.0);

struct VerifyOptions {
  // When false, the bound is applied even if the variant's hypothesis
  // (predictable H, no negative jumps of M) is not certified.
  bool enforce_preconditions = true;
};

struct VerificationReport {
  GronwallVariant variant = GronwallVariant::c;
  double p = 0.5;
  MeanEstimate lhs;  // E[(X*(T))^p]
  Interval lhs_ci;   // one-sided 99% bounds
  double h_stat = 0.0;
  double a_T = 0.0;
  double rhs = 0.0;
  bool holds = false;
  std::size_t replications = 0;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

VerificationReport verify_gronwall(const GronwallEnsemble& ensemble, GronwallVariant variant, double p,
                                   const VerifyOptions& options = {});

// ---- Lenglart domination ----

// X adapted non-negative, G predictable non-decreasing with E X(tau) <= E G(tau).
struct DominatedPair {
  CadlagPath x;
  CadlagPath g;
};

using PairGenerator = std::function<DominatedPair(std::uint64_t seed, std::size_t replication)>;

struct SupSamples {
  std::vector<double> x;  // sup_t X(t) per replication
  std::vector<double> g;  // sup_t G(t) per replication
};

SupSamples sample_sups(const PairGenerator& generator, std::size_t replications, std::uint64_t seed,
                       std::size_t threads = 1);
SupSamples sups_of(std::span<const CadlagPath> x_paths, std::span<const CadlagPath> g_paths);

struct TailReport {
  double c = 0.0, d = 0.0;
  ProportionEstimate lhs;  // P(sup X > c)
  double rhs = 0.0;        // (1/c) E[sup G ^ d] + P(sup G >= d)
  double rhs_upper = 0.0;
  bool holds = false;
};

struct MomentReport {
  double p = 0.5;
  MeanEstimate lhs;  // E[(sup X)^p]
  double lhs_upper = 0.0;
  double rhs = 0.0;  // c_p E[(sup G)^p]
  bool holds = false;
};

TailReport lenglart_tail(const SupSamples& sups, double c, double d);
TailReport lenglart_tail(std::span<const CadlagPath> x_paths, std::span<const CadlagPath> g_paths, double c, double d);
MomentReport lenglart_moment(const SupSamples& sups, double p);
MomentReport lenglart_moment(std::span<const CadlagPath> x_paths, std::span<const CadlagPath> g_paths, double p);

// Certified generators.
// X = B(t ^ 1)^2, G = t ^ 1 on a grid of `steps` cells over [0, 1].
PairGenerator brownian_square_pair(std::size_t steps);
// X = N(t) (Poisson counts), G = rate t, on [0, horizon].
PairGenerator poisson_count_pair(double rate, double horizon);
// X = exp(sigma B_t - sigma^2 t / 2), G = 1.
PairGenerator exponential_martingale_pair(double sigma, std::size_t steps, double horizon);
// X = G = value.
PairGenerator constant_pair(double value);
// (factor X, factor G).
PairGenerator scaled_pair(PairGenerator base, double factor);

// ---- Counterexample ----

struct CounterexampleStats {
  double q = 0.0, alpha = 0.0, p = 0.0;
  MeanEstimate lhs_mc;      // E[(S_+)^p]
  double lhs_exact = 0.0;   // (1-q)^{p(1-1/alpha)} q^{1-p}
  MeanEstimate h_moment_mc; // E[(S_-)^alpha]
  double h_moment_exact = 1.0;
  MeanEstimate mean_mc;     // E[S], exactly 0
};

// Values taken by S_{q,alpha}: (1-q)^{1-1/alpha}/q w.p. q, -(1-q)^{-1/alpha} w.p. 1-q.
double counterexample_upper(double q, double alpha);
double counterexample_lower(double q, double alpha);
double counterexample_lhs_exact(double q, double alpha, double p);

CounterexampleStats counterexample_stats(double q, double alpha, double p, std::size_t replications,
                                         std::uint64_t seed);

}  // namespace sde
