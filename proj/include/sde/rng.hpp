#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace sde {

// Identifies one independent random stream: the experiment seed plus a
// stream index (usually the replication number).
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

// Sub-streams carved out of one StreamKey so that, e.g., the jump events of a
// replication do not depend on how finely its Wiener increments are gridded.
enum class Substream : std::uint64_t {
  wiener = 1,
  jumps = 2,
  quadrature = 3,
  ensemble = 4,
  sampler = 5,
};

// Keyed random stream. The engine state is a pure function of
// (seed, stream, substream), so results never depend on which thread or in
// which order replications are evaluated.
class RngStream {
 public:
  RngStream(StreamKey key, Substream sub) : RngStream(key.seed, key.stream, static_cast<std::uint64_t>(sub)) {}

  RngStream(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream) {
    std::seed_seq seq{lo(seed), hi(seed), lo(stream), hi(stream), lo(substream), hi(substream), 0x5d3eu};
    engine_.seed(seq);
  }

  // Uniform on the open interval (0, 1).
  double uniform() {
    double u;
    do {
      u = std::generate_canonical<double, 53>(engine_);
    } while (u <= 0.0);
    return u;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double normal() { return normal_(engine_); }
  double normal(double mean, double sd) { return mean + sd * normal_(engine_); }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

  std::mt19937_64& engine() { return engine_; }

 private:
  static std::uint32_t lo(std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); }
  static std::uint32_t hi(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }

  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace sde
