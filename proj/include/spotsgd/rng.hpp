#pragma once

#include <cstdint>
#include <random>

namespace spotsgd {

std::uint64_t splitmix64(std::uint64_t x);

// Thin wrapper over mt19937_64 with platform-independent conversions to
// doubles (std:: distributions are implementation-defined).
//
// Substreams: trial i of a run seeded with s uses
//   mt19937_64(splitmix64(s ^ splitmix64(i + 0x9E3779B97F4A7C15)))
// so trials can run in any order or thread and still see the same draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng substream(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_open_closed() { return 1.0 - uniform(); }

  /// Uniform on (0, 1).
  double uniform_open() {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }

  double exponential(double rate);
  bool bernoulli(double p) { return uniform() < p; }
  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace spotsgd
