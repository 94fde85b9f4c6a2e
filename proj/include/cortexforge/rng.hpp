#pragma once

#include <cstdint>
#include <random>

namespace cortexforge {

/// Pipeline stages that draw random numbers. The stage index salts the seed so
/// every stage has an independent substream.
enum class Stage : std::uint64_t {
  Transform = 1,
  Intensities = 2,
  Bias = 3,
  Acquisition = 4,
  Noise = 5,
};

std::uint64_t splitmix64(std::uint64_t x);

/// mt19937_64 with hand-written distributions. The standard library
/// distributions are implementation-defined, so they are avoided to keep
/// samples identical across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng substream(std::uint64_t seed, Stage stage);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer on [0, n).
  std::uint64_t uniform_index(std::uint64_t n);
  /// Standard normal via Box-Muller.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace cortexforge
