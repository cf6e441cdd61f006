#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace locogan {

/// Seeded stream used for every random draw in the library. The engine and
/// the normal distribution's cached value are both part of the state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  /// Uniform over the closed range [lo, hi].
  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  std::uint64_t next() { return engine_(); }

  /// Independent child stream; advances this stream by one draw.
  Rng fork() { return Rng(next() ^ 0x9e3779b97f4a7c15ULL); }

  std::string state() const;
  void restore(const std::string& state);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace locogan
