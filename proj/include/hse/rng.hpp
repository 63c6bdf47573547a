#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>

namespace hse {

// Seedable generator threaded explicitly through weight init, dropout masks,
// shuffling and scene synthesis. There is no global instance.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 42) : engine_(seed) {}

  double normal(double mean, double stddev) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }

  // Uniform in [0, 1).
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  // Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }

  template <typename T>
  void shuffle(std::span<T> items) {
    std::shuffle(items.begin(), items.end(), engine_);
  }

  // Derive an independent stream, e.g. one per epoch or per scene.
  Rng fork() { return Rng(engine_()); }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace hse
