#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace chartfact {

// Seeded stream with a portable bounded draw. std::mt19937_64's output is
// fixed by the standard; the distributions in <random> are not, so index()
// does its own rejection sampling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, n); n must be > 0.
  std::uint64_t index(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (true) {
      const std::uint64_t x = engine_();
      if (x >= threshold) return x % n;
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Stream seed for one chart: FNV-1a over (seed, key) with a splitmix64
// finalizer.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key) noexcept;

}  // namespace chartfact
