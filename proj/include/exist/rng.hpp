#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace exist {

// Deterministic random source. The std distributions are implementation
// defined, so sampling is done here on top of the raw mt19937_64 stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n);

  /// Uniform real in [0, 1).
  double uniform_real() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_real(); }

  template <typename Container>
  void shuffle(Container& c) {
    for (std::size_t i = c.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_index(i));
      std::swap(c[i - 1], c[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// Seed for a stream scoped to one key (e.g. an example id) under a run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view key);

}  // namespace exist
