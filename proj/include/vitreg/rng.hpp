#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace vitreg {

// Independent RNG streams derived from one master seed. Each module draws from
// its own stream so that running a partial pipeline reproduces the same
// numbers as the full one.
enum class SeedStream : std::uint64_t {
  kSynth = 1,
  kExpand = 2,
  kAugment = 3,
  kInit = 4,
  kShuffle = 5,
  kCutMix = 6,
};

// splitmix64 finalizer
std::uint64_t mix_seed(std::uint64_t x);

// derive_seed(master, stream, index) = mix(mix(master ^ mix(stream)) + index)
std::uint64_t derive_seed(std::uint64_t master, SeedStream stream, std::uint64_t index = 0);

// mt19937_64 (bit-exact output mandated by the standard) with distribution
// code kept local so draws are identical across standard library vendors.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  std::int64_t integer(std::int64_t lo, std::int64_t hi_inclusive);
  double normal();
  // Normal(0, stddev) truncated to [-2·stddev, 2·stddev].
  double truncated_normal(double stddev);

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace vitreg
