#pragma once

#include <cstdint>
#include <cstddef>
#include <vector>

namespace pscore {

// Deterministic PRNG (xoshiro256**) with fixed value mappings, so that every
// seeded run produces bit-identical streams on any platform and compiler.
// std::mt19937 would be portable too, but the std distributions are not; all
// mappings below are pinned by hand and covered by regression tests.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform double in [0, 1): top 53 bits scaled by 2^-53.
  double uniform();
  // Uniform double in (0, 1]: for logs in Box-Muller.
  double uniform_open();
  // Unbiased integer in [0, n); n must be > 0.
  std::size_t index(std::size_t n);
  // Standard normal via Box-Muller (no cached spare, one value per call).
  double normal();
  double normal(double mean, double sd);

  // In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct indices from [0, n), in draw order (partial Fisher-Yates).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

 private:
  std::uint64_t s_[4];
};

// Stable stream splitting: mixes a stage/stream tag into a base seed so each
// pipeline stage gets an independent deterministic stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace pscore
