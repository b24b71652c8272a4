#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace capnet {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

// Deterministic RNG. All distributions are derived from raw mt19937_64 words
// here rather than through std distributions, so streams are bit-identical
// across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform index in [0, n), n > 0. Multiply-shift keeps this exact and fast.
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      using std::swap;
      swap(v[i - 1], v[index(i)]);
    }
  }

  // Independent child stream. Distinct tags give uncorrelated streams from
  // one top-level seed.
  Rng fork(std::uint64_t tag) const {
    return Rng(detail::splitmix64(base_seed_mix() ^ detail::splitmix64(tag)));
  }
  Rng fork(std::uint64_t tag_a, std::uint64_t tag_b) const {
    return fork(detail::splitmix64(tag_a) ^ (tag_b * 0x9e3779b97f4a7c15ULL + 1));
  }

 private:
  std::uint64_t base_seed_mix() const {
    // Engines copy cheaply; peel one word off a copy so fork() is const.
    std::mt19937_64 copy = engine_;
    return copy();
  }

  std::mt19937_64 engine_;
};

}  // namespace capnet
