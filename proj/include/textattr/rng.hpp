#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace textattr {

// All randomness flows through this wrapper. std::mt19937_64 itself is
// bit-exact across platforms, but the standard distributions are not, so the
// conversions below are spelled out by hand and must never be replaced with
// std::uniform_*_distribution or std::shuffle.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). Masked rejection keeps it unbiased.
  std::uint64_t uniform_below(std::uint64_t n) {
    if (n <= 1) return 0;
    std::uint64_t mask = ~std::uint64_t{0} >> __builtin_clzll(n - 1);
    for (;;) {
      std::uint64_t v = engine_() & mask;
      if (v < n) return v;
    }
  }

  // Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(
                    uniform_below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  // Uniform double in [lo, hi).
  double uniform_real(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
  }

  // Fisher-Yates, back to front.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_below(i));
      using std::swap;
      swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

// Derives an independent stream seed from a master seed plus counters
// (document index, model tag, method tag, ...). Stateless and order-sensitive.
inline std::uint64_t mix_seed(std::uint64_t master) {
  return detail::splitmix64(master);
}

template <typename... Rest>
std::uint64_t mix_seed(std::uint64_t master, std::uint64_t head, Rest... rest) {
  return mix_seed(detail::splitmix64(master ^ detail::splitmix64(head)),
                  rest...);
}

}  // namespace textattr
