#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace dpcombine {

/// Deterministic random stream used everywhere in the library.
///
/// Wraps std::mt19937_64 (bit-exact sequence by the C++ standard) and maps
/// raw output to doubles directly, so draws never depend on the standard
/// library's unspecified distribution implementations.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1], for logs.
  double uniform_open0() { return 1.0 - uniform01(); }

  /// Uniform integer in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n) {
    // 53-bit mantissa covers every index this library ever asks for.
    auto idx = static_cast<std::size_t>(uniform01() * static_cast<double>(n));
    return idx >= n ? n - 1 : idx;
  }

  std::uint64_t raw() { return engine_(); }

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[uniform_index(i)]);
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

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// Child-seed derivation: every concurrent task gets its stream from the
/// master seed and a purpose label, e.g. "rates/exp/p=20" or
/// "series/W42/train". Independent of evaluation order by construction.
inline std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view label) {
  return detail::splitmix64(master_seed ^ detail::fnv1a64(label));
}

inline RandomStream derive_stream(std::uint64_t master_seed, std::string_view label) {
  return RandomStream(derive_seed(master_seed, label));
}

}  // namespace dpcombine
