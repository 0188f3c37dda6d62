#pragma once

#include <cstdint>
#include <cmath>
#include <numbers>
#include <string_view>
#include <vector>

namespace proxkit {

// Counter-based deterministic random streams. Every consumer derives its own
// stream key from (seed, tag) and addresses draws by counter, so runs are
// reproducible bit-for-bit and resumable without carrying generator state.

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct RngStream {
  std::uint64_t key = 0;

  RngStream() = default;
  RngStream(std::uint64_t seed, std::string_view tag)
      : key(splitmix64(seed ^ fnv1a64(tag))) {}
  RngStream(std::uint64_t seed, std::string_view tag, std::uint64_t sub)
      : key(splitmix64(splitmix64(seed ^ fnv1a64(tag)) ^ sub)) {}

  std::uint64_t bits(std::uint64_t counter) const { return splitmix64(key ^ splitmix64(counter)); }

  // uniform in [0, 1)
  double uniform(std::uint64_t counter) const {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  // uniform integer in [0, n)
  std::uint64_t index(std::uint64_t counter, std::uint64_t n) const {
    return static_cast<std::uint64_t>(uniform(counter) * static_cast<double>(n)) % n;
  }

  // standard normal via Box-Muller; each draw consumes two counters
  double normal(std::uint64_t counter) const {
    double u1 = uniform(2 * counter);
    double u2 = uniform(2 * counter + 1);
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::vector<std::size_t> permutation(std::size_t n) const {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    for (std::size_t i = n; i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(index(i, i));
      std::swap(p[i - 1], p[j]);
    }
    return p;
  }
};

}  // namespace proxkit
