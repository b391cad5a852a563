#pragma once

#include <cstdint>
#include <string_view>

// Portable, explicitly specified random streams.  Library distributions in
// <random> are implementation defined, so derived streams and the few
// transforms we need are spelled out here to keep output byte-identical
// across standard libraries.

namespace senf::rng {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t salt) {
  return splitmix64(seed ^ splitmix64(salt));
}

// FNV-1a, used to fold labels into stream seeds.
constexpr std::uint64_t hash_label(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// xoshiro256** seeded through splitmix64.
class Stream {
 public:
  explicit Stream(std::uint64_t seed);

  std::uint64_t next();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer on [0, bound), bound > 0, by rejection.
  std::uint64_t below(std::uint64_t bound);
  // Standard normal via Box-Muller (one value per call).
  double normal();

 private:
  std::uint64_t s_[4];
};

}  // namespace senf::rng
