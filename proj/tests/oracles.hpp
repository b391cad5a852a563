#pragma once

// Reference implementations used only by the tests.  Each one takes a
// different route from the library code it checks: pair counting instead of
// ranks, integer binomials instead of log-gamma, direct rank counting
// instead of sorting.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

namespace senf::oracle {

// Doubled U statistic of x by pair counting: 2*#(x>y) + #(x==y).
inline std::int64_t doubled_u(const std::vector<double>& x, const std::vector<double>& y) {
  std::int64_t u = 0;
  for (double a : x)
    for (double b : y) u += a > b ? 2 : (a == b ? 1 : 0);
  return u;
}

struct PermutationCount {
  std::uint64_t extreme = 0;
  std::uint64_t total = 0;
  double p() const { return static_cast<double>(extreme) / static_cast<double>(total); }
};

// Enumerates every assignment of the pooled values to a group of size |x|.
inline PermutationCount mwu_permutation(const std::vector<double>& x,
                                        const std::vector<double>& y) {
  std::vector<double> all(x);
  all.insert(all.end(), y.begin(), y.end());
  const int n = static_cast<int>(all.size());
  const int m = static_cast<int>(x.size());
  const std::int64_t mn = static_cast<std::int64_t>(x.size() * y.size());
  const std::int64_t observed = std::llabs(doubled_u(x, y) - mn);
  PermutationCount out;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (std::popcount(mask) != m) continue;
    std::vector<double> gx, gy;
    for (int i = 0; i < n; ++i) (mask >> i & 1u ? gx : gy).push_back(all[i]);
    ++out.total;
    if (std::llabs(doubled_u(gx, gy) - mn) >= observed) ++out.extreme;
  }
  return out;
}

inline std::uint64_t choose(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;  // exact at each step
  return static_cast<std::uint64_t>(r);
}

// Two-sided Fisher p by exact integer hypergeometric weights.
inline double fisher_enumeration(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) {
  const auto r1 = static_cast<std::uint64_t>(a + b), r2 = static_cast<std::uint64_t>(c + d);
  const auto c1 = static_cast<std::uint64_t>(a + c);
  auto weight = [&](std::uint64_t k) { return choose(r1, k) * choose(r2, c1 - k); };
  const std::uint64_t observed = weight(static_cast<std::uint64_t>(a));
  std::uint64_t tail = 0, total = 0;
  for (std::uint64_t k = 0; k <= std::min(r1, c1); ++k) {
    if (c1 - k > r2) continue;
    const auto w = weight(k);
    total += w;
    if (w <= observed) tail += w;
  }
  return static_cast<double>(static_cast<long double>(tail) / static_cast<long double>(total));
}

// Rank of each fuzzer by counting how many have more / equal wins.
inline std::map<std::string, double> ranks_by_counting(const std::map<std::string, int>& wins) {
  std::map<std::string, double> out;
  for (const auto& [f, w] : wins) {
    int better = 0, equal = 0;
    for (const auto& [g, v] : wins) {
      better += v > w;
      equal += v == w;
    }
    out[f] = better + (equal + 1) / 2.0;
  }
  return out;
}

// Independent copy of the subsample stream: splitmix64 seeding of
// xoshiro256**, rejection-sampled bounded integers, partial Fisher-Yates.
class SubsampleOracle {
 public:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static std::vector<std::size_t> draw(std::uint64_t seed, int size, int draw_index,
                                       std::size_t n) {
    std::uint64_t s1 = mix(seed ^ mix(static_cast<std::uint64_t>(size)));
    std::uint64_t stream_seed = mix(s1 ^ mix(static_cast<std::uint64_t>(draw_index)));
    std::uint64_t st[4];
    for (int i = 0; i < 4; ++i) st[i] = mix(stream_seed + 0x9e3779b97f4a7c15ULL * i);
    auto next = [&] {
      const std::uint64_t result = std::rotl(st[1] * 5, 7) * 9;
      const std::uint64_t t = st[1] << 17;
      st[2] ^= st[0];
      st[3] ^= st[1];
      st[1] ^= st[2];
      st[0] ^= st[3];
      st[2] ^= t;
      st[3] = std::rotl(st[3], 45);
      return result;
    };
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < static_cast<std::size_t>(size); ++i) {
      const std::uint64_t bound = n - i;
      const std::uint64_t threshold = (~bound + 1) % bound;
      std::uint64_t r;
      do r = next();
      while (r < threshold);
      std::swap(idx[i], idx[i + r % bound]);
    }
    idx.resize(static_cast<std::size_t>(size));
    std::sort(idx.begin(), idx.end());
    return idx;
  }
};

}  // namespace senf::oracle
