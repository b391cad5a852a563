#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

// Nonparametric two-sample statistics: fractional ranks, the Vargha-Delaney
// A12 effect size, the Mann-Whitney U test, Fisher's exact test on 2x2
// tables and the odds ratio.  All tests are two-sided.

namespace senf::stats {

enum class PMethod { exact, normal_approx };

const char* to_string(PMethod method);

struct PValue {
  double value = 1.0;
  PMethod method = PMethod::exact;
};

enum class MwuMode { exact, approx, automatic };

const char* to_string(MwuMode mode);
MwuMode parse_mwu_mode(const std::string& text);

// Default combined sample size up to which `automatic` picks the exact test.
inline constexpr int kDefaultExactSizeLimit = 20;
// Largest combined sample size whose assignment count fits in 64 bits.
inline constexpr int kMaxExactSize = 66;

// Ranks 1..n, ties get the mean of the positions they occupy.
std::vector<double> fractional_ranks(std::span<const double> values);

// A12 as an exact fraction: numerator = 2*#(x>y) + #(x==y) and
// denominator = 2*|x|*|y|.
struct A12Fraction {
  std::uint64_t numerator = 0;
  std::uint64_t denominator = 1;

  double value() const {
    return static_cast<double>(numerator) / static_cast<double>(denominator);
  }
};

A12Fraction a12_fraction(std::span<const double> x, std::span<const double> y);
double a12(std::span<const double> x, std::span<const double> y);

// Exact null distribution count: `extreme` of the `total` = C(m+n, m)
// assignments of the pooled multiset to x have U at least as far from mn/2
// as the observed one.
struct MwuExactCount {
  std::uint64_t extreme = 0;
  std::uint64_t total = 0;
};

MwuExactCount mwu_exact_count(std::span<const double> x,
                              std::span<const double> y);

PValue mwu_p(std::span<const double> x, std::span<const double> y,
             MwuMode mode = MwuMode::automatic,
             int exact_size_limit = kDefaultExactSizeLimit);

// Row 1 = fuzzer X (found, not found), row 2 = fuzzer Y (found, not found).
struct Table2x2 {
  std::int64_t a = 0;
  std::int64_t b = 0;
  std::int64_t c = 0;
  std::int64_t d = 0;
};

void check_table(const Table2x2& t);

PValue fisher_exact_p(const Table2x2& t);

// (a*d)/(b*c), with 0.5 added to every cell when any cell is zero.
double odds_ratio(const Table2x2& t);

// Sign of log(odds ratio) computed without rounding: +1, 0 or -1.
int odds_ratio_sign(const Table2x2& t);

}  // namespace senf::stats
