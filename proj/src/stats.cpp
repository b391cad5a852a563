#include "senf/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "senf/error.hpp"

namespace senf::stats {

const char* to_string(PMethod method) {
  return method == PMethod::exact ? "exact" : "normal_approx";
}

const char* to_string(MwuMode mode) {
  switch (mode) {
    case MwuMode::exact: return "exact";
    case MwuMode::approx: return "approx";
    case MwuMode::automatic: return "auto";
  }
  return "?";
}

MwuMode parse_mwu_mode(const std::string& text) {
  if (text == "exact") return MwuMode::exact;
  if (text == "approx") return MwuMode::approx;
  if (text == "auto") return MwuMode::automatic;
  throw InvalidArgument("unknown MWU mode '" + text + "' (exact, approx, auto)");
}

namespace {

void check_sample(std::span<const double> s, const char* name) {
  if (s.empty()) throw InvalidArgument(std::string("empty sample ") + name);
  for (double v : s)
    if (!std::isfinite(v)) throw InvalidArgument(std::string("non-finite value in ") + name);
}

// Smallest positive p we report; keeps PValue strictly positive when the
// tail probability underflows.
constexpr double kMinP = std::numeric_limits<double>::min();

double clamp_p(double p) { return std::clamp(p, kMinP, 1.0); }

std::vector<double> pooled(std::span<const double> x, std::span<const double> y) {
  std::vector<double> all(x.begin(), x.end());
  all.insert(all.end(), y.begin(), y.end());
  return all;
}

}  // namespace

std::vector<double> fractional_ranks(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("fractional_ranks of an empty list");
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t start = 0;
  while (start < n) {
    std::size_t end = start + 1;
    while (end < n && values[order[end]] == values[order[start]]) ++end;
    // Positions start..end-1 hold ranks start+1..end.
    double mean = 0.5 * static_cast<double>(start + 1 + end);
    for (std::size_t i = start; i < end; ++i) ranks[order[i]] = mean;
    start = end;
  }
  return ranks;
}

A12Fraction a12_fraction(std::span<const double> x, std::span<const double> y) {
  check_sample(x, "x");
  check_sample(y, "y");
  // Merge-count over sorted copies: O((m+n) log(m+n)).
  std::vector<double> xs(x.begin(), x.end()), ys(y.begin(), y.end());
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  std::uint64_t num = 0;
  for (double v : xs) {
    auto lo = std::lower_bound(ys.begin(), ys.end(), v);
    auto hi = std::upper_bound(lo, ys.end(), v);
    auto below = static_cast<std::uint64_t>(lo - ys.begin());
    auto equal = static_cast<std::uint64_t>(hi - lo);
    num += 2 * below + equal;
  }
  return {num, 2 * static_cast<std::uint64_t>(xs.size()) * ys.size()};
}

double a12(std::span<const double> x, std::span<const double> y) {
  return a12_fraction(x, y).value();
}

MwuExactCount mwu_exact_count(std::span<const double> x, std::span<const double> y) {
  check_sample(x, "x");
  check_sample(y, "y");
  const std::size_t m = x.size();
  const std::size_t total_n = m + y.size();
  if (total_n > static_cast<std::size_t>(kMaxExactSize))
    throw InvalidArgument("exact MWU limited to " + std::to_string(kMaxExactSize) +
                          " pooled values");

  auto ranks = fractional_ranks(pooled(x, y));
  // Doubled fractional ranks are integers.
  std::vector<std::int64_t> r2(total_n);
  for (std::size_t i = 0; i < total_n; ++i)
    r2[i] = static_cast<std::int64_t>(std::llround(2.0 * ranks[i]));
  std::int64_t observed = 0;
  for (std::size_t i = 0; i < m; ++i) observed += r2[i];

  // U - mn/2 = R1 - m(N+1)/2, so compare doubled rank sums around m(N+1).
  const auto centre = static_cast<std::int64_t>(m * (total_n + 1));
  const std::int64_t observed_dev = std::llabs(observed - centre);

  const auto max_sum = static_cast<std::size_t>(std::accumulate(r2.begin(), r2.end(), std::int64_t{0}));
  // ways[j][s]: subsets of size j of the items seen so far with doubled rank sum s.
  std::vector<std::uint64_t> ways((m + 1) * (max_sum + 1), 0);
  auto at = [&](std::size_t j, std::size_t s) -> std::uint64_t& {
    return ways[j * (max_sum + 1) + s];
  };
  at(0, 0) = 1;
  for (std::size_t i = 0; i < total_n; ++i) {
    const auto w = static_cast<std::size_t>(r2[i]);
    for (std::size_t j = std::min(m, i + 1); j >= 1; --j)
      for (std::size_t s = max_sum; s >= w; --s) at(j, s) += at(j - 1, s - w);
  }

  MwuExactCount out;
  for (std::size_t s = 0; s <= max_sum; ++s) {
    const std::uint64_t c = at(m, s);
    if (c == 0) continue;
    out.total += c;
    if (std::llabs(static_cast<std::int64_t>(s) - centre) >= observed_dev) out.extreme += c;
  }
  return out;
}

namespace {

PValue mwu_normal(std::span<const double> x, std::span<const double> y) {
  const double m = static_cast<double>(x.size());
  const double n = static_cast<double>(y.size());
  const double total = m + n;
  auto all = pooled(x, y);
  auto ranks = fractional_ranks(all);
  double r1 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) r1 += ranks[i];

  std::sort(all.begin(), all.end());
  double tie_sum = 0.0;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i + 1;
    while (j < all.size() && all[j] == all[i]) ++j;
    const double t = static_cast<double>(j - i);
    tie_sum += t * t * t - t;
    i = j;
  }

  const double u = m * n + m * (m + 1.0) / 2.0 - r1;
  const double mean = m * n / 2.0;
  const double var = (m * n / 12.0) * ((total + 1.0) - tie_sum / (total * (total - 1.0)));
  if (!(var > 0.0)) return {1.0, PMethod::normal_approx};
  const double dev = std::fabs(u - mean) - 0.5;
  if (dev <= 0.0) return {1.0, PMethod::normal_approx};
  const double z = dev / std::sqrt(var);
  return {clamp_p(std::erfc(z / std::sqrt(2.0))), PMethod::normal_approx};
}

}  // namespace

PValue mwu_p(std::span<const double> x, std::span<const double> y, MwuMode mode,
             int exact_size_limit) {
  check_sample(x, "x");
  check_sample(y, "y");
  if (exact_size_limit < 0 || exact_size_limit > kMaxExactSize)
    throw InvalidArgument("exact_size_limit must be in [0, " +
                          std::to_string(kMaxExactSize) + "]");
  const auto total = x.size() + y.size();
  bool exact = mode == MwuMode::exact ||
               (mode == MwuMode::automatic &&
                total <= static_cast<std::size_t>(exact_size_limit));
  if (!exact) return mwu_normal(x, y);
  auto count = mwu_exact_count(x, y);
  return {clamp_p(static_cast<double>(count.extreme) / static_cast<double>(count.total)),
          PMethod::exact};
}

// ---------------------------------------------------------------------------
// 2x2 tables

void check_table(const Table2x2& t) {
  if (t.a < 0 || t.b < 0 || t.c < 0 || t.d < 0)
    throw InvalidArgument("contingency table cells must be non-negative");
  if (t.a + t.b < 1 || t.c + t.d < 1)
    throw InvalidArgument("each contingency table row needs at least one trial");
}

namespace {

double log_choose(std::int64_t n, std::int64_t k) {
  return std::lgamma(static_cast<double>(n + 1)) - std::lgamma(static_cast<double>(k + 1)) -
         std::lgamma(static_cast<double>(n - k + 1));
}

}  // namespace

PValue fisher_exact_p(const Table2x2& t) {
  check_table(t);
  const std::int64_t row1 = t.a + t.b;
  const std::int64_t row2 = t.c + t.d;
  const std::int64_t col1 = t.a + t.c;
  const std::int64_t lo = std::max<std::int64_t>(0, col1 - row2);
  const std::int64_t hi = std::min(row1, col1);

  // Hypergeometric log-probability up to the shared -log C(N, col1) term.
  auto log_weight = [&](std::int64_t k) {
    return log_choose(row1, k) + log_choose(row2, col1 - k);
  };
  const double observed = log_weight(t.a);
  const double cutoff = observed + std::log1p(1e-12);

  std::vector<double> lw;
  lw.reserve(static_cast<std::size_t>(hi - lo + 1));
  double peak = -std::numeric_limits<double>::infinity();
  for (std::int64_t k = lo; k <= hi; ++k) {
    lw.push_back(log_weight(k));
    peak = std::max(peak, lw.back());
  }
  double all = 0.0, tail = 0.0;
  for (double w : lw) {
    const double e = std::exp(w - peak);
    all += e;
    if (w <= cutoff) tail += e;
  }
  return {clamp_p(tail / all), PMethod::exact};
}

double odds_ratio(const Table2x2& t) {
  check_table(t);
  double a = static_cast<double>(t.a), b = static_cast<double>(t.b);
  double c = static_cast<double>(t.c), d = static_cast<double>(t.d);
  if (t.a == 0 || t.b == 0 || t.c == 0 || t.d == 0) {
    a += 0.5;
    b += 0.5;
    c += 0.5;
    d += 0.5;
  }
  return (a * d) / (b * c);
}

int odds_ratio_sign(const Table2x2& t) {
  check_table(t);
  __int128 lhs, rhs;
  if (t.a == 0 || t.b == 0 || t.c == 0 || t.d == 0) {
    lhs = static_cast<__int128>(2 * t.a + 1) * (2 * t.d + 1);
    rhs = static_cast<__int128>(2 * t.b + 1) * (2 * t.c + 1);
  } else {
    lhs = static_cast<__int128>(t.a) * t.d;
    rhs = static_cast<__int128>(t.b) * t.c;
  }
  return (lhs > rhs) - (lhs < rhs);
}

}  // namespace senf::stats
