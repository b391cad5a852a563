#include "senf/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "io.hpp"
#include "parallel.hpp"
#include "senf/error.hpp"
#include "senf/rng.hpp"

namespace senf {

std::string to_csv_string(const SweepSeries& series) {
  const bool envelope = std::any_of(series.points.begin(), series.points.end(),
                                    [](const SweepPoint& p) { return p.min_ranks.has_value(); });
  std::string out = envelope ? "parameter,fuzzer,mean_rank,min_rank,max_rank\n"
                             : "parameter,fuzzer,mean_rank\n";
  for (const auto& p : series.points)
    for (const auto& [f, r] : p.ranks) {
      out += io::format_double(p.parameter) + ',' + f + ',' + io::format_double(r);
      if (envelope) {
        out += ',' + (p.min_ranks ? io::format_double(p.min_ranks->at(f)) : std::string());
        out += ',' + (p.max_ranks ? io::format_double(p.max_ranks->at(f)) : std::string());
      }
      out += '\n';
    }
  return out;
}

ExperimentMatrix truncate(const ExperimentMatrix& matrix, double t_seconds) {
  if (!std::isfinite(t_seconds) || t_seconds <= 0.0)
    throw InvalidArgument("truncation time must be positive");
  std::vector<TrialRecord> out;
  out.reserve(matrix.size());
  for (const auto& r : matrix.records()) {
    if (t_seconds > r.cap_seconds)
      throw InvalidArgument("truncation time " + io::format_double(t_seconds) +
                            "s exceeds the cap of " + r.fuzzer + "/" + r.target + "/" +
                            r.seed_set);
    TrialRecord c = r;
    c.cap_seconds = t_seconds;
    if (c.found_at && *c.found_at > t_seconds) c.found_at.reset();
    out.push_back(std::move(c));
  }
  return ExperimentMatrix(std::move(out));
}

PrefixResult prefix_trials(const ExperimentMatrix& matrix, int k) {
  if (k < 1) throw InvalidArgument("trial prefix length must be >= 1");
  std::vector<TrialRecord> kept;
  std::map<GroupKey, int> counts;
  for (const auto& r : matrix.records()) {
    // Records arrive in key order, so each group is walked by trial index.
    auto& n = counts[{r.fuzzer, r.target, r.seed_set}];
    if (n < k) {
      kept.push_back(r);
      ++n;
    }
  }
  PrefixResult out{ExperimentMatrix(std::move(kept)), {}};
  for (const auto& [key, n] : counts)
    if (n < k) out.short_groups.push_back(key);
  return out;
}

namespace {

template <class T>
std::vector<T> sorted_unique(std::span<const T> values, const char* what) {
  if (values.empty()) throw InvalidArgument(std::string("empty ") + what + " list");
  std::vector<T> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

SweepPoint point_from(double parameter, const RankingReport& report) {
  return {parameter, report.average_rank, std::nullopt, std::nullopt,
          report.directed_comparisons()};
}

}  // namespace

SweepSeries runtime_sweep(const ExperimentMatrix& matrix, const std::string& seed_set,
                          std::span<const double> times, const StudyConfig& cfg) {
  auto ts = sorted_unique(times, "run-time");
  SweepSeries series{"max_runtime_seconds", std::vector<SweepPoint>(ts.size())};
  detail::parallel_for(ts.size(), [&](std::size_t i) {
    series.points[i] = point_from(ts[i], rank_overall(truncate(matrix, ts[i]), seed_set, cfg));
  });
  return series;
}

SweepSeries trial_sweep(const ExperimentMatrix& matrix, const std::string& seed_set,
                        std::span<const int> ks, const StudyConfig& cfg) {
  auto sorted = sorted_unique(ks, "trial count");
  SweepSeries series{"trials", std::vector<SweepPoint>(sorted.size())};
  detail::parallel_for(sorted.size(), [&](std::size_t i) {
    auto prefix = prefix_trials(matrix, sorted[i]);
    series.points[i] = point_from(static_cast<double>(sorted[i]),
                                  rank_overall(prefix.matrix, seed_set, cfg));
  });
  return series;
}

std::uint64_t subsample_stream_seed(std::uint64_t rng_seed, int size, int draw) {
  return rng::derive(rng::derive(rng_seed, static_cast<std::uint64_t>(size)),
                     static_cast<std::uint64_t>(draw));
}

std::vector<std::size_t> subsample_draw(std::uint64_t rng_seed, int size, int draw,
                                        std::size_t n_targets) {
  if (size < 1 || static_cast<std::size_t>(size) > n_targets)
    throw InvalidArgument("subsample size must be in [1, target count]");
  rng::Stream stream(subsample_stream_seed(rng_seed, size, draw));
  std::vector<std::size_t> idx(n_targets);
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < static_cast<std::size_t>(size); ++i) {
    const auto j = i + static_cast<std::size_t>(stream.below(n_targets - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(static_cast<std::size_t>(size));
  std::sort(idx.begin(), idx.end());
  return idx;
}

SweepSeries target_subsample_sweep(const ExperimentMatrix& matrix,
                                   const std::string& seed_set, std::span<const int> sizes,
                                   int n_samples, const StudyConfig& cfg) {
  if (n_samples < 1) throw InvalidArgument("n_samples must be >= 1");
  auto sorted = sorted_unique(sizes, "subsample size");
  const auto set = TournamentSet::build(matrix, seed_set, cfg);
  const auto per_target = set.target_ranks(cfg);
  const std::size_t n_targets = per_target.size();
  for (int s : sorted)
    if (s < 1 || static_cast<std::size_t>(s) > n_targets)
      throw InvalidArgument("subsample size " + std::to_string(s) + " outside [1, " +
                            std::to_string(n_targets) + "]");

  SweepSeries series{"targets", {}};
  for (int size : sorted) {
    std::vector<std::map<std::string, double>> draws(static_cast<std::size_t>(n_samples));
    detail::parallel_for(draws.size(), [&](std::size_t d) {
      auto idx = subsample_draw(cfg.rng_seed, size, static_cast<int>(d), n_targets);
      std::vector<const std::map<std::string, double>*> chosen;
      chosen.reserve(idx.size());
      for (auto i : idx) chosen.push_back(&per_target[i]);
      draws[d] = average_ranks(chosen);
    });

    SweepPoint point;
    point.parameter = size;
    std::map<std::string, double> lo, hi, first, shifted;
    std::map<std::string, int> seen;
    for (const auto& draw : draws)
      for (const auto& [f, r] : draw) {
        if (!seen[f]++) {
          lo[f] = hi[f] = first[f] = r;
          shifted[f] = 0.0;
        } else {
          lo[f] = std::min(lo[f], r);
          hi[f] = std::max(hi[f], r);
        }
        // Accumulate around the first draw so identical draws give an exact mean.
        shifted[f] += r - first[f];
      }
    for (const auto& [f, n] : seen) point.ranks[f] = first[f] + shifted[f] / n;
    point.min_ranks = std::move(lo);
    point.max_ranks = std::move(hi);
    series.points.push_back(std::move(point));
  }
  return series;
}

PThresholdSweep p_threshold_sweep(const ExperimentMatrix& matrix, const std::string& seed_set,
                                  std::span<const double> alphas, const StudyConfig& cfg) {
  auto sorted = sorted_unique(alphas, "alpha");
  PThresholdSweep out{{"alpha", {}}, {"alpha", {}}};
  for (auto [kind, series] : {std::pair{TestKind::interval, &out.interval},
                              std::pair{TestKind::dichotomous, &out.dichotomous}}) {
    StudyConfig c = cfg;
    c.test_kind = kind;
    const auto set = TournamentSet::build(matrix, seed_set, c);
    for (double a : sorted) {
      c.alpha = a;
      series->points.push_back(point_from(a, set.rank(c)));
    }
  }
  return out;
}

std::vector<EffectThreshold> all_effect_thresholds() {
  return {EffectThreshold::none, EffectThreshold::small, EffectThreshold::medium,
          EffectThreshold::large};
}

SweepSeries effect_threshold_sweep(const ExperimentMatrix& matrix,
                                   const std::string& seed_set,
                                   std::span<const EffectThreshold> thresholds,
                                   const StudyConfig& cfg) {
  if (thresholds.empty()) throw InvalidArgument("empty effect threshold list");
  std::set<int> percents;
  for (auto t : thresholds) percents.insert(threshold_percent(t));
  StudyConfig c = cfg;
  c.test_kind = TestKind::interval;
  const auto set = TournamentSet::build(matrix, seed_set, c);
  SweepSeries series{"a12_threshold", {}};
  for (auto t : all_effect_thresholds()) {
    if (!percents.contains(threshold_percent(t))) continue;
    c.effect_threshold = t;
    series.points.push_back(point_from(threshold_value(t), set.rank(c)));
  }
  return series;
}

}  // namespace senf
