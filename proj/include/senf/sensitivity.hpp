#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "senf/config.hpp"
#include "senf/ranking.hpp"
#include "senf/results.hpp"

namespace senf {

struct SweepPoint {
  double parameter = 0.0;
  std::map<std::string, double> ranks;  // mean rank for subsample sweeps
  std::optional<std::map<std::string, double>> min_ranks;
  std::optional<std::map<std::string, double>> max_ranks;
  std::size_t directed_comparisons = 0;
};

struct SweepSeries {
  std::string parameter_name;
  std::vector<SweepPoint> points;  // strictly increasing parameter
};

// parameter,fuzzer,mean_rank[,min_rank,max_rank]
std::string to_csv_string(const SweepSeries& series);

// Re-horizons every trial at t seconds.  Throws InvalidArgument when t is
// not positive or exceeds any cap in the matrix.
ExperimentMatrix truncate(const ExperimentMatrix& matrix, double t_seconds);

struct PrefixResult {
  ExperimentMatrix matrix;
  // Groups left with fewer than k trials.
  std::vector<GroupKey> short_groups;
};

// Keeps the first k trials, by trial index, of every group.
PrefixResult prefix_trials(const ExperimentMatrix& matrix, int k);

// Parameter lists are sorted and de-duplicated; an empty list is an error.
SweepSeries runtime_sweep(const ExperimentMatrix& matrix,
                          const std::string& seed_set,
                          std::span<const double> times, const StudyConfig& cfg);

SweepSeries trial_sweep(const ExperimentMatrix& matrix,
                        const std::string& seed_set, std::span<const int> ks,
                        const StudyConfig& cfg);

inline constexpr int kDefaultSubsamples = 1000;

SweepSeries target_subsample_sweep(const ExperimentMatrix& matrix,
                                   const std::string& seed_set,
                                   std::span<const int> sizes, int n_samples,
                                   const StudyConfig& cfg);

// Seed of the RNG stream for one subsample draw.
std::uint64_t subsample_stream_seed(std::uint64_t rng_seed, int size, int draw);

// The `size` target indices (out of `n_targets`, sorted ascending) chosen
// by one subsample draw.
std::vector<std::size_t> subsample_draw(std::uint64_t rng_seed, int size,
                                        int draw, std::size_t n_targets);

struct PThresholdSweep {
  SweepSeries interval;
  SweepSeries dichotomous;
};

PThresholdSweep p_threshold_sweep(const ExperimentMatrix& matrix,
                                  const std::string& seed_set,
                                  std::span<const double> alphas,
                                  const StudyConfig& cfg);

std::vector<EffectThreshold> all_effect_thresholds();

// Parameter value of each point is the threshold (0.5 for `none`).
SweepSeries effect_threshold_sweep(const ExperimentMatrix& matrix,
                                   const std::string& seed_set,
                                   std::span<const EffectThreshold> thresholds,
                                   const StudyConfig& cfg);

}  // namespace senf
