#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "senf/config.hpp"
#include "senf/results.hpp"
#include "senf/stats.hpp"

namespace senf {

enum class Direction { none, a_better, b_better };

const char* to_string(Direction d);

// One pairwise verdict.  `effect` is A12(a, b) for interval comparisons
// (below 0.5 means a is faster) and the odds ratio for dichotomous ones
// (above 1 means a finds the bug more often).
struct Comparison {
  std::string fuzzer_a;
  std::string fuzzer_b;
  stats::PValue p;
  double effect = 0.0;
  Direction direction = Direction::none;
  TestKind kind = TestKind::interval;
};

// Censored time-to-bug sample: found times as-is, misses at cap_seconds.
std::vector<double> interval_sample(const ExperimentMatrix& matrix,
                                    const std::string& fuzzer,
                                    const std::string& target,
                                    const std::string& seed_set);

Comparison compare_interval(std::span<const double> a, std::span<const double> b,
                            const StudyConfig& cfg);

Comparison compare_dichotomous(int a_found, int a_n, int b_found, int b_n,
                               const StudyConfig& cfg);

// Threshold-independent evidence for one pair, so that the verdict can be
// re-evaluated under a different alpha or effect gate without recomputing
// any test.
struct PairEvidence {
  std::string fuzzer_a;
  std::string fuzzer_b;
  TestKind kind = TestKind::interval;
  stats::PValue p;
  double effect = 0.0;
  stats::A12Fraction a12;  // interval only
  int odds_sign = 0;       // dichotomous only
};

Direction decide(const PairEvidence& e, const StudyConfig& cfg);
Comparison to_comparison(const PairEvidence& e, const StudyConfig& cfg);

// Every unordered pair of fuzzers with trials on one target.
struct TargetTournament {
  std::string target;
  std::vector<std::string> fuzzers;  // sorted
  std::vector<PairEvidence> pairs;   // (i, j) with i < j, row-major
};

TargetTournament build_tournament(const ExperimentMatrix& matrix,
                                  const std::string& target,
                                  const std::string& seed_set,
                                  const StudyConfig& cfg);

struct TargetRanking {
  std::map<std::string, double> ranks;
  std::vector<Comparison> comparisons;
};

TargetRanking rank_tournament(const TargetTournament& t, const StudyConfig& cfg);

// Fractional ranks of fuzzers ordered by win count, most wins first.
std::map<std::string, double> ranks_from_wins(
    const std::map<std::string, int>& wins);

std::map<std::string, double> rank_target(const ExperimentMatrix& matrix,
                                          const std::string& target,
                                          const std::string& seed_set,
                                          const StudyConfig& cfg);

struct RankingReport {
  std::string seed_set;
  StudyConfig config;
  std::map<std::string, std::map<std::string, double>> per_target_ranks;
  std::map<std::string, double> average_rank;
  std::map<std::string, std::vector<Comparison>> comparisons;

  std::size_t directed_comparisons() const;
};

// Evidence for every target of a seed set, built once and re-ranked under
// any alpha / effect gate of the same test kind.
class TournamentSet {
 public:
  static TournamentSet build(const ExperimentMatrix& matrix,
                             const std::string& seed_set,
                             const StudyConfig& cfg);

  const std::vector<TargetTournament>& tournaments() const { return tournaments_; }
  const std::string& seed_set() const { return seed_set_; }

  RankingReport rank(const StudyConfig& cfg) const;
  // Per-target ranks only, in the order of tournaments().
  std::vector<std::map<std::string, double>> target_ranks(
      const StudyConfig& cfg) const;

 private:
  std::string seed_set_;
  TestKind kind_ = TestKind::interval;
  std::vector<TargetTournament> tournaments_;
};

RankingReport rank_overall(const ExperimentMatrix& matrix,
                           const std::string& seed_set, const StudyConfig& cfg);

// Mean over targets of the per-target ranks, summed in `ranks` order.
std::map<std::string, double> average_ranks(
    std::span<const std::map<std::string, double>* const> ranks);

// Mean number of targets whose bug a fuzzer found per trial index.
std::map<std::string, double> naive_average_ranking(
    const ExperimentMatrix& matrix, const std::string& seed_set);

// max - min of the censored sample; nullopt when no trial found the bug.
std::map<std::pair<std::string, std::string>, std::optional<double>>
consistency_spread(const ExperimentMatrix& matrix, const std::string& seed_set);

struct SeedContrastCounts {
  int wins_a_interval = 0;
  int wins_b_interval = 0;
  int wins_a_dichotomous = 0;
  int wins_b_dichotomous = 0;

  friend bool operator==(const SeedContrastCounts&,
                         const SeedContrastCounts&) = default;
};

struct SeedContrast {
  std::map<std::string, SeedContrastCounts> per_fuzzer;
  std::vector<std::string> warnings;
};

SeedContrast seed_set_contrast(const ExperimentMatrix& matrix,
                               const std::string& seed_a,
                               const std::string& seed_b,
                               const StudyConfig& cfg);

// ---------------------------------------------------------------------------
// Serialization.

std::string to_json_string(const RankingReport& report);
// fuzzer,average_rank
std::string average_rank_csv(const RankingReport& report);
// target,fuzzer,rank
std::string target_rank_csv(const RankingReport& report);

}  // namespace senf
