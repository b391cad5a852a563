#include "senf/ranking.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "senf/error.hpp"
#include "test_util.hpp"

namespace senf {
namespace {

using testing::add_group;
using testing::rec;
using testing::repeat;

std::vector<double> seq(double start, int n, double step = 1.0) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = start + i * step;
  return v;
}

TEST(IntervalSample, CensorsAtCap) {
  std::vector<TrialRecord> r{rec("A", "T", 0, 100.0), rec("A", "T", 1, std::nullopt)};
  const ExperimentMatrix m(r);
  EXPECT_EQ(interval_sample(m, "A", "T", "seeded"), (std::vector<double>{100, 86400}));
}

TEST(IntervalSample, AllFoundAndAllMissed) {
  std::vector<TrialRecord> r;
  add_group(r, "A", "T", {5, 9, 7});
  add_group(r, "B", "T", {-1, -1}, 3600);
  const ExperimentMatrix m(r);
  EXPECT_EQ(interval_sample(m, "A", "T", "seeded"), (std::vector<double>{5, 9, 7}));
  EXPECT_EQ(interval_sample(m, "B", "T", "seeded"), (std::vector<double>{3600, 3600}));
}

TEST(CompareInterval, FullSeparationAtThirty) {
  auto a = seq(10, 30, 30);  // 10 .. 880
  auto b = repeat(86400, 30);
  auto c = compare_interval(a, b, StudyConfig{});
  EXPECT_EQ(c.p.method, stats::PMethod::normal_approx);
  EXPECT_EQ(c.direction, Direction::a_better);
  EXPECT_EQ(c.effect, 0.0);
  EXPECT_EQ(compare_interval(b, a, StudyConfig{}).direction, Direction::b_better);
}

TEST(CompareInterval, IdenticalSamples) {
  auto a = seq(1, 10);
  EXPECT_EQ(compare_interval(a, a, StudyConfig{}).direction, Direction::none);
}

TEST(CompareInterval, TinyAlphaBlocksEverything) {
  StudyConfig cfg;
  cfg.alpha = 5e-300;
  EXPECT_EQ(compare_interval(seq(10, 30), repeat(86400, 30), cfg).direction, Direction::none);
}

TEST(CompareDichotomous, Examples) {
  StudyConfig cfg;
  cfg.test_kind = TestKind::dichotomous;
  auto c = compare_dichotomous(30, 30, 0, 30, cfg);
  EXPECT_EQ(c.direction, Direction::a_better);
  EXPECT_NEAR(c.p.value / (2.0 / static_cast<double>(oracle::choose(60, 30))), 1.0, 1e-10);
  auto none = compare_dichotomous(15, 30, 15, 30, cfg);
  EXPECT_EQ(none.direction, Direction::none);
  EXPECT_DOUBLE_EQ(none.p.value, 1.0);
  auto small = compare_dichotomous(3, 3, 0, 3, cfg);
  EXPECT_NEAR(small.p.value, 0.1, 1e-15);
  EXPECT_EQ(small.direction, Direction::none);
  EXPECT_EQ(compare_dichotomous(0, 30, 30, 30, cfg).direction, Direction::b_better);
}

TEST(CompareDichotomous, OptionalOddsRatioGate) {
  StudyConfig cfg;
  cfg.test_kind = TestKind::dichotomous;
  // No zero cells, so OR = (25 * 20) / (5 * 10) = 10.
  EXPECT_EQ(compare_dichotomous(25, 30, 10, 30, cfg).direction, Direction::a_better);
  cfg.odds_ratio_threshold = 10.0;
  EXPECT_EQ(compare_dichotomous(25, 30, 10, 30, cfg).direction, Direction::a_better);
  cfg.odds_ratio_threshold = 10.5;
  EXPECT_EQ(compare_dichotomous(25, 30, 10, 30, cfg).direction, Direction::none);
  EXPECT_EQ(compare_dichotomous(10, 30, 25, 30, cfg).direction, Direction::none);
}

TEST(EffectGate, ThresholdBoundaries) {
  // A12 of 0.36 sits exactly on the medium gate (|0.36 - 0.5| = 0.64 - 0.5).
  PairEvidence e;
  e.kind = TestKind::interval;
  e.p = {0.001, stats::PMethod::exact};
  e.a12 = {36, 100};
  StudyConfig cfg;
  cfg.effect_threshold = EffectThreshold::medium;
  EXPECT_EQ(decide(e, cfg), Direction::a_better);
  e.a12 = {37, 100};
  EXPECT_EQ(decide(e, cfg), Direction::none);
  e.a12 = {64, 100};
  EXPECT_EQ(decide(e, cfg), Direction::b_better);
  e.a12 = {50, 100};
  cfg.effect_threshold = EffectThreshold::none;
  EXPECT_EQ(decide(e, cfg), Direction::none);
  e.a12 = {49, 100};
  EXPECT_EQ(decide(e, cfg), Direction::a_better);
  e.p.value = cfg.alpha;
  EXPECT_EQ(decide(e, cfg), Direction::none);
}

TEST(RankTarget, NoSignificantPairs) {
  std::vector<TrialRecord> r;
  for (const char* f : {"A", "B", "C"}) add_group(r, f, "T", seq(1, 30));
  auto ranks = rank_target(ExperimentMatrix(r), "T", "seeded", StudyConfig{});
  for (const auto& [f, v] : ranks) EXPECT_EQ(v, 2.0) << f;
}

TEST(RankTarget, OneWinnerTwoTied) {
  std::vector<TrialRecord> r;
  add_group(r, "A", "T", seq(1, 30));
  add_group(r, "B", "T", seq(1000, 30));
  add_group(r, "C", "T", seq(1000.5, 30));
  auto ranks = rank_target(ExperimentMatrix(r), "T", "seeded", StudyConfig{});
  EXPECT_EQ(ranks, (std::map<std::string, double>{{"A", 1}, {"B", 2.5}, {"C", 2.5}}));
}

TEST(RankTarget, StrictChain) {
  std::vector<TrialRecord> r;
  add_group(r, "A", "T", seq(1, 30));
  add_group(r, "B", "T", seq(1000, 30));
  add_group(r, "C", "T", repeat(-1, 30));
  auto ranks = rank_target(ExperimentMatrix(r), "T", "seeded", StudyConfig{});
  EXPECT_EQ(ranks, (std::map<std::string, double>{{"A", 1}, {"B", 2}, {"C", 3}}));
}

TEST(RankTarget, FuzzerWithoutTrialsIsExcluded) {
  std::vector<TrialRecord> r;
  add_group(r, "A", "T1", seq(1, 30));
  add_group(r, "B", "T1", seq(1000, 30));
  add_group(r, "A", "T2", seq(1, 30));
  add_group(r, "B", "T2", seq(1000, 30));
  add_group(r, "C", "T2", repeat(-1, 30));
  const ExperimentMatrix m(r);
  EXPECT_EQ(rank_target(m, "T1", "seeded", StudyConfig{}).size(), 2u);
  auto report = rank_overall(m, "seeded", StudyConfig{});
  EXPECT_EQ(report.average_rank.at("C"), 3.0);
  EXPECT_EQ(report.average_rank.at("A"), 1.0);
}

TEST(RankOverall, SingleTargetIsThatTarget) {
  std::vector<TrialRecord> r;
  add_group(r, "A", "T", seq(1, 30));
  add_group(r, "B", "T", seq(1000, 30));
  const ExperimentMatrix m(r);
  auto report = rank_overall(m, "seeded", StudyConfig{});
  EXPECT_EQ(report.average_rank, rank_target(m, "T", "seeded", StudyConfig{}));
}

TEST(RankOverall, OpposedTargetsAverageOut) {
  std::vector<TrialRecord> r;
  add_group(r, "A", "T1", seq(1, 30));
  add_group(r, "B", "T1", seq(1000, 30));
  add_group(r, "A", "T2", seq(1000, 30));
  add_group(r, "B", "T2", seq(1, 30));
  auto report = rank_overall(ExperimentMatrix(r), "seeded", StudyConfig{});
  EXPECT_EQ(report.per_target_ranks.at("T1").at("A"), 1.0);
  EXPECT_EQ(report.per_target_ranks.at("T2").at("A"), 2.0);
  EXPECT_EQ(report.average_rank, (std::map<std::string, double>{{"A", 1.5}, {"B", 1.5}}));
  EXPECT_EQ(report.directed_comparisons(), 2u);
}

TEST(RankOverall, Errors) {
  std::vector<TrialRecord> r;
  add_group(r, "A", "T", seq(1, 30));
  const ExperimentMatrix m(r);
  EXPECT_THROW(rank_overall(m, "seeded", StudyConfig{}), DataError);
  EXPECT_THROW(rank_overall(m, "none", StudyConfig{}), DataError);
  StudyConfig bad;
  bad.alpha = 1.5;
  EXPECT_THROW(rank_overall(m, "seeded", bad), InvalidArgument);
}

TEST(RanksFromWins, MatchesCountingOracle) {
  std::mt19937_64 gen(9);
  for (int rep = 0; rep < 500; ++rep) {
    std::map<std::string, int> wins;
    const int k = 1 + static_cast<int>(gen() % 8);
    for (int i = 0; i < k; ++i) wins["f" + std::to_string(i)] = static_cast<int>(gen() % 4);
    ASSERT_EQ(ranks_from_wins(wins), oracle::ranks_by_counting(wins));
  }
}

// Random small matrix: k fuzzers on `targets` targets, n_trials trials each,
// times on a coarse grid so that ties and misses are common.
ExperimentMatrix random_matrix(std::mt19937_64& gen, int k, int targets, int n_trials,
                               int grid = 8) {
  std::vector<TrialRecord> r;
  const double cap = grid * 100.0;
  for (int f = 0; f < k; ++f) {
    const int shift = static_cast<int>(gen() % 4);
    for (int t = 0; t < targets; ++t) {
      std::vector<double> times;
      for (int i = 0; i < n_trials; ++i) {
        const int v = static_cast<int>(gen() % grid) + shift;
        times.push_back(v >= grid ? -1.0 : (v + 1) * 100.0);
      }
      add_group(r, "f" + std::to_string(f), "T" + std::to_string(t), times, cap);
    }
  }
  return ExperimentMatrix(r);
}

TEST(RankTarget, MatchesBruteForceOracle) {
  std::mt19937_64 gen(17);
  const std::vector<EffectThreshold> gates = {EffectThreshold::none, EffectThreshold::small,
                                              EffectThreshold::medium, EffectThreshold::large};
  for (int rep = 0; rep < 300; ++rep) {
    const int k = 2 + static_cast<int>(gen() % 4);
    const int n = 2 + static_cast<int>(gen() % 5);
    auto m = random_matrix(gen, k, 1, n);
    StudyConfig cfg;
    cfg.mwu_mode = stats::MwuMode::exact;
    cfg.alpha = std::vector<double>{0.05, 0.1, 0.2}[gen() % 3];
    cfg.effect_threshold = gates[gen() % 4];
    std::map<std::string, int> wins;
    for (const auto& f : m.fuzzers()) wins[f] = 0;
    for (const auto& a : m.fuzzers())
      for (const auto& b : m.fuzzers()) {
        if (a >= b) continue;
        auto xa = interval_sample(m, a, "T0", "seeded");
        auto xb = interval_sample(m, b, "T0", "seeded");
        const auto perm = oracle::mwu_permutation(xa, xb);
        const double du = static_cast<double>(oracle::doubled_u(xa, xb));
        const double a12 = du / (2.0 * xa.size() * xb.size());
        const double gate = threshold_percent(cfg.effect_threshold) / 100.0 - 0.5;
        if (!(perm.p() < cfg.alpha) || a12 == 0.5 || std::fabs(a12 - 0.5) < gate - 1e-12)
          continue;
        ++wins[a12 < 0.5 ? a : b];
      }
    ASSERT_EQ(rank_target(m, "T0", "seeded", cfg), oracle::ranks_by_counting(wins))
        << "rep " << rep;
  }
}

void expect_same_report(const RankingReport& x, const RankingReport& y) {
  EXPECT_EQ(x.average_rank, y.average_rank);
  EXPECT_EQ(x.per_target_ranks, y.per_target_ranks);
  ASSERT_EQ(x.comparisons.size(), y.comparisons.size());
  for (const auto& [t, list] : x.comparisons) {
    const auto& other = y.comparisons.at(t);
    ASSERT_EQ(list.size(), other.size());
    for (std::size_t i = 0; i < list.size(); ++i) {
      EXPECT_EQ(list[i].p.value, other[i].p.value);
      EXPECT_EQ(list[i].effect, other[i].effect);
      EXPECT_EQ(list[i].direction, other[i].direction);
    }
  }
}

TEST(RankOverall, InvariantUnderMonotoneTimeRescaling) {
  std::mt19937_64 gen(23);
  for (int rep = 0; rep < 40; ++rep) {
    auto m = random_matrix(gen, 3 + static_cast<int>(gen() % 3), 4, 8 + static_cast<int>(gen() % 25));
    std::vector<TrialRecord> scaled;
    for (auto r : m.records()) {
      auto f = [](double s) { return std::sqrt(s) * 7.0 + 3.0; };
      if (r.found_at) r.found_at = f(*r.found_at);
      r.cap_seconds = f(r.cap_seconds);
      scaled.push_back(r);
    }
    expect_same_report(rank_overall(m, "seeded", StudyConfig{}),
                       rank_overall(ExperimentMatrix(scaled), "seeded", StudyConfig{}));
  }
}

TEST(RankOverall, DominantFuzzerRanksFirst) {
  std::mt19937_64 gen(31);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<TrialRecord> r;
    for (int t = 0; t < 5; ++t) {
      std::vector<double> fast;
      for (int i = 0; i < 30; ++i) fast.push_back(1.0 + static_cast<double>(gen() % 100));
      add_group(r, "dominant", "T" + std::to_string(t), fast);
      for (int f = 0; f < 3; ++f) {
        std::vector<double> slow;
        for (int i = 0; i < 30; ++i)
          slow.push_back(gen() % 2 ? -1.0 : 200.0 + static_cast<double>(gen() % 1000));
        add_group(r, "other" + std::to_string(f), "T" + std::to_string(t), slow);
      }
    }
    auto report = rank_overall(ExperimentMatrix(r), "seeded", StudyConfig{});
    EXPECT_EQ(report.average_rank.at("dominant"), 1.0);
  }
}

TEST(TournamentSet, ThresholdMonotonicityAndRankSums) {
  std::mt19937_64 gen(41);
  const std::vector<double> alphas = {0.5, 0.2, 0.05, 0.01, 1e-3, 1e-6, 5e-300};
  for (int rep = 0; rep < 30; ++rep) {
    const int k = 3 + static_cast<int>(gen() % 4);
    auto m = random_matrix(gen, k, 5, 10 + static_cast<int>(gen() % 25));
    for (auto kind : {TestKind::interval, TestKind::dichotomous}) {
      StudyConfig cfg;
      cfg.test_kind = kind;
      auto set = TournamentSet::build(m, "seeded", cfg);
      std::size_t previous = SIZE_MAX;
      for (double a : alphas) {
        cfg.alpha = a;
        auto report = set.rank(cfg);
        EXPECT_LE(report.directed_comparisons(), previous);
        previous = report.directed_comparisons();
        double total = 0.0;
        for (const auto& [t, ranks] : report.per_target_ranks) {
          double s = 0.0;
          for (const auto& [f, v] : ranks) s += v;
          EXPECT_EQ(s, k * (k + 1) / 2.0);
        }
        for (const auto& [f, v] : report.average_rank) total += v;
        EXPECT_NEAR(total, k * (k + 1) / 2.0, 1e-9);
      }
      EXPECT_EQ(previous, 0u);
      if (kind == TestKind::dichotomous) continue;
      cfg.alpha = 0.05;
      previous = SIZE_MAX;
      for (auto g : {EffectThreshold::none, EffectThreshold::small, EffectThreshold::medium,
                     EffectThreshold::large}) {
        cfg.effect_threshold = g;
        const auto n = set.rank(cfg).directed_comparisons();
        EXPECT_LE(n, previous);
        previous = n;
      }
    }
  }
}

TEST(TournamentSet, KindMustMatch) {
  std::mt19937_64 gen(1);
  auto m = random_matrix(gen, 3, 2, 5);
  auto set = TournamentSet::build(m, "seeded", StudyConfig{});
  StudyConfig d;
  d.test_kind = TestKind::dichotomous;
  EXPECT_THROW(set.rank(d), InvalidArgument);
}

TEST(NaiveAverage, Examples) {
  std::vector<TrialRecord> r;
  for (int t = 0; t < 42; ++t)
    add_group(r, "afl", "T" + std::to_string(t), repeat(t < 10 ? 50.0 : -1.0, 30));
  for (int t = 0; t < 2; ++t) {
    std::vector<double> half;
    for (int i = 0; i < 30; ++i) half.push_back(i % 2 ? 9.0 : -1.0);
    add_group(r, "half", "T" + std::to_string(t), half);
  }
  auto naive = naive_average_ranking(ExperimentMatrix(r), "seeded");
  EXPECT_EQ(naive.at("afl"), 10.0);
  EXPECT_EQ(naive.at("half"), 1.0);
}

TEST(ConsistencySpread, Examples) {
  std::vector<TrialRecord> r;
  add_group(r, "A", "T1", repeat(3600, 30));
  add_group(r, "A", "T2", {3600, -1});
  add_group(r, "A", "T3", repeat(-1, 4));
  auto spread = consistency_spread(ExperimentMatrix(r), "seeded");
  EXPECT_EQ(spread.at({"A", "T1"}), 0.0);
  EXPECT_EQ(spread.at({"A", "T2"}), 82800.0);
  EXPECT_FALSE(spread.at({"A", "T3"}).has_value());
}

TEST(SeedContrast, IdenticalDataGivesNoWins) {
  std::mt19937_64 gen(2);
  auto m = random_matrix(gen, 3, 4, 30);
  std::vector<TrialRecord> r(m.records().begin(), m.records().end());
  for (auto x : m.records()) {
    x.seed_set = "empty";
    r.push_back(x);
  }
  auto c = seed_set_contrast(ExperimentMatrix(r), "seeded", "empty", StudyConfig{});
  ASSERT_EQ(c.per_fuzzer.size(), 3u);
  for (const auto& [f, counts] : c.per_fuzzer) EXPECT_EQ(counts, SeedContrastCounts{}) << f;
  EXPECT_TRUE(c.warnings.empty());
}

TEST(SeedContrast, InstantVersusNever) {
  std::vector<TrialRecord> r;
  for (int t = 0; t < 5; ++t) {
    const auto target = "T" + std::to_string(t);
    add_group(r, "afl", target, repeat(1, 30), 86400, "seeded");
    add_group(r, "afl", target, repeat(-1, 30), 86400, "empty");
  }
  auto c = seed_set_contrast(ExperimentMatrix(r), "seeded", "empty", StudyConfig{});
  const auto& counts = c.per_fuzzer.at("afl");
  EXPECT_GE(counts.wins_a_interval, 5);
  EXPECT_GE(counts.wins_a_dichotomous, 5);
  EXPECT_EQ(counts.wins_b_interval, 0);
}

TEST(SeedContrast, DisjointCoverageWarns) {
  std::vector<TrialRecord> r;
  add_group(r, "afl", "T1", repeat(1, 3), 86400, "seeded");
  add_group(r, "afl", "T2", repeat(1, 3), 86400, "empty");
  const ExperimentMatrix m(r);
  auto c = seed_set_contrast(m, "seeded", "empty", StudyConfig{});
  EXPECT_TRUE(c.per_fuzzer.empty());
  EXPECT_EQ(c.warnings.size(), 1u);
  EXPECT_THROW(seed_set_contrast(m, "seeded", "other", StudyConfig{}), InvalidArgument);
}

TEST(Serialization, CsvLayouts) {
  std::vector<TrialRecord> r;
  add_group(r, "A", "T1", seq(1, 30));
  add_group(r, "B", "T1", seq(1000, 30));
  auto report = rank_overall(ExperimentMatrix(r), "seeded", StudyConfig{});
  EXPECT_EQ(average_rank_csv(report), "fuzzer,average_rank\nA,1\nB,2\n");
  EXPECT_EQ(target_rank_csv(report), "target,fuzzer,rank\nT1,A,1\nT1,B,2\n");
  const auto json = to_json_string(report);
  EXPECT_NE(json.find("\"average_rank\""), std::string::npos);
  EXPECT_NE(json.find("\"a_better\""), std::string::npos);
}

}  // namespace
}  // namespace senf
