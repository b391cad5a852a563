#include "senf/ranking.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "io.hpp"
#include "senf/error.hpp"

namespace senf {

const char* to_string(Direction d) {
  switch (d) {
    case Direction::none: return "none";
    case Direction::a_better: return "a_better";
    case Direction::b_better: return "b_better";
  }
  return "?";
}

std::vector<double> interval_sample(const ExperimentMatrix& matrix,
                                    const std::string& fuzzer,
                                    const std::string& target,
                                    const std::string& seed_set) {
  auto group = matrix.group({fuzzer, target, seed_set});
  if (group.empty())
    throw DataError("no trials for " + fuzzer + " on " + target + "/" + seed_set);
  std::vector<double> out;
  out.reserve(group.size());
  for (const auto* r : group) out.push_back(r->found_at.value_or(r->cap_seconds));
  return out;
}

Direction decide(const PairEvidence& e, const StudyConfig& cfg) {
  if (!(e.p.value < cfg.alpha)) return Direction::none;
  if (e.kind == TestKind::interval) {
    // A12 = num/den; |A12 - 0.5| >= T - 0.5  <=>  100|2num - den| >= (2T% - 100) den.
    const auto num2 = static_cast<__int128>(2 * e.a12.numerator);
    const auto den = static_cast<__int128>(e.a12.denominator);
    if (num2 == den) return Direction::none;
    const __int128 distance = num2 > den ? num2 - den : den - num2;
    const int pct = threshold_percent(cfg.effect_threshold);
    if (100 * distance < static_cast<__int128>(2 * pct - 100) * den) return Direction::none;
    return num2 < den ? Direction::a_better : Direction::b_better;
  }
  if (e.odds_sign == 0) return Direction::none;
  if (cfg.odds_ratio_threshold) {
    const double magnitude = e.effect >= 1.0 ? e.effect : 1.0 / e.effect;
    if (magnitude < *cfg.odds_ratio_threshold) return Direction::none;
  }
  return e.odds_sign > 0 ? Direction::a_better : Direction::b_better;
}

Comparison to_comparison(const PairEvidence& e, const StudyConfig& cfg) {
  return {e.fuzzer_a, e.fuzzer_b, e.p, e.effect, decide(e, cfg), e.kind};
}

namespace {

PairEvidence interval_evidence(std::span<const double> a, std::span<const double> b,
                               const StudyConfig& cfg) {
  PairEvidence e;
  e.kind = TestKind::interval;
  e.p = stats::mwu_p(a, b, cfg.mwu_mode, cfg.exact_size_limit);
  e.a12 = stats::a12_fraction(a, b);
  e.effect = e.a12.value();
  return e;
}

PairEvidence dichotomous_evidence(int a_found, int a_n, int b_found, int b_n) {
  if (a_n < 1 || b_n < 1 || a_found < 0 || b_found < 0 || a_found > a_n || b_found > b_n)
    throw InvalidArgument("found counts must satisfy 0 <= found <= n and n >= 1");
  const stats::Table2x2 t{a_found, a_n - a_found, b_found, b_n - b_found};
  PairEvidence e;
  e.kind = TestKind::dichotomous;
  e.p = stats::fisher_exact_p(t);
  e.effect = stats::odds_ratio(t);
  e.odds_sign = stats::odds_ratio_sign(t);
  return e;
}

}  // namespace

Comparison compare_interval(std::span<const double> a, std::span<const double> b,
                            const StudyConfig& cfg) {
  cfg.check();
  return to_comparison(interval_evidence(a, b, cfg), cfg);
}

Comparison compare_dichotomous(int a_found, int a_n, int b_found, int b_n,
                               const StudyConfig& cfg) {
  cfg.check();
  return to_comparison(dichotomous_evidence(a_found, a_n, b_found, b_n), cfg);
}

TargetTournament build_tournament(const ExperimentMatrix& matrix,
                                  const std::string& target,
                                  const std::string& seed_set,
                                  const StudyConfig& cfg) {
  TargetTournament t;
  t.target = target;
  t.fuzzers = matrix.fuzzers_on(target, seed_set);
  if (t.fuzzers.size() < 2)
    throw DataError("target " + target + "/" + seed_set + " has fewer than 2 fuzzers");

  const std::size_t k = t.fuzzers.size();
  std::vector<std::vector<double>> samples(k);
  std::vector<int> found(k, 0), trials(k, 0);
  for (std::size_t i = 0; i < k; ++i) {
    for (const auto* r : matrix.group({t.fuzzers[i], target, seed_set})) {
      samples[i].push_back(r->found_at.value_or(r->cap_seconds));
      found[i] += r->found() ? 1 : 0;
      ++trials[i];
    }
  }
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) {
      PairEvidence e = cfg.test_kind == TestKind::interval
                           ? interval_evidence(samples[i], samples[j], cfg)
                           : dichotomous_evidence(found[i], trials[i], found[j], trials[j]);
      e.fuzzer_a = t.fuzzers[i];
      e.fuzzer_b = t.fuzzers[j];
      t.pairs.push_back(std::move(e));
    }
  return t;
}

std::map<std::string, double> ranks_from_wins(const std::map<std::string, int>& wins) {
  std::vector<double> negated;
  negated.reserve(wins.size());
  for (const auto& [f, w] : wins) negated.push_back(-static_cast<double>(w));
  auto ranks = stats::fractional_ranks(negated);
  std::map<std::string, double> out;
  std::size_t i = 0;
  for (const auto& [f, w] : wins) out[f] = ranks[i++];
  return out;
}

TargetRanking rank_tournament(const TargetTournament& t, const StudyConfig& cfg) {
  std::map<std::string, int> wins;
  for (const auto& f : t.fuzzers) wins[f] = 0;
  TargetRanking out;
  out.comparisons.reserve(t.pairs.size());
  for (const auto& e : t.pairs) {
    auto c = to_comparison(e, cfg);
    if (c.direction == Direction::a_better) ++wins[c.fuzzer_a];
    if (c.direction == Direction::b_better) ++wins[c.fuzzer_b];
    out.comparisons.push_back(std::move(c));
  }
  out.ranks = ranks_from_wins(wins);
  return out;
}

std::map<std::string, double> rank_target(const ExperimentMatrix& matrix,
                                          const std::string& target,
                                          const std::string& seed_set,
                                          const StudyConfig& cfg) {
  cfg.check();
  return rank_tournament(build_tournament(matrix, target, seed_set, cfg), cfg).ranks;
}

std::size_t RankingReport::directed_comparisons() const {
  std::size_t n = 0;
  for (const auto& [t, list] : comparisons)
    for (const auto& c : list) n += c.direction != Direction::none ? 1 : 0;
  return n;
}

TournamentSet TournamentSet::build(const ExperimentMatrix& matrix,
                                   const std::string& seed_set,
                                   const StudyConfig& cfg) {
  cfg.check();
  TournamentSet set;
  set.seed_set_ = seed_set;
  set.kind_ = cfg.test_kind;
  auto targets = matrix.targets(seed_set);
  if (targets.empty()) throw DataError("no targets under seed set '" + seed_set + "'");
  set.tournaments_.reserve(targets.size());
  for (const auto& t : targets)
    set.tournaments_.push_back(build_tournament(matrix, t, seed_set, cfg));
  return set;
}

std::vector<std::map<std::string, double>> TournamentSet::target_ranks(
    const StudyConfig& cfg) const {
  if (cfg.test_kind != kind_) throw InvalidArgument("test kind differs from the evidence");
  std::vector<std::map<std::string, double>> out;
  out.reserve(tournaments_.size());
  for (const auto& t : tournaments_) out.push_back(rank_tournament(t, cfg).ranks);
  return out;
}

RankingReport TournamentSet::rank(const StudyConfig& cfg) const {
  cfg.check();
  if (cfg.test_kind != kind_) throw InvalidArgument("test kind differs from the evidence");
  RankingReport report;
  report.seed_set = seed_set_;
  report.config = cfg;
  std::vector<const std::map<std::string, double>*> ordered;
  for (const auto& t : tournaments_) {
    auto r = rank_tournament(t, cfg);
    report.comparisons[t.target] = std::move(r.comparisons);
    auto& slot = report.per_target_ranks[t.target];
    slot = std::move(r.ranks);
    ordered.push_back(&slot);
  }
  report.average_rank = average_ranks(ordered);
  return report;
}

RankingReport rank_overall(const ExperimentMatrix& matrix, const std::string& seed_set,
                           const StudyConfig& cfg) {
  return TournamentSet::build(matrix, seed_set, cfg).rank(cfg);
}

std::map<std::string, double> average_ranks(
    std::span<const std::map<std::string, double>* const> ranks) {
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto* per_target : ranks)
    for (const auto& [f, r] : *per_target) {
      auto& [sum, n] = acc[f];
      sum += r;
      ++n;
    }
  std::map<std::string, double> out;
  for (const auto& [f, sn] : acc) out[f] = sn.first / sn.second;
  return out;
}

std::map<std::string, double> naive_average_ranking(const ExperimentMatrix& matrix,
                                                    const std::string& seed_set) {
  // fuzzer -> trial index -> targets found
  std::map<std::string, std::map<int, int>> found;
  for (const auto& r : matrix.records()) {
    if (r.seed_set != seed_set) continue;
    found[r.fuzzer][r.trial] += r.found() ? 1 : 0;
  }
  if (found.empty()) throw DataError("no trials under seed set '" + seed_set + "'");
  std::map<std::string, double> out;
  for (const auto& [f, per_trial] : found) {
    double sum = 0.0;
    for (const auto& [trial, n] : per_trial) sum += n;
    out[f] = sum / static_cast<double>(per_trial.size());
  }
  return out;
}

std::map<std::pair<std::string, std::string>, std::optional<double>> consistency_spread(
    const ExperimentMatrix& matrix, const std::string& seed_set) {
  std::map<std::pair<std::string, std::string>, std::optional<double>> out;
  for (const auto& [key, group] : matrix.groups()) {
    if (key.seed_set != seed_set) continue;
    bool any_found = false;
    double lo = 0.0, hi = 0.0;
    bool first = true;
    for (const auto* r : group) {
      const double v = r->found_at.value_or(r->cap_seconds);
      any_found = any_found || r->found();
      lo = first ? v : std::min(lo, v);
      hi = first ? v : std::max(hi, v);
      first = false;
    }
    out[{key.fuzzer, key.target}] =
        any_found ? std::optional<double>(hi - lo) : std::nullopt;
  }
  return out;
}

SeedContrast seed_set_contrast(const ExperimentMatrix& matrix, const std::string& seed_a,
                               const std::string& seed_b, const StudyConfig& cfg) {
  cfg.check();
  auto seeds = matrix.seed_sets();
  for (const auto* s : {&seed_a, &seed_b})
    if (!std::binary_search(seeds.begin(), seeds.end(), *s))
      throw InvalidArgument("seed set '" + *s + "' not present");

  SeedContrast out;
  StudyConfig interval_cfg = cfg;
  interval_cfg.test_kind = TestKind::interval;
  StudyConfig dicho_cfg = cfg;
  dicho_cfg.test_kind = TestKind::dichotomous;

  for (const auto& f : matrix.fuzzers()) {
    for (const auto& t : matrix.targets()) {
      auto ga = matrix.group({f, t, seed_a});
      auto gb = matrix.group({f, t, seed_b});
      if (ga.empty() || gb.empty()) continue;
      auto& counts = out.per_fuzzer[f];
      std::vector<double> sa, sb;
      int fa = 0, fb = 0;
      for (const auto* r : ga) {
        sa.push_back(r->found_at.value_or(r->cap_seconds));
        fa += r->found() ? 1 : 0;
      }
      for (const auto* r : gb) {
        sb.push_back(r->found_at.value_or(r->cap_seconds));
        fb += r->found() ? 1 : 0;
      }
      auto ci = compare_interval(sa, sb, interval_cfg);
      counts.wins_a_interval += ci.direction == Direction::a_better;
      counts.wins_b_interval += ci.direction == Direction::b_better;
      auto cd = compare_dichotomous(fa, static_cast<int>(ga.size()), fb,
                                    static_cast<int>(gb.size()), dicho_cfg);
      counts.wins_a_dichotomous += cd.direction == Direction::a_better;
      counts.wins_b_dichotomous += cd.direction == Direction::b_better;
    }
  }
  if (out.per_fuzzer.empty())
    out.warnings.push_back("seed sets '" + seed_a + "' and '" + seed_b +
                           "' share no (fuzzer, target) coverage");
  return out;
}

// ---------------------------------------------------------------------------

namespace {

nlohmann::json config_json(const StudyConfig& c) {
  nlohmann::json j = {{"alpha", c.alpha},
                      {"effect_threshold", to_string(c.effect_threshold)},
                      {"test_kind", to_string(c.test_kind)},
                      {"mwu_mode", stats::to_string(c.mwu_mode)},
                      {"exact_size_limit", c.exact_size_limit},
                      {"rng_seed", c.rng_seed}};
  j["odds_ratio_threshold"] =
      c.odds_ratio_threshold ? nlohmann::json(*c.odds_ratio_threshold) : nlohmann::json();
  return j;
}

}  // namespace

std::string to_json_string(const RankingReport& report) {
  nlohmann::json j;
  j["seed_set"] = report.seed_set;
  j["config"] = config_json(report.config);
  j["average_rank"] = report.average_rank;
  j["per_target_ranks"] = report.per_target_ranks;
  nlohmann::json comps = nlohmann::json::object();
  for (const auto& [t, list] : report.comparisons) {
    auto& arr = comps[t] = nlohmann::json::array();
    for (const auto& c : list)
      arr.push_back({{"fuzzer_a", c.fuzzer_a},
                     {"fuzzer_b", c.fuzzer_b},
                     {"p", c.p.value},
                     {"p_method", stats::to_string(c.p.method)},
                     {"effect", c.effect},
                     {"direction", to_string(c.direction)},
                     {"kind", to_string(c.kind)}});
  }
  j["comparisons"] = std::move(comps);
  return j.dump(1) + "\n";
}

std::string average_rank_csv(const RankingReport& report) {
  std::string out = "fuzzer,average_rank\n";
  for (const auto& [f, r] : report.average_rank) out += f + ',' + io::format_double(r) + '\n';
  return out;
}

std::string target_rank_csv(const RankingReport& report) {
  std::string out = "target,fuzzer,rank\n";
  for (const auto& [t, ranks] : report.per_target_ranks)
    for (const auto& [f, r] : ranks) out += t + ',' + f + ',' + io::format_double(r) + '\n';
  return out;
}

}  // namespace senf
