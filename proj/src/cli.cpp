#include "senf/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "io.hpp"
#include "senf/error.hpp"
#include "senf/harness.hpp"
#include "senf/ranking.hpp"
#include "senf/results.hpp"
#include "senf/simulator.hpp"

namespace senf::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

double to_real(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw UsageError("not a number: '" + s + "'");
  }
  if (used != s.size() || !std::isfinite(v)) throw UsageError("not a number: '" + s + "'");
  return v;
}

}  // namespace

std::vector<double> parse_real_list(const std::string& text) {
  if (text.empty()) throw UsageError("empty list");
  if (text.find(':') != std::string::npos) {
    auto parts = split(text, ':');
    if (parts.size() != 3) throw UsageError("range must look like a:b:step, got '" + text + "'");
    const double a = to_real(parts[0]), b = to_real(parts[1]), step = to_real(parts[2]);
    if (step <= 0.0 || b < a) throw UsageError("range needs a <= b and step > 0: '" + text + "'");
    std::vector<double> out;
    const auto n = static_cast<long>(std::floor((b - a) / step + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back(a + static_cast<double>(i) * step);
    return out;
  }
  std::vector<double> out;
  for (const auto& p : split(text, ',')) out.push_back(to_real(p));
  return out;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (double v : parse_real_list(text)) {
    if (v != std::floor(v)) throw UsageError("expected integers: '" + text + "'");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

chart::ChartSpec sweep_chart(const SweepSeries& series, const std::string& title,
                             const std::string& x_label, double x_scale) {
  chart::ChartSpec spec;
  spec.title = title;
  spec.x_label = x_label;
  spec.y_label = "average rank";
  spec.y_inverted = true;
  std::map<std::string, chart::Series> by_fuzzer;
  for (const auto& p : series.points)
    for (const auto& [f, r] : p.ranks) {
      auto& s = by_fuzzer[f];
      s.label = f;
      s.points.emplace_back(p.parameter / x_scale, r);
    }
  for (auto& [f, s] : by_fuzzer) spec.series.push_back(std::move(s));
  return spec;
}

namespace {

struct Common {
  std::string out_dir;
  bool json_errors = false;
};

struct StudyFlags {
  double alpha = 0.05;
  std::string kind = "interval";
  std::string effect = "none";
  std::string mwu_mode = "auto";
  int exact_limit = stats::kDefaultExactSizeLimit;
  std::uint64_t rng_seed = 0;
  std::string seed_set;

  StudyConfig config() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw UsageError("--alpha must be in (0, 1)");
    StudyConfig c;
    c.alpha = alpha;
    try {
      c.test_kind = parse_test_kind(kind);
      c.effect_threshold = parse_effect_threshold(effect);
      c.mwu_mode = stats::parse_mwu_mode(mwu_mode);
      c.exact_size_limit = exact_limit;
      c.rng_seed = rng_seed;
      c.check();
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
    return c;
  }
};

void add_study_flags(CLI::App* sub, StudyFlags& f) {
  sub->add_option("--alpha", f.alpha, "significance threshold, in (0, 1)");
  sub->add_option("--kind", f.kind, "interval | dichotomous");
  sub->add_option("--effect-threshold", f.effect, "none | small | medium | large");
  sub->add_option("--mwu-mode", f.mwu_mode, "exact | approx | auto");
  sub->add_option("--exact-limit", f.exact_limit,
                  "largest pooled sample size for the exact MWU test in auto mode");
  sub->add_option("--rng-seed", f.rng_seed, "seed for randomized analyses");
  sub->add_option("--seed-set", f.seed_set, "seed set to analyse");
}

ExperimentMatrix read_matrix(const std::string& path) {
  if (!fs::exists(path)) throw IoError("no such file: " + path);
  if (fs::path(path).extension() == ".csv") return ingest_csv(path);
  return ingest_json(path);
}

std::string resolve_seed_set(const ExperimentMatrix& m, const std::string& requested) {
  auto seeds = m.seed_sets();
  if (!requested.empty()) {
    if (!std::binary_search(seeds.begin(), seeds.end(), requested))
      throw DataError("seed set '" + requested + "' not in the matrix");
    return requested;
  }
  if (seeds.size() == 1) return seeds.front();
  if (seeds.empty()) throw DataError("matrix has no records");
  throw UsageError("matrix has several seed sets; pass --seed-set");
}

class Outputs {
 public:
  Outputs(fs::path dir, std::ostream& log) : dir_(std::move(dir)), log_(log) {}

  fs::path path(const std::string& name) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create " + dir_.string() + ": " + ec.message());
    return dir_ / name;
  }
  void text(const std::string& name, const std::string& content) {
    auto p = path(name);
    io::write_text_atomic(p, content);
    log_ << "wrote " << p.string() << '\n';
  }
  void svg(const std::string& name, const chart::ChartSpec& spec) {
    auto p = path(name);
    chart::render_chart(spec, p);
    log_ << "wrote " << p.string() << '\n';
  }

 private:
  fs::path dir_;
  std::ostream& log_;
};

const char* kDefaultTimes = "3600:86400:3600";
const char* kDefaultTrials = "5:30:5";
const char* kDefaultAlphas = "0.05,0.005,0.0005,5e-05,5e-06,5e-07,5e-08";

std::vector<int> default_sizes(std::size_t n_targets) {
  std::vector<int> sizes;
  for (int s = 5; s <= 35 && static_cast<std::size_t>(s) < n_targets; s += 5) sizes.push_back(s);
  sizes.push_back(static_cast<int>(n_targets));
  return sizes;
}

void write_ranking(Outputs& o, const RankingReport& r, std::ostream& out) {
  o.text("ranking.json", to_json_string(r));
  o.text("ranking.csv", average_rank_csv(r));
  o.text("ranking_targets.csv", target_rank_csv(r));
  for (const auto& [f, rank] : r.average_rank) out << f << ' ' << io::format_double(rank) << '\n';
}

void write_time_sweep(Outputs& o, const SweepSeries& s) {
  o.text("sweep_time.csv", to_csv_string(s));
  o.svg("sweep_time.svg", sweep_chart(s, "Ranking by maximum run-time", "run-time (h)", 3600.0));
}

void write_trial_sweep(Outputs& o, const SweepSeries& s) {
  o.text("sweep_trials.csv", to_csv_string(s));
  o.svg("sweep_trials.svg", sweep_chart(s, "Ranking by number of trials", "trials"));
}

void write_target_sweep(Outputs& o, const SweepSeries& s) {
  o.text("sweep_targets.csv", to_csv_string(s));
  auto spec = sweep_chart(s, "Mean ranking over random target subsets", "targets");
  // Dashed envelopes would need styling per series; min/max go in as extra lines.
  std::map<std::string, chart::Series> lo, hi;
  for (const auto& p : s.points) {
    if (!p.min_ranks || !p.max_ranks) continue;
    for (const auto& [f, r] : *p.min_ranks) {
      lo[f].label = f + " (min)";
      lo[f].points.emplace_back(p.parameter, r);
    }
    for (const auto& [f, r] : *p.max_ranks) {
      hi[f].label = f + " (max)";
      hi[f].points.emplace_back(p.parameter, r);
    }
  }
  for (auto& [f, ser] : lo) spec.series.push_back(std::move(ser));
  for (auto& [f, ser] : hi) spec.series.push_back(std::move(ser));
  o.svg("sweep_targets.svg", spec);
}

void write_p_sweep(Outputs& o, const PThresholdSweep& s) {
  o.text("sweep_p_interval.csv", to_csv_string(s.interval));
  o.text("sweep_p_dichotomous.csv", to_csv_string(s.dichotomous));
  auto a = sweep_chart(s.interval, "Ranking by p threshold (interval)", "p threshold");
  a.x_log = true;
  auto b = sweep_chart(s.dichotomous, "Ranking by p threshold (dichotomous)", "p threshold");
  b.x_log = true;
  o.svg("sweep_p_interval.svg", a);
  o.svg("sweep_p_dichotomous.svg", b);
}

void write_effect_sweep(Outputs& o, const SweepSeries& s) {
  o.text("sweep_effect.csv", to_csv_string(s));
  o.svg("sweep_effect.svg", sweep_chart(s, "Ranking by A12 threshold", "A12 threshold"));
}

void write_naive(Outputs& o, const std::map<std::string, double>& naive) {
  std::string csv = "fuzzer,avg_bugs_found\n";
  for (const auto& [f, v] : naive) csv += f + ',' + io::format_double(v) + '\n';
  o.text("naive_rank.csv", csv);
}

void write_spread(Outputs& o, const ExperimentMatrix& m, const std::string& seed_set) {
  auto spread = consistency_spread(m, seed_set);
  auto targets = m.targets(seed_set);
  std::string csv = "fuzzer,target,spread_seconds\n";
  std::map<std::string, chart::Series> series;
  for (const auto& [key, v] : spread) {
    if (!v) continue;
    csv += key.first + ',' + key.second + ',' + io::format_double(*v) + '\n';
    const auto pos = std::lower_bound(targets.begin(), targets.end(), key.second) - targets.begin();
    auto& s = series[key.first];
    s.label = key.first;
    s.points.emplace_back(static_cast<double>(pos + 1), *v / 3600.0);
  }
  o.text("spread.csv", csv);
  if (series.empty()) return;
  chart::ChartSpec spec;
  spec.title = "Spread between fastest and slowest trial";
  spec.x_label = "target index";
  spec.y_label = "max - min time-to-bug (h)";
  for (auto& [f, s] : series) spec.series.push_back(std::move(s));
  o.svg("spread.svg", spec);
}

int report_error(const Common& c, std::ostream& err, const char* kind, const std::string& msg,
                 int code) {
  if (c.json_errors)
    err << nlohmann::json{{"error", kind}, {"message", msg}, {"exit_code", code}}.dump() << '\n';
  else
    err << "senf: " << msg << '\n';
  return code;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Statistical evaluation of fuzzer benchmarking results", "senf"};
  app.require_subcommand(1);
  Common common;
  if (const char* env = std::getenv("SENF_OUT"); env && *env) common.out_dir = env;
  else common.out_dir = "senf_out";
  app.add_option("--out", common.out_dir, "output directory (default $SENF_OUT or ./senf_out)");
  app.add_flag("--json-errors", common.json_errors, "report errors as JSON on stderr");
  app.fallthrough();

  std::string db, input, format = "auto";
  StudyFlags study;
  std::string times = kDefaultTimes, trial_ks = kDefaultTrials, sizes, alphas = kDefaultAlphas;
  std::string thresholds = "none,small,medium,large";
  int samples = kDefaultSubsamples;
  std::string seed_a, seed_b;
  std::string scenario_name, models_file, spec_file;
  int n_targets = 20, n_trials = 30;
  double cap = 86400.0;
  bool list_scenarios = false;

  auto* ingest = app.add_subcommand("ingest", "read CSV or JSON results into a matrix file");
  ingest->add_option("--input", input, "results file")->required();
  ingest->add_option("--format", format, "auto | csv | json");

  auto* validate_cmd = app.add_subcommand("validate", "check a results matrix");
  validate_cmd->add_option("--db", db, "results matrix (.json or .csv)")->required();

  auto* rank = app.add_subcommand("rank", "average ranking over all targets");
  auto* sweep_time = app.add_subcommand("sweep-time", "ranking at shorter maximum run-times");
  auto* sweep_trials = app.add_subcommand("sweep-trials", "ranking using the first k trials");
  auto* sweep_targets = app.add_subcommand("sweep-targets", "ranking on random target subsets");
  auto* sweep_p = app.add_subcommand("sweep-p", "ranking at several p thresholds");
  auto* sweep_effect = app.add_subcommand("sweep-effect", "ranking at A12 effect thresholds");
  auto* contrast = app.add_subcommand("contrast-seeds", "per-target wins of one seed set over another");
  auto* naive = app.add_subcommand("naive-rank", "average number of bugs found per trial");
  auto* spread = app.add_subcommand("spread", "max - min time-to-bug per fuzzer and target");
  auto* report = app.add_subcommand("report", "every analysis with default settings");
  for (auto* sub : {rank, sweep_time, sweep_trials, sweep_targets, sweep_p, sweep_effect,
                    contrast, naive, spread, report}) {
    sub->add_option("--db", db, "results matrix (.json or .csv)")->required();
    add_study_flags(sub, study);
  }
  sweep_time->add_option("--times", times, "run-times in seconds (a:b:step or list)");
  sweep_trials->add_option("--ks", trial_ks, "trial counts (a:b:step or list)");
  sweep_targets->add_option("--sizes", sizes, "subset sizes (a:b:step or list)");
  sweep_targets->add_option("--samples", samples, "random subsets per size");
  report->add_option("--samples", samples, "random subsets per size");
  sweep_p->add_option("--alphas", alphas, "p thresholds (list)");
  sweep_effect->add_option("--thresholds", thresholds, "none,small,medium,large");
  contrast->add_option("--seed-a", seed_a, "first seed set")->required();
  contrast->add_option("--seed-b", seed_b, "second seed set")->required();

  auto* simulate_cmd = app.add_subcommand("simulate", "generate a synthetic results matrix");
  simulate_cmd->add_option("--scenario", scenario_name, "built-in scenario");
  simulate_cmd->add_option("--models", models_file, "JSON fuzzer model file");
  simulate_cmd->add_option("--targets", n_targets, "number of targets");
  simulate_cmd->add_option("--trials", n_trials, "trials per fuzzer and target");
  simulate_cmd->add_option("--cap", cap, "run-time cap in seconds");
  simulate_cmd->add_option("--rng-seed", study.rng_seed, "random seed");
  simulate_cmd->add_option("--seed-set", study.seed_set, "seed set label (default: seeded)");
  simulate_cmd->add_flag("--list-scenarios", list_scenarios, "print the built-in scenarios");

  auto* campaign = app.add_subcommand("run-campaign", "run fuzzing trials from a campaign spec");
  campaign->add_option("--spec", spec_file, "campaign spec JSON")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    return report_error(common, err, "usage", e.what(), kUsageError);
  }

  Outputs outputs(common.out_dir, out);
  try {
    if (ingest->parsed()) {
      ExperimentMatrix m;
      const bool csv = format == "csv" || (format == "auto" && fs::path(input).extension() == ".csv");
      if (format != "auto" && format != "csv" && format != "json")
        throw UsageError("--format must be auto, csv or json");
      if (!fs::exists(input)) throw IoError("no such file: " + input);
      m = csv ? ingest_csv(input) : ingest_json(input);
      outputs.text("matrix.json", to_json_string(m));
      out << m.size() << " records, " << m.fuzzers().size() << " fuzzers, "
          << m.targets().size() << " targets, " << m.seed_sets().size() << " seed sets\n";
      return kOk;
    }
    if (validate_cmd->parsed()) {
      auto m = read_matrix(db);
      auto r = validate(m);
      nlohmann::json issues = nlohmann::json::array();
      for (const auto& i : r.issues) {
        issues.push_back({{"severity", to_string(i.severity)},
                          {"kind", to_string(i.kind)},
                          {"message", i.message}});
        out << to_string(i.severity) << ' ' << to_string(i.kind) << ": " << i.message << '\n';
      }
      outputs.text("validation.json", nlohmann::json{{"issues", issues}}.dump(1) + "\n");
      if (r.has_errors()) return report_error(common, err, "data", "validation failed", kDataError);
      return kOk;
    }
    if (simulate_cmd->parsed()) {
      if (list_scenarios) {
        for (const auto& s : sim::scenario_library()) out << s.name << ": " << s.description << '\n';
        return kOk;
      }
      if (scenario_name.empty() == models_file.empty())
        throw UsageError("pass exactly one of --scenario or --models");
      if (n_targets < 1 || n_trials < 1 || !(cap > 0.0))
        throw UsageError("--targets, --trials and --cap must be positive");
      std::vector<sim::FuzzerModel> models;
      if (!scenario_name.empty()) {
        try {
          models = sim::scenario(scenario_name).models;
        } catch (const InvalidArgument& e) {
          throw UsageError(e.what());
        }
      } else {
        models = sim::models_from_json(io::read_text(models_file));
      }
      auto m = sim::simulate(models, sim::target_names(n_targets),
                             study.seed_set.empty() ? "seeded" : study.seed_set, n_trials, cap,
                             study.rng_seed);
      outputs.text("matrix.json", to_json_string(m));
      outputs.text("matrix.csv", to_csv_string(m));
      return kOk;
    }
    if (campaign->parsed()) {
      auto spec = harness::load_spec(spec_file);
      if (spec.output_dir.empty()) spec.output_dir = fs::absolute(common.out_dir);
      try {
        spec.check();
      } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
      }
      auto result = harness::run_campaign(spec);
      for (const auto& r : result.results)
        out << "trial " << r.record.trial << ' ' << harness::to_string(r.termination)
            << (r.record.found_at ? " " + io::format_double(*r.record.found_at) + "s" : "")
            << " restarts=" << r.restarts << '\n';
      out << "results store: " << spec.store_path().string() << '\n';
      if (!result.errors.empty()) {
        std::string msg;
        for (const auto& e : result.errors) msg += (msg.empty() ? "" : "; ") + e;
        return report_error(common, err, "harness", msg, kDataError);
      }
      return kOk;
    }

    // Analyses over an existing matrix.
    const auto cfg = study.config();
    const auto m = read_matrix(db);
    const auto seed_set = contrast->parsed() ? std::string() : resolve_seed_set(m, study.seed_set);

    if (rank->parsed()) {
      write_ranking(outputs, rank_overall(m, seed_set, cfg), out);
    } else if (sweep_time->parsed()) {
      write_time_sweep(outputs, runtime_sweep(m, seed_set, parse_real_list(times), cfg));
    } else if (sweep_trials->parsed()) {
      write_trial_sweep(outputs, trial_sweep(m, seed_set, parse_int_list(trial_ks), cfg));
    } else if (sweep_targets->parsed()) {
      auto list = sizes.empty() ? default_sizes(m.targets(seed_set).size()) : parse_int_list(sizes);
      write_target_sweep(outputs, target_subsample_sweep(m, seed_set, list, samples, cfg));
    } else if (sweep_p->parsed()) {
      auto list = parse_real_list(alphas);
      for (double a : list)
        if (!(a > 0.0 && a < 1.0)) throw UsageError("alphas must be in (0, 1)");
      write_p_sweep(outputs, p_threshold_sweep(m, seed_set, list, cfg));
    } else if (sweep_effect->parsed()) {
      std::vector<EffectThreshold> list;
      for (const auto& t : split(thresholds, ',')) {
        try {
          list.push_back(parse_effect_threshold(t));
        } catch (const InvalidArgument& e) {
          throw UsageError(e.what());
        }
      }
      write_effect_sweep(outputs, effect_threshold_sweep(m, seed_set, list, cfg));
    } else if (contrast->parsed()) {
      auto c = seed_set_contrast(m, seed_a, seed_b, cfg);
      for (const auto& w : c.warnings) err << "senf: warning: " << w << '\n';
      std::string csv =
          "fuzzer,wins_a_interval,wins_b_interval,wins_a_dichotomous,wins_b_dichotomous\n";
      for (const auto& [f, k] : c.per_fuzzer)
        csv += f + ',' + std::to_string(k.wins_a_interval) + ',' +
               std::to_string(k.wins_b_interval) + ',' + std::to_string(k.wins_a_dichotomous) +
               ',' + std::to_string(k.wins_b_dichotomous) + '\n';
      outputs.text("contrast.csv", csv);
    } else if (naive->parsed()) {
      write_naive(outputs, naive_average_ranking(m, seed_set));
    } else if (spread->parsed()) {
      write_spread(outputs, m, seed_set);
    } else if (report->parsed()) {
      write_ranking(outputs, rank_overall(m, seed_set, cfg), out);
      double min_cap = std::numeric_limits<double>::infinity();
      for (const auto& r : m.records())
        if (r.seed_set == seed_set) min_cap = std::min(min_cap, r.cap_seconds);
      auto ts = parse_real_list(kDefaultTimes);
      std::erase_if(ts, [&](double t) { return t > min_cap; });
      if (ts.empty() || ts.back() != min_cap) ts.push_back(min_cap);
      write_time_sweep(outputs, runtime_sweep(m, seed_set, ts, cfg));
      int max_trial = 0;
      for (const auto& r : m.records())
        if (r.seed_set == seed_set) max_trial = std::max(max_trial, r.trial + 1);
      auto ks = parse_int_list(kDefaultTrials);
      std::erase_if(ks, [&](int k) { return k > max_trial; });
      if (ks.empty() || ks.back() != max_trial) ks.push_back(max_trial);
      write_trial_sweep(outputs, trial_sweep(m, seed_set, ks, cfg));
      write_target_sweep(outputs, target_subsample_sweep(m, seed_set,
                                                         default_sizes(m.targets(seed_set).size()),
                                                         samples, cfg));
      write_p_sweep(outputs, p_threshold_sweep(m, seed_set, parse_real_list(kDefaultAlphas), cfg));
      auto all = all_effect_thresholds();
      write_effect_sweep(outputs, effect_threshold_sweep(m, seed_set, all, cfg));
      write_naive(outputs, naive_average_ranking(m, seed_set));
      write_spread(outputs, m, seed_set);
    }
    return kOk;
  } catch (const UsageError& e) {
    return report_error(common, err, "usage", e.what(), kUsageError);
  } catch (const InvalidArgument& e) {
    return report_error(common, err, "usage", e.what(), kUsageError);
  } catch (const IoError& e) {
    return report_error(common, err, "io", e.what(), kDataError);
  } catch (const HarnessError& e) {
    return report_error(common, err, "harness", e.what(), kDataError);
  } catch (const Error& e) {
    return report_error(common, err, "data", e.what(), kDataError);
  } catch (const std::exception& e) {
    return report_error(common, err, "internal", e.what(), kDataError);
  }
}

}  // namespace senf::cli
