#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "senf/cli.hpp"
#include "senf/config.hpp"
#include "senf/error.hpp"
#include "senf/harness.hpp"
#include "senf/ranking.hpp"
#include "senf/results.hpp"
#include "senf/sensitivity.hpp"
#include "senf/simulator.hpp"
#include "senf/stats.hpp"

namespace py = pybind11;
using namespace senf;

namespace {

using Vec = std::vector<double>;
using release = py::call_guard<py::gil_scoped_release>;

StudyConfig make_config(double alpha, const std::string& effect, const std::string& kind,
                        const std::string& mwu, int exact_limit, std::uint64_t seed,
                        std::optional<double> or_threshold) {
  StudyConfig c;
  c.alpha = alpha;
  c.effect_threshold = parse_effect_threshold(effect);
  c.test_kind = parse_test_kind(kind);
  c.mwu_mode = stats::parse_mwu_mode(mwu);
  c.exact_size_limit = exact_limit;
  c.rng_seed = seed;
  c.odds_ratio_threshold = or_threshold;
  c.check();
  return c;
}

py::dict comparison_dict(const Comparison& c) {
  py::dict d;
  d["fuzzer_a"] = c.fuzzer_a;
  d["fuzzer_b"] = c.fuzzer_b;
  d["p"] = c.p.value;
  d["p_method"] = stats::to_string(c.p.method);
  d["effect"] = c.effect;
  d["direction"] = to_string(c.direction);
  d["kind"] = to_string(c.kind);
  return d;
}

py::dict point_dict(const SweepPoint& p) {
  py::dict d;
  d["parameter"] = p.parameter;
  d["ranks"] = p.ranks;
  d["min_ranks"] = p.min_ranks;
  d["max_ranks"] = p.max_ranks;
  d["directed_comparisons"] = p.directed_comparisons;
  return d;
}

std::vector<EffectThreshold> parse_thresholds(const std::vector<std::string>& names) {
  std::vector<EffectThreshold> out;
  for (const auto& n : names) out.push_back(parse_effect_threshold(n));
  return out;
}

}  // namespace

PYBIND11_MODULE(_senf, m) {
  m.doc() = "Statistical ranking of fuzzers from time-to-bug trials";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", error.ptr());
  auto data = py::register_exception<DataError>(m, "DataError", error.ptr());
  py::register_exception<MalformedRow>(m, "MalformedRow", data.ptr());
  py::register_exception<DuplicateKey>(m, "DuplicateKey", data.ptr());
  py::register_exception<SchemaError>(m, "SchemaError", data.ptr());
  py::register_exception<IoError>(m, "IoError", error.ptr());
  py::register_exception<HarnessError>(m, "HarnessError", error.ptr());

  // Statistics.
  m.def("fractional_ranks", [](const Vec& v) { return stats::fractional_ranks(v); });
  m.def("a12", [](const Vec& x, const Vec& y) { return stats::a12(x, y); });
  m.def(
      "a12_fraction",
      [](const Vec& x, const Vec& y) {
        const auto f = stats::a12_fraction(x, y);
        return std::pair{f.numerator, f.denominator};
      },
      "(numerator, denominator) of A12");
  m.def(
      "mwu_p",
      [](const Vec& x, const Vec& y, const std::string& mode, int exact_limit) {
        const auto p = stats::mwu_p(x, y, stats::parse_mwu_mode(mode), exact_limit);
        return std::pair{p.value, std::string(stats::to_string(p.method))};
      },
      py::arg("x"), py::arg("y"), py::arg("mode") = "auto",
      py::arg("exact_size_limit") = stats::kDefaultExactSizeLimit,
      "Two-sided Mann-Whitney U p-value as (p, method)");
  m.def(
      "fisher_exact_p",
      [](std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) {
        return stats::fisher_exact_p({a, b, c, d}).value;
      },
      py::arg("a"), py::arg("b"), py::arg("c"), py::arg("d"));
  m.def(
      "odds_ratio",
      [](std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) {
        return stats::odds_ratio({a, b, c, d});
      },
      py::arg("a"), py::arg("b"), py::arg("c"), py::arg("d"));

  // Configuration.
  py::class_<StudyConfig>(m, "StudyConfig")
      .def(py::init(&make_config), py::kw_only(), py::arg("alpha") = 0.05,
           py::arg("effect_threshold") = "none", py::arg("test_kind") = "interval",
           py::arg("mwu_mode") = "auto",
           py::arg("exact_size_limit") = stats::kDefaultExactSizeLimit,
           py::arg("rng_seed") = 0, py::arg("odds_ratio_threshold") = py::none())
      .def_readwrite("alpha", &StudyConfig::alpha)
      .def_readwrite("exact_size_limit", &StudyConfig::exact_size_limit)
      .def_readwrite("rng_seed", &StudyConfig::rng_seed)
      .def_readwrite("odds_ratio_threshold", &StudyConfig::odds_ratio_threshold)
      .def_property(
          "effect_threshold", [](const StudyConfig& c) { return to_string(c.effect_threshold); },
          [](StudyConfig& c, const std::string& s) { c.effect_threshold = parse_effect_threshold(s); })
      .def_property(
          "test_kind", [](const StudyConfig& c) { return to_string(c.test_kind); },
          [](StudyConfig& c, const std::string& s) { c.test_kind = parse_test_kind(s); })
      .def_property(
          "mwu_mode", [](const StudyConfig& c) { return stats::to_string(c.mwu_mode); },
          [](StudyConfig& c, const std::string& s) { c.mwu_mode = stats::parse_mwu_mode(s); })
      .def("check", &StudyConfig::check);

  // Results model.
  py::class_<TrialRecord>(m, "TrialRecord")
      .def(py::init([](std::string fuzzer, std::string target, std::string seed_set, int trial,
                       std::optional<double> found_at, double cap_seconds) {
             return TrialRecord{std::move(fuzzer), std::move(target), std::move(seed_set), trial,
                                found_at, cap_seconds};
           }),
           py::arg("fuzzer"), py::arg("target"), py::arg("seed_set"), py::arg("trial"),
           py::arg("found_at"), py::arg("cap_seconds"))
      .def_readwrite("fuzzer", &TrialRecord::fuzzer)
      .def_readwrite("target", &TrialRecord::target)
      .def_readwrite("seed_set", &TrialRecord::seed_set)
      .def_readwrite("trial", &TrialRecord::trial)
      .def_readwrite("found_at", &TrialRecord::found_at)
      .def_readwrite("cap_seconds", &TrialRecord::cap_seconds)
      .def_property_readonly("found", &TrialRecord::found)
      .def(py::self == py::self)
      .def("__repr__", [](const TrialRecord& r) {
        std::ostringstream s;
        s << "TrialRecord(" << r.fuzzer << ", " << r.target << ", " << r.seed_set << ", "
          << r.trial << ", ";
        if (r.found_at) s << *r.found_at; else s << "None";
        s << ", " << r.cap_seconds << ")";
        return s.str();
      });

  py::class_<ExperimentMatrix>(m, "ExperimentMatrix")
      .def(py::init<>())
      .def(py::init<std::vector<TrialRecord>>(), py::arg("records"))
      .def_property_readonly("records",
                             [](const ExperimentMatrix& x) {
                               return std::vector<TrialRecord>(x.records().begin(),
                                                               x.records().end());
                             })
      .def("__len__", &ExperimentMatrix::size)
      .def("fuzzers", &ExperimentMatrix::fuzzers)
      .def("targets", py::overload_cast<>(&ExperimentMatrix::targets, py::const_))
      .def("seed_sets", &ExperimentMatrix::seed_sets)
      .def(py::self == py::self)
      .def("to_json", [](const ExperimentMatrix& x) { return to_json_string(x); })
      .def("to_csv", [](const ExperimentMatrix& x) { return to_csv_string(x); });

  m.def("parse_csv", &parse_csv, py::arg("text"));
  m.def("parse_json", &parse_json, py::arg("text"));
  m.def("ingest_csv", &ingest_csv, py::arg("path"));
  m.def("ingest_json", &ingest_json, py::arg("path"));
  m.def("load", &load, py::arg("path"));
  m.def("save", &save, py::arg("matrix"), py::arg("path"));
  m.def(
      "validate",
      [](const ExperimentMatrix& x) {
        py::list out;
        for (const auto& i : validate(x).issues) {
          py::dict d;
          d["severity"] = to_string(i.severity);
          d["kind"] = to_string(i.kind);
          d["message"] = i.message;
          out.append(d);
        }
        return out;
      },
      py::arg("matrix"), "Validation issues as a list of dicts");

  // Ranking.
  py::class_<RankingReport>(m, "RankingReport")
      .def_readonly("seed_set", &RankingReport::seed_set)
      .def_readonly("config", &RankingReport::config)
      .def_readonly("per_target_ranks", &RankingReport::per_target_ranks)
      .def_readonly("average_rank", &RankingReport::average_rank)
      .def_property_readonly("comparisons",
                             [](const RankingReport& r) {
                               py::dict out;
                               for (const auto& [t, cs] : r.comparisons) {
                                 py::list l;
                                 for (const auto& c : cs) l.append(comparison_dict(c));
                                 out[py::str(t)] = l;
                               }
                               return out;
                             })
      .def("directed_comparisons", &RankingReport::directed_comparisons)
      .def("to_json", [](const RankingReport& r) { return to_json_string(r); })
      .def("average_rank_csv", &average_rank_csv)
      .def("target_rank_csv", &target_rank_csv);

  m.def("rank_overall", &rank_overall, py::arg("matrix"), py::arg("seed_set"),
        py::arg("config") = StudyConfig{}, release());
  m.def("rank_target", &rank_target, py::arg("matrix"), py::arg("target"), py::arg("seed_set"),
        py::arg("config") = StudyConfig{});
  m.def("naive_average_ranking", &naive_average_ranking, py::arg("matrix"), py::arg("seed_set"));
  m.def(
      "consistency_spread",
      [](const ExperimentMatrix& x, const std::string& seed_set) {
        py::dict out;
        for (const auto& [key, v] : consistency_spread(x, seed_set))
          out[py::make_tuple(key.first, key.second)] = py::cast(v);
        return out;
      },
      py::arg("matrix"), py::arg("seed_set"), "{(fuzzer, target): spread or None}");

  // Sensitivity.
  py::class_<SweepSeries>(m, "SweepSeries")
      .def_readonly("parameter_name", &SweepSeries::parameter_name)
      .def_property_readonly("points",
                             [](const SweepSeries& s) {
                               py::list l;
                               for (const auto& p : s.points) l.append(point_dict(p));
                               return l;
                             })
      .def("to_csv", [](const SweepSeries& s) { return to_csv_string(s); });

  m.def("truncate", &senf::truncate, py::arg("matrix"), py::arg("t_seconds"));
  m.def(
      "prefix_trials", [](const ExperimentMatrix& x, int k) { return prefix_trials(x, k).matrix; },
      py::arg("matrix"), py::arg("k"));
  m.def(
      "runtime_sweep",
      [](const ExperimentMatrix& x, const std::string& s, const Vec& times, const StudyConfig& c) {
        return runtime_sweep(x, s, times, c);
      },
      py::arg("matrix"), py::arg("seed_set"), py::arg("times"), py::arg("config") = StudyConfig{},
      release());
  m.def(
      "trial_sweep",
      [](const ExperimentMatrix& x, const std::string& s, const std::vector<int>& ks,
         const StudyConfig& c) { return trial_sweep(x, s, ks, c); },
      py::arg("matrix"), py::arg("seed_set"), py::arg("ks"), py::arg("config") = StudyConfig{},
      release());
  m.def(
      "target_subsample_sweep",
      [](const ExperimentMatrix& x, const std::string& s, const std::vector<int>& sizes,
         int samples, const StudyConfig& c) {
        return target_subsample_sweep(x, s, sizes, samples, c);
      },
      py::arg("matrix"), py::arg("seed_set"), py::arg("sizes"),
      py::arg("samples") = kDefaultSubsamples, py::arg("config") = StudyConfig{}, release());
  m.def(
      "p_threshold_sweep",
      [](const ExperimentMatrix& x, const std::string& s, const Vec& alphas,
         const StudyConfig& c) {
        auto r = p_threshold_sweep(x, s, alphas, c);
        return std::pair{std::move(r.interval), std::move(r.dichotomous)};
      },
      py::arg("matrix"), py::arg("seed_set"), py::arg("alphas"), py::arg("config") = StudyConfig{},
      release(), "(interval series, dichotomous series)");
  m.def(
      "effect_threshold_sweep",
      [](const ExperimentMatrix& x, const std::string& s, const std::vector<std::string>& names,
         const StudyConfig& c) {
        const auto thresholds = parse_thresholds(names);
        py::gil_scoped_release nogil;
        return effect_threshold_sweep(x, s, thresholds, c);
      },
      py::arg("matrix"), py::arg("seed_set"),
      py::arg("thresholds") = std::vector<std::string>{"none", "small", "medium", "large"},
      py::arg("config") = StudyConfig{});

  // Simulator.
  m.def("scenario_names", [] {
    std::vector<std::string> names;
    for (const auto& s : sim::scenario_library()) names.push_back(s.name);
    return names;
  });
  m.def("target_names", &sim::target_names, py::arg("count"));
  m.def(
      "simulate",
      [](const std::string& scenario, int targets, int trials, double cap, std::uint64_t seed,
         const std::string& seed_set) {
        return sim::simulate(sim::scenario(scenario).models, sim::target_names(targets), seed_set,
                             trials, cap, seed);
      },
      py::arg("scenario"), py::arg("targets") = 20, py::arg("trials") = 30,
      py::arg("cap_seconds") = 86400.0, py::arg("rng_seed") = 0, py::arg("seed_set") = "seeded",
      "Draws a matrix from a named scenario");
  m.def(
      "simulate_models",
      [](const std::string& models_json, const std::vector<std::string>& targets, int trials,
         double cap, std::uint64_t seed, const std::string& seed_set) {
        return sim::simulate(sim::models_from_json(models_json), targets, seed_set, trials, cap,
                             seed);
      },
      py::arg("models_json"), py::arg("targets"), py::arg("trials") = 30,
      py::arg("cap_seconds") = 86400.0, py::arg("rng_seed") = 0, py::arg("seed_set") = "seeded",
      "Draws a matrix from JSON fuzzer models");

  // Campaigns.
  m.def(
      "run_campaign",
      [](const std::filesystem::path& spec_path) {
        const auto spec = harness::load_spec(spec_path);
        harness::CampaignResult r;
        {
          py::gil_scoped_release nogil;
          r = harness::run_campaign(spec);
        }
        return std::pair{r.fragment, r.errors};
      },
      py::arg("spec_path"), "Runs a campaign spec file; returns (matrix, errors)");

  // Command line.
  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release nogil;
          code = cli::dispatch(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs one senf subcommand; returns (exit code, stdout, stderr)");
}
