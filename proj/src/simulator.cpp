#include "senf/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include <nlohmann/json.hpp>

#include "senf/error.hpp"
#include "senf/rng.hpp"

namespace senf::sim {

using nlohmann::json;

const TargetModel& FuzzerModel::model_for(const std::string& target) const {
  auto it = per_target.find(target);
  return it == per_target.end() ? default_model : it->second;
}

void check_model(const TargetModel& m) {
  const double p = m.detection_probability;
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("detection_probability must be in [0, 1]");
  std::visit(
      [](const auto& d) {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, Constant>) {
          if (!std::isfinite(d.value) || d.value <= 0.0)
            throw InvalidArgument("constant time must be positive");
        } else if constexpr (std::is_same_v<D, Uniform>) {
          if (!std::isfinite(d.lo) || !std::isfinite(d.hi) || d.lo < 0.0 || d.lo > d.hi)
            throw InvalidArgument("uniform time needs 0 <= lo <= hi");
        } else {
          if (!std::isfinite(d.mu) || !std::isfinite(d.sigma) || d.sigma < 0.0)
            throw InvalidArgument("log-normal time needs finite mu and sigma >= 0");
        }
      },
      m.time);
}

namespace {

double draw_time(const TimeDistribution& dist, rng::Stream& stream) {
  return std::visit(
      [&](const auto& d) -> double {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, Constant>) {
          return d.value;
        } else if constexpr (std::is_same_v<D, Uniform>) {
          return d.lo + (d.hi - d.lo) * stream.uniform();
        } else {
          return std::exp(d.mu + d.sigma * stream.normal());
        }
      },
      dist);
}

}  // namespace

ExperimentMatrix simulate(const std::vector<FuzzerModel>& models,
                          const std::vector<std::string>& targets,
                          const std::string& seed_set, int trials, double cap_seconds,
                          std::uint64_t rng_seed) {
  if (models.empty()) throw InvalidArgument("simulate needs at least one fuzzer model");
  if (targets.empty()) throw InvalidArgument("simulate needs at least one target");
  if (trials < 1) throw InvalidArgument("trials must be >= 1");
  if (!std::isfinite(cap_seconds) || cap_seconds <= 0.0)
    throw InvalidArgument("cap_seconds must be positive");
  std::set<std::string> ids;
  for (const auto& m : models) {
    if (!ids.insert(m.fuzzer_id).second)
      throw InvalidArgument("duplicate fuzzer id " + m.fuzzer_id);
    check_model(m.default_model);
    for (const auto& [t, tm] : m.per_target) check_model(tm);
  }

  const double floor = std::min(kMinFoundSeconds, cap_seconds);
  std::vector<TrialRecord> records;
  records.reserve(models.size() * targets.size() * static_cast<std::size_t>(trials));
  for (const auto& m : models) {
    const auto fuzzer_seed = rng::derive(rng_seed, rng::hash_label(m.fuzzer_id));
    for (const auto& target : targets) {
      const auto& tm = m.model_for(target);
      const auto target_seed = rng::derive(fuzzer_seed, rng::hash_label(target));
      for (int trial = 0; trial < trials; ++trial) {
        rng::Stream stream(rng::derive(target_seed, static_cast<std::uint64_t>(trial)));
        TrialRecord r{m.fuzzer_id, target, seed_set, trial, std::nullopt, cap_seconds};
        if (stream.uniform() < tm.detection_probability)
          r.found_at = std::clamp(draw_time(tm.time, stream), floor, cap_seconds);
        records.push_back(std::move(r));
      }
    }
  }
  return ExperimentMatrix(std::move(records));
}

std::vector<std::string> target_names(int count) {
  std::vector<std::string> out;
  const int width = count >= 100 ? static_cast<int>(std::to_string(count).size()) : 2;
  for (int i = 1; i <= count; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "T%0*d", width, i);
    out.emplace_back(buf);
  }
  return out;
}

namespace {

constexpr double kHour = 3600.0;

FuzzerModel model(std::string id, double p, TimeDistribution time) {
  return {std::move(id), {p, time}, {}};
}

}  // namespace

std::vector<Scenario> scenario_library() {
  return {
      {"dominant",
       "one fuzzer finds every bug within minutes; rivals rarely find it at all",
       {model("dominant", 1.0, LogNormal{std::log(600.0), 0.5}),
        model("rival_a", 0.20, LogNormal{std::log(6 * kHour), 0.8}),
        model("rival_b", 0.15, LogNormal{std::log(8 * kHour), 0.8}),
        model("rival_c", 0.10, LogNormal{std::log(10 * kHour), 0.8})},
       "dominant"},
      // Sixty pairwise tests per matrix: the detection rate is kept low enough
      // that a spurious verdict anywhere stays rare.
      {"indistinguishable",
       "identical models for every fuzzer; bugs are rarely found",
       {model("fuzz_a", 0.01, LogNormal{std::log(12 * kHour), 0.5}),
        model("fuzz_b", 0.01, LogNormal{std::log(12 * kHour), 0.5}),
        model("fuzz_c", 0.01, LogNormal{std::log(12 * kHour), 0.5})},
       ""},
      {"late-bloomer",
       "one fuzzer always finds the bug, but only after twelve hours",
       {model("late_bloomer", 1.0, Uniform{12 * kHour, 16 * kHour}),
        model("sprinter", 1.0, Uniform{600.0, 1800.0}),
        model("plodder", 0.25, Uniform{300.0, 1800.0})},
       "late_bloomer"},
      {"flaky",
       "identical fuzzers that find each bug in about half of the trials",
       {model("flaky_a", 0.5, LogNormal{std::log(4 * kHour), 1.0}),
        model("flaky_b", 0.5, LogNormal{std::log(4 * kHour), 1.0}),
        model("flaky_c", 0.5, LogNormal{std::log(4 * kHour), 1.0})},
       ""},
  };
}

const Scenario& scenario(const std::string& name) {
  static const std::vector<Scenario> library = scenario_library();
  for (const auto& s : library)
    if (s.name == name) return s;
  throw InvalidArgument("unknown scenario '" + name + "'");
}

// ---------------------------------------------------------------------------
// JSON

namespace {

double number_at(const json& j, const std::string& where, const char* field) {
  auto it = j.find(field);
  if (it == j.end()) throw SchemaError(where + "." + field, "missing field");
  if (!it->is_number()) throw SchemaError(where + "." + field, "expected a number");
  return it->get<double>();
}

TimeDistribution time_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where, "expected an object");
  auto kind = j.value("kind", std::string());
  if (kind == "constant") return Constant{number_at(j, where, "value")};
  if (kind == "uniform") return Uniform{number_at(j, where, "lo"), number_at(j, where, "hi")};
  if (kind == "lognormal")
    return LogNormal{number_at(j, where, "mu"), number_at(j, where, "sigma")};
  throw SchemaError(where + ".kind", "expected constant, uniform or lognormal");
}

TargetModel target_model_from_json(const json& j, const std::string& where) {
  TargetModel m;
  m.detection_probability = number_at(j, where, "detection_probability");
  if (!j.contains("time")) throw SchemaError(where + ".time", "missing field");
  m.time = time_from_json(j["time"], where + ".time");
  check_model(m);
  return m;
}

json time_to_json(const TimeDistribution& d) {
  return std::visit(
      [](const auto& v) -> json {
        using D = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<D, Constant>)
          return {{"kind", "constant"}, {"value", v.value}};
        else if constexpr (std::is_same_v<D, Uniform>)
          return {{"kind", "uniform"}, {"lo", v.lo}, {"hi", v.hi}};
        else
          return {{"kind", "lognormal"}, {"mu", v.mu}, {"sigma", v.sigma}};
      },
      d);
}

}  // namespace

std::vector<FuzzerModel> models_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("", std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("models") || !doc["models"].is_array())
    throw SchemaError("models", "expected an array");
  std::vector<FuzzerModel> out;
  for (std::size_t i = 0; i < doc["models"].size(); ++i) {
    const auto& j = doc["models"][i];
    const std::string where = "models[" + std::to_string(i) + "]";
    if (!j.is_object()) throw SchemaError(where, "expected an object");
    if (!j.contains("fuzzer") || !j["fuzzer"].is_string())
      throw SchemaError(where + ".fuzzer", "expected a string");
    FuzzerModel m;
    m.fuzzer_id = j["fuzzer"].get<std::string>();
    m.default_model = target_model_from_json(j, where);
    if (j.contains("targets")) {
      if (!j["targets"].is_object()) throw SchemaError(where + ".targets", "expected an object");
      for (const auto& [t, tj] : j["targets"].items())
        m.per_target[t] = target_model_from_json(tj, where + ".targets." + t);
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::string models_to_json(const std::vector<FuzzerModel>& models) {
  json arr = json::array();
  for (const auto& m : models) {
    json j = {{"fuzzer", m.fuzzer_id},
              {"detection_probability", m.default_model.detection_probability},
              {"time", time_to_json(m.default_model.time)}};
    if (!m.per_target.empty()) {
      json targets = json::object();
      for (const auto& [t, tm] : m.per_target)
        targets[t] = {{"detection_probability", tm.detection_probability},
                      {"time", time_to_json(tm.time)}};
      j["targets"] = std::move(targets);
    }
    arr.push_back(std::move(j));
  }
  return json{{"models", std::move(arr)}}.dump(1) + "\n";
}

}  // namespace senf::sim
