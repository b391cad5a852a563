#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "senf/results.hpp"

namespace senf::sim {

struct Constant {
  double value = 0.0;
};
struct Uniform {
  double lo = 0.0;
  double hi = 0.0;
};
// Parameters of log(seconds).
struct LogNormal {
  double mu = 0.0;
  double sigma = 0.0;
};

using TimeDistribution = std::variant<Constant, Uniform, LogNormal>;

struct TargetModel {
  double detection_probability = 0.0;
  TimeDistribution time = Constant{1.0};
};

struct FuzzerModel {
  std::string fuzzer_id;
  TargetModel default_model;
  std::map<std::string, TargetModel> per_target;  // overrides

  const TargetModel& model_for(const std::string& target) const;
};

// Throws InvalidArgument on bad probabilities or distribution parameters.
void check_model(const TargetModel& m);

// Draws below this are clamped up so found times stay strictly positive.
inline constexpr double kMinFoundSeconds = 1e-3;

ExperimentMatrix simulate(const std::vector<FuzzerModel>& models,
                          const std::vector<std::string>& targets,
                          const std::string& seed_set, int trials,
                          double cap_seconds, std::uint64_t rng_seed);

// "T01", "T02", ... (zero padded to at least two digits).
std::vector<std::string> target_names(int count);

struct Scenario {
  std::string name;
  std::string description;
  std::vector<FuzzerModel> models;
  // The fuzzer the scenario is built around, if any.
  std::string focus_fuzzer;
};

// dominant, indistinguishable, late-bloomer, flaky.
std::vector<Scenario> scenario_library();
const Scenario& scenario(const std::string& name);

// JSON model definitions: {"models":[{"fuzzer":..,"detection_probability":..,
//   "time":{"kind":"constant"|"uniform"|"lognormal",...},
//   "targets":{"T01":{...}}}]}
std::vector<FuzzerModel> models_from_json(const std::string& text);
std::string models_to_json(const std::vector<FuzzerModel>& models);

}  // namespace senf::sim
