#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "senf/stats.hpp"

namespace senf {

// Vargha-Delaney magnitude thresholds for A12.
enum class EffectThreshold { none, small, medium, large };

// Threshold in hundredths (56, 64, 71); 50 for `none`, which gates nothing.
int threshold_percent(EffectThreshold t);
double threshold_value(EffectThreshold t);
const char* to_string(EffectThreshold t);
EffectThreshold parse_effect_threshold(const std::string& text);

enum class TestKind { interval, dichotomous };

const char* to_string(TestKind kind);
TestKind parse_test_kind(const std::string& text);

struct StudyConfig {
  double alpha = 0.05;
  EffectThreshold effect_threshold = EffectThreshold::none;
  TestKind test_kind = TestKind::interval;
  stats::MwuMode mwu_mode = stats::MwuMode::automatic;
  int exact_size_limit = stats::kDefaultExactSizeLimit;
  std::uint64_t rng_seed = 0;
  // Optional magnitude gate for dichotomous verdicts: a directed win needs
  // max(OR, 1/OR) >= this value.  Unset means significance only.
  std::optional<double> odds_ratio_threshold;

  // Throws InvalidArgument when a field is out of range.
  void check() const;
};

}  // namespace senf
