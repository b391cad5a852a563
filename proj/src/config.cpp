#include "senf/config.hpp"

#include <cmath>

#include "senf/error.hpp"

namespace senf {

int threshold_percent(EffectThreshold t) {
  switch (t) {
    case EffectThreshold::none: return 50;
    case EffectThreshold::small: return 56;
    case EffectThreshold::medium: return 64;
    case EffectThreshold::large: return 71;
  }
  return 50;
}

double threshold_value(EffectThreshold t) { return threshold_percent(t) / 100.0; }

const char* to_string(EffectThreshold t) {
  switch (t) {
    case EffectThreshold::none: return "none";
    case EffectThreshold::small: return "small";
    case EffectThreshold::medium: return "medium";
    case EffectThreshold::large: return "large";
  }
  return "?";
}

EffectThreshold parse_effect_threshold(const std::string& text) {
  if (text == "none") return EffectThreshold::none;
  if (text == "small" || text == "0.56") return EffectThreshold::small;
  if (text == "medium" || text == "0.64") return EffectThreshold::medium;
  if (text == "large" || text == "0.71") return EffectThreshold::large;
  throw InvalidArgument("unknown effect threshold '" + text +
                        "' (none, small|0.56, medium|0.64, large|0.71)");
}

const char* to_string(TestKind kind) {
  return kind == TestKind::interval ? "interval" : "dichotomous";
}

TestKind parse_test_kind(const std::string& text) {
  if (text == "interval") return TestKind::interval;
  if (text == "dichotomous") return TestKind::dichotomous;
  throw InvalidArgument("unknown test kind '" + text + "' (interval, dichotomous)");
}

void StudyConfig::check() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must be in (0, 1)");
  if (exact_size_limit < 0 || exact_size_limit > stats::kMaxExactSize)
    throw InvalidArgument("exact_size_limit must be in [0, " +
                          std::to_string(stats::kMaxExactSize) + "]");
  if (odds_ratio_threshold &&
      !(std::isfinite(*odds_ratio_threshold) && *odds_ratio_threshold >= 1.0))
    throw InvalidArgument("odds_ratio_threshold must be >= 1");
}

}  // namespace senf
