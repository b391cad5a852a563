#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace senf {

// One fuzzer x target x seed-set x trial outcome.  An empty found_at means
// the bug was not found before cap_seconds elapsed.
struct TrialRecord {
  std::string fuzzer;
  std::string target;
  std::string seed_set;
  int trial = 0;
  std::optional<double> found_at;
  double cap_seconds = 0.0;

  bool found() const noexcept { return found_at.has_value(); }

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

struct RecordKey {
  std::string fuzzer;
  std::string target;
  std::string seed_set;
  int trial = 0;

  friend auto operator<=>(const RecordKey&, const RecordKey&) = default;
};

RecordKey key_of(const TrialRecord& r);

// Identifies the trials of one fuzzer on one target under one seed set.
struct GroupKey {
  std::string fuzzer;
  std::string target;
  std::string seed_set;

  friend auto operator<=>(const GroupKey&, const GroupKey&) = default;
};

// Returns a description of the first per-record invariant the record
// breaks, or nullopt if it is well formed.
std::optional<std::string> record_problem(const TrialRecord& r);

// The full results store.  Records are kept in canonical key order, so two
// matrices built from the same records in any order compare equal.  The
// matrix is immutable once constructed.
class ExperimentMatrix {
 public:
  ExperimentMatrix() = default;
  explicit ExperimentMatrix(std::vector<TrialRecord> records);

  std::span<const TrialRecord> records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  std::vector<std::string> fuzzers() const;
  std::vector<std::string> targets() const;
  std::vector<std::string> seed_sets() const;
  // Targets that have at least one record under `seed_set`.
  std::vector<std::string> targets(const std::string& seed_set) const;
  // Fuzzers with at least one trial on (target, seed_set).
  std::vector<std::string> fuzzers_on(const std::string& target,
                                      const std::string& seed_set) const;

  // Records of one group, ordered by trial index.
  std::vector<const TrialRecord*> group(const GroupKey& key) const;
  // All groups, each with its records ordered by trial index.
  std::map<GroupKey, std::vector<const TrialRecord*>> groups() const;

  friend bool operator==(const ExperimentMatrix&,
                         const ExperimentMatrix&) = default;

 private:
  std::vector<TrialRecord> records_;
};

// ---------------------------------------------------------------------------
// Ingestion and persistence.

// CSV header: fuzzer,target,seed_set,trial,found_at_seconds,cap_seconds
// with `NA` as the not-found sentinel.  Throws MalformedRow, DuplicateKey,
// SchemaError (bad header) or IoError.
ExperimentMatrix ingest_csv(const std::filesystem::path& path);
ExperimentMatrix parse_csv(const std::string& text);

// JSON: {"records":[{"fuzzer":..,"target":..,"seed_set":..,"trial":..,
//   "outcome":"found"|"not_found","found_at_seconds":..,"cap_seconds":..}]}
ExperimentMatrix ingest_json(const std::filesystem::path& path);
ExperimentMatrix parse_json(const std::string& text);

std::string to_json_string(const ExperimentMatrix& matrix);
std::string to_csv_string(const ExperimentMatrix& matrix);

// Writes the JSON form via a temporary file and rename.
void save(const ExperimentMatrix& matrix, const std::filesystem::path& path);
ExperimentMatrix load(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Validation.

enum class Severity { warning, error };

enum class IssueKind {
  duplicate_key,
  invalid_record,
  mixed_cap,
  missing_fuzzer,
  unequal_trials,
  few_trials,
};

const char* to_string(IssueKind kind);
const char* to_string(Severity severity);

struct ValidationIssue {
  Severity severity;
  IssueKind kind;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool empty() const noexcept { return issues.empty(); }
  bool has_errors() const;
  std::size_t count(IssueKind kind) const;
};

inline constexpr int kRecommendedTrials = 30;

ValidationReport validate(const ExperimentMatrix& matrix);

}  // namespace senf
