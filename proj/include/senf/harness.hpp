#pragma once

#include <chrono>
#include <filesystem>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "senf/results.hpp"

// Single-machine campaign runner: launches a fuzzer command per trial,
// watches for candidate crash inputs, confirms them by running the
// vulnerable and patched builds, and records time-to-bug.

namespace senf::harness {

enum class InputMode { stdin_pipe, file_argument };

struct CampaignSpec {
  std::string fuzzer_id;
  std::string target_id;
  std::string seed_set_id;
  // Placeholders: {workdir} {seeds} {output} {trial}.
  std::vector<std::string> launch_command;
  // Glob for candidate inputs; may use the same placeholders.  Relative
  // patterns are resolved against the trial workdir.
  std::string crash_glob;
  std::filesystem::path vulnerable_binary;
  std::filesystem::path patched_binary;
  InputMode input_mode = InputMode::file_argument;
  double cap_seconds = 86400.0;
  int trials = 30;
  int parallel_slots = 1;
  double liveness_poll_seconds = 5.0;

  std::filesystem::path seeds_dir;
  // Campaign root: work/, verified/, logs/ and the default results store.
  std::filesystem::path output_dir;
  // Defaults to output_dir / "results.json".
  std::filesystem::path results_store;
  // Exit statuses counted as a crash in addition to death by signal.
  std::set<int> crash_statuses;
  double verify_timeout_seconds = 10.0;
  int max_restarts = 3;

  std::filesystem::path store_path() const;
  // Throws InvalidArgument.
  void check() const;
};

CampaignSpec spec_from_json(const std::string& text);
CampaignSpec load_spec(const std::filesystem::path& path);

enum class Termination { found, timeout, fuzzer_error };

const char* to_string(Termination t);

struct TrialResult {
  TrialRecord record;
  std::optional<std::filesystem::path> verified_input;
  int restarts = 0;
  Termination termination = Termination::timeout;
  std::string message;
};

struct RunStatus {
  bool signaled = false;
  int signal = 0;
  int exit_code = 0;
  bool timed_out = false;
};

// Runs `binary` on one input with a wall-clock limit; the process group is
// killed on overrun.  Throws HarnessError when the binary cannot be spawned.
RunStatus run_on_input(const std::filesystem::path& binary,
                       const std::filesystem::path& input, InputMode mode,
                       double timeout_seconds);

bool is_crash(const RunStatus& status, const std::set<int>& crash_statuses);

// True iff the vulnerable build crashes on the input and the patched build
// exits normally.  An overrun counts as "did not crash" for that build.
bool verify_crash(const std::filesystem::path& input, const CampaignSpec& spec);

std::filesystem::path trial_workdir(const CampaignSpec& spec, int trial);
std::filesystem::path trial_log(const CampaignSpec& spec, int trial);
std::filesystem::path trial_archive(const CampaignSpec& spec, int trial);

// Runs one trial in a fresh workdir.  Throws HarnessError if the workdir
// already exists or the fuzzer cannot be spawned.
TrialResult run_trial(const CampaignSpec& spec, int trial_index);

// Append-only JSON results store with a single writer.  Each append
// rewrites the file through a temporary and rename, so a reader never sees
// a partial trial.
class ResultsStore {
 public:
  explicit ResultsStore(std::filesystem::path path);

  // Throws DuplicateKey if the trial key is already stored.
  void append(const TrialRecord& record);
  bool contains(const RecordKey& key) const;
  ExperimentMatrix snapshot() const;

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::vector<TrialRecord> records_;
};

struct CampaignResult {
  std::vector<TrialResult> results;  // by trial index, successful trials
  ExperimentMatrix fragment;
  std::vector<std::string> errors;
};

CampaignResult run_campaign(const CampaignSpec& spec);

}  // namespace senf::harness
