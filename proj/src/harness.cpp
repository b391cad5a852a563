#include "senf/harness.hpp"

#include <fcntl.h>
#include <glob.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <regex>
#include <thread>

#include <nlohmann/json.hpp>

#include "io.hpp"
#include "process.hpp"
#include "senf/error.hpp"

namespace senf::harness {

namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

const char* to_string(Termination t) {
  switch (t) {
    case Termination::found: return "found";
    case Termination::timeout: return "timeout";
    case Termination::fuzzer_error: return "fuzzer_error";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Spec

fs::path CampaignSpec::store_path() const {
  return results_store.empty() ? output_dir / "results.json" : results_store;
}

namespace {

const std::regex& placeholder_re() {
  static const std::regex re(R"(\{([A-Za-z_]+)\})");
  return re;
}

void check_placeholders(const std::string& s) {
  for (std::sregex_iterator it(s.begin(), s.end(), placeholder_re()), end; it != end; ++it) {
    const auto name = (*it)[1].str();
    if (name != "workdir" && name != "seeds" && name != "output" && name != "trial")
      throw InvalidArgument("unknown placeholder {" + name + "} in '" + s + "'");
  }
}

void check_executable(const fs::path& p, const char* what) {
  if (p.empty()) throw InvalidArgument(std::string(what) + " is not set");
  if (::access(p.c_str(), X_OK) != 0)
    throw InvalidArgument(std::string(what) + " is not an executable file: " + p.string());
}

}  // namespace

void CampaignSpec::check() const {
  if (fuzzer_id.empty() || target_id.empty() || seed_set_id.empty())
    throw InvalidArgument("fuzzer_id, target_id and seed_set_id are required");
  if (launch_command.empty()) throw InvalidArgument("launch_command is empty");
  for (const auto& a : launch_command) check_placeholders(a);
  if (crash_glob.empty()) throw InvalidArgument("crash_glob is empty");
  check_placeholders(crash_glob);
  check_executable(vulnerable_binary, "vulnerable_binary");
  check_executable(patched_binary, "patched_binary");
  if (!std::isfinite(cap_seconds) || cap_seconds <= 0.0)
    throw InvalidArgument("cap_seconds must be positive");
  if (trials < 1) throw InvalidArgument("trials must be >= 1");
  if (parallel_slots < 1) throw InvalidArgument("parallel_slots must be >= 1");
  if (!std::isfinite(liveness_poll_seconds) || liveness_poll_seconds <= 0.0)
    throw InvalidArgument("liveness_poll_seconds must be positive");
  if (!std::isfinite(verify_timeout_seconds) || verify_timeout_seconds <= 0.0)
    throw InvalidArgument("verify_timeout_seconds must be positive");
  if (max_restarts < 0) throw InvalidArgument("max_restarts must be >= 0");
  if (output_dir.empty()) throw InvalidArgument("output_dir is required");
}

namespace {

std::string str_field(const json& j, const char* f, bool required = true) {
  auto it = j.find(f);
  if (it == j.end()) {
    if (required) throw SchemaError(f, "missing field");
    return {};
  }
  if (!it->is_string()) throw SchemaError(f, "expected a string");
  return it->get<std::string>();
}

template <class T>
T num_field(const json& j, const char* f, T fallback) {
  auto it = j.find(f);
  if (it == j.end()) return fallback;
  if constexpr (std::is_integral_v<T>) {
    if (!it->is_number_integer()) throw SchemaError(f, "expected an integer");
  } else {
    if (!it->is_number()) throw SchemaError(f, "expected a number");
  }
  return it->get<T>();
}

}  // namespace

CampaignSpec spec_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw SchemaError("", "campaign spec must be an object");
  CampaignSpec s;
  s.fuzzer_id = str_field(j, "fuzzer_id");
  s.target_id = str_field(j, "target_id");
  s.seed_set_id = str_field(j, "seed_set_id");
  if (!j.contains("launch_command") || !j["launch_command"].is_array())
    throw SchemaError("launch_command", "expected an array of strings");
  for (const auto& a : j["launch_command"]) {
    if (!a.is_string()) throw SchemaError("launch_command", "expected an array of strings");
    s.launch_command.push_back(a.get<std::string>());
  }
  s.crash_glob = str_field(j, "crash_glob");
  s.vulnerable_binary = str_field(j, "vulnerable_binary");
  s.patched_binary = str_field(j, "patched_binary");
  const auto mode = str_field(j, "input_mode", false);
  if (mode.empty() || mode == "file-argument") s.input_mode = InputMode::file_argument;
  else if (mode == "stdin") s.input_mode = InputMode::stdin_pipe;
  else throw SchemaError("input_mode", "expected \"stdin\" or \"file-argument\"");
  s.cap_seconds = num_field(j, "cap_seconds", s.cap_seconds);
  s.trials = num_field(j, "trials", s.trials);
  s.parallel_slots = num_field(j, "parallel_slots", s.parallel_slots);
  s.liveness_poll_seconds = num_field(j, "liveness_poll_seconds", s.liveness_poll_seconds);
  s.seeds_dir = str_field(j, "seeds_dir", false);
  s.output_dir = str_field(j, "output_dir", false);
  s.results_store = str_field(j, "results_store", false);
  if (j.contains("crash_statuses")) {
    if (!j["crash_statuses"].is_array()) throw SchemaError("crash_statuses", "expected an array");
    for (const auto& v : j["crash_statuses"]) {
      if (!v.is_number_integer()) throw SchemaError("crash_statuses", "expected integers");
      s.crash_statuses.insert(v.get<int>());
    }
  }
  s.verify_timeout_seconds = num_field(j, "verify_timeout_seconds", s.verify_timeout_seconds);
  s.max_restarts = num_field(j, "max_restarts", s.max_restarts);
  return s;
}

CampaignSpec load_spec(const fs::path& path) {
  auto s = spec_from_json(io::read_text(path));
  // Relative paths in the file are relative to the file itself.
  const auto base = fs::absolute(path).parent_path();
  for (auto* p : {&s.vulnerable_binary, &s.patched_binary, &s.seeds_dir, &s.output_dir,
                  &s.results_store})
    if (!p->empty() && p->is_relative()) *p = base / *p;
  return s;
}

// ---------------------------------------------------------------------------
// Differential verification

RunStatus run_on_input(const fs::path& binary, const fs::path& input, InputMode mode,
                       double timeout_seconds) {
  if (::access(binary.c_str(), X_OK) != 0)
    throw HarnessError("binary missing or not executable: " + binary.string());
  if (::access(input.c_str(), R_OK) != 0)
    throw HarnessError("input not readable: " + input.string());
  std::vector<std::string> argv{binary.string()};
  detail::SpawnOptions opts;
  if (mode == InputMode::file_argument) argv.push_back(fs::absolute(input).string());
  else opts.stdin_path = input;

  detail::Child child(argv, opts);
  const auto deadline =
      Clock::now() + std::chrono::duration_cast<Clock::duration>(
                         std::chrono::duration<double>(timeout_seconds));
  RunStatus out;
  auto status = child.wait_until(deadline);
  if (!status) {
    child.kill_group();
    out.timed_out = true;
    return out;
  }
  out.signaled = status->signaled;
  out.signal = status->signal;
  out.exit_code = status->exit_code;
  return out;
}

bool is_crash(const RunStatus& status, const std::set<int>& crash_statuses) {
  if (status.timed_out) return false;
  return status.signaled || crash_statuses.contains(status.exit_code);
}

bool verify_crash(const fs::path& input, const CampaignSpec& spec) {
  const auto vulnerable =
      run_on_input(spec.vulnerable_binary, input, spec.input_mode, spec.verify_timeout_seconds);
  if (!is_crash(vulnerable, spec.crash_statuses)) return false;
  const auto patched =
      run_on_input(spec.patched_binary, input, spec.input_mode, spec.verify_timeout_seconds);
  return !is_crash(patched, spec.crash_statuses);
}

// ---------------------------------------------------------------------------
// Trials

fs::path trial_workdir(const CampaignSpec& spec, int trial) {
  return spec.output_dir / "work" / ("trial_" + std::to_string(trial));
}

fs::path trial_log(const CampaignSpec& spec, int trial) {
  return spec.output_dir / "logs" / ("trial_" + std::to_string(trial) + ".log");
}

fs::path trial_archive(const CampaignSpec& spec, int trial) {
  return spec.output_dir / "verified" / ("trial_" + std::to_string(trial));
}

namespace {

using WallTime = std::chrono::system_clock::time_point;

class TrialLog {
 public:
  TrialLog(const fs::path& path, Clock::time_point start) : out_(path, std::ios::trunc), start_(start) {
    if (!out_) throw HarnessError("cannot open log " + path.string());
  }

  void event(const std::string& name, const std::string& detail = {}) {
    const auto now = std::chrono::system_clock::now();
    const auto t = std::chrono::system_clock::to_time_t(now);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char stamp[64];
    std::snprintf(stamp, sizeof stamp, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                  tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                  static_cast<int>(ms));
    char rel[32];
    std::snprintf(rel, sizeof rel, "+%.3fs",
                  std::chrono::duration<double>(Clock::now() - start_).count());
    out_ << stamp << ' ' << rel << ' ' << name;
    if (!detail.empty()) out_ << ' ' << detail;
    out_ << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
  Clock::time_point start_;
};

std::string substitute(const std::string& s, const CampaignSpec& spec, const fs::path& workdir,
                       int trial) {
  std::string out;
  std::size_t last = 0;
  for (std::sregex_iterator it(s.begin(), s.end(), placeholder_re()), end; it != end; ++it) {
    out.append(s, last, static_cast<std::size_t>(it->position()) - last);
    const auto name = (*it)[1].str();
    if (name == "workdir") out += workdir.string();
    else if (name == "seeds") out += spec.seeds_dir.string();
    else if (name == "output") out += (workdir / "output").string();
    else out += std::to_string(trial);
    last = static_cast<std::size_t>(it->position() + it->length());
  }
  out.append(s, last);
  return out;
}

struct FileStamp {
  WallTime born;  // birth time when the filesystem records it, else mtime
  WallTime modified;
  std::uint64_t size = 0;

  bool same_content(const FileStamp& o) const { return modified == o.modified && size == o.size; }
};

WallTime to_wall(const struct statx_timestamp& ts) {
  return WallTime(std::chrono::duration_cast<WallTime::duration>(
      std::chrono::seconds(ts.tv_sec) + std::chrono::nanoseconds(ts.tv_nsec)));
}

std::optional<FileStamp> file_stamp(const fs::path& p) {
  struct statx stx {};
  const unsigned mask = STATX_BTIME | STATX_MTIME | STATX_TYPE | STATX_SIZE;
  if (::statx(AT_FDCWD, p.c_str(), 0, mask, &stx) != 0) return std::nullopt;
  if (!S_ISREG(stx.stx_mode)) return std::nullopt;
  const auto modified = to_wall(stx.stx_mtime);
  const auto born = (stx.stx_mask & STATX_BTIME) ? to_wall(stx.stx_btime) : modified;
  return FileStamp{born, modified, stx.stx_size};
}

// File timestamps come from the kernel's coarse clock, so the launch time
// is read from the same clock.
WallTime coarse_wall_now() {
  timespec ts{};
  ::clock_gettime(CLOCK_REALTIME_COARSE, &ts);
  return WallTime(std::chrono::duration_cast<WallTime::duration>(
      std::chrono::seconds(ts.tv_sec) + std::chrono::nanoseconds(ts.tv_nsec)));
}

std::vector<fs::path> glob_paths(const std::string& pattern) {
  glob_t g{};
  std::vector<fs::path> out;
  if (::glob(pattern.c_str(), 0, nullptr, &g) == 0)
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  ::globfree(&g);
  return out;
}

}  // namespace

TrialResult run_trial(const CampaignSpec& spec, int trial_index) {
  spec.check();
  if (trial_index < 0) throw InvalidArgument("trial index must be >= 0");
  const auto workdir = trial_workdir(spec, trial_index);
  std::error_code ec;
  if (fs::exists(workdir, ec))
    throw HarnessError("workdir collision: " + workdir.string() + " already exists");
  fs::create_directories(workdir / "output", ec);
  if (ec) throw HarnessError("cannot create " + workdir.string() + ": " + ec.message());
  fs::create_directories(trial_log(spec, trial_index).parent_path(), ec);

  std::vector<std::string> argv;
  for (const auto& a : spec.launch_command)
    argv.push_back(substitute(a, spec, workdir, trial_index));
  auto pattern = substitute(spec.crash_glob, spec, workdir, trial_index);
  if (fs::path(pattern).is_relative()) pattern = (workdir / pattern).string();

  detail::SpawnOptions opts;
  opts.cwd = workdir;
  opts.output_path = workdir / "fuzzer.log";
  opts.search_path = true;

  TrialResult result;
  result.record = {spec.fuzzer_id, spec.target_id, spec.seed_set_id, trial_index, std::nullopt,
                   spec.cap_seconds};

  const auto start = Clock::now();
  const auto start_wall = coarse_wall_now();
  TrialLog log(trial_log(spec, trial_index), start);
  const auto cap = std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double>(spec.cap_seconds));
  const auto poll = std::chrono::duration_cast<Clock::duration>(
      std::chrono::duration<double>(spec.liveness_poll_seconds));

  log.event("launch", argv.front());
  auto child = std::make_unique<detail::Child>(argv, opts);
  // Candidates that failed verification.  One is retried if it changes,
  // since the fuzzer may still have been writing it when first seen.
  std::map<fs::path, FileStamp> rejected;

  while (true) {
    const auto exited = child->poll();

    // New or rewritten candidates, earliest first.
    std::vector<std::pair<WallTime, fs::path>> fresh;
    for (auto& p : glob_paths(pattern)) {
      auto stamp = file_stamp(p);
      if (!stamp) continue;
      auto it = rejected.find(p);
      if (it != rejected.end() && it->second.same_content(*stamp)) continue;
      rejected[p] = *stamp;
      fresh.emplace_back(stamp->born, std::move(p));
    }
    std::sort(fresh.begin(), fresh.end());
    for (const auto& [born, path] : fresh) {
      const double at = std::chrono::duration<double>(born - start_wall).count();
      if (at > spec.cap_seconds) continue;
      log.event("candidate", path.string());
      if (!verify_crash(path, spec)) continue;
      child->kill_group();
      const auto archive = trial_archive(spec, trial_index);
      fs::create_directories(archive, ec);
      const auto stored = archive / path.filename();
      fs::copy_file(path, stored, fs::copy_options::overwrite_existing, ec);
      if (ec) throw HarnessError("cannot archive " + path.string() + ": " + ec.message());
      // Clock granularity can put the birth time a hair before launch.
      result.record.found_at = std::clamp(at, 1e-3, spec.cap_seconds);
      result.verified_input = stored;
      result.termination = Termination::found;
      log.event("verified", stored.string());
      log.event("stop", "found");
      return result;
    }

    const auto elapsed = Clock::now() - start;
    if (elapsed >= cap) {
      child->kill_group();
      result.termination = Termination::timeout;
      log.event("stop", "timeout");
      return result;
    }

    if (exited) {
      if (result.restarts >= spec.max_restarts) {
        result.termination = Termination::fuzzer_error;
        result.message = "fuzzer exited without a verified crash after " +
                         std::to_string(result.restarts) + " restarts";
        log.event("stop", "fuzzer_error");
        return result;
      }
      ++result.restarts;
      log.event("restart", std::to_string(result.restarts));
      child = std::make_unique<detail::Child>(argv, opts);
      continue;
    }

    std::this_thread::sleep_for(std::min(poll, cap - elapsed));
  }
}

// ---------------------------------------------------------------------------
// Store and campaign

ResultsStore::ResultsStore(fs::path path) : path_(std::move(path)) {
  std::error_code ec;
  if (fs::exists(path_, ec)) {
    auto m = load(path_);
    records_.assign(m.records().begin(), m.records().end());
  }
}

bool ResultsStore::contains(const RecordKey& key) const {
  std::lock_guard lock(mu_);
  return std::any_of(records_.begin(), records_.end(),
                     [&](const TrialRecord& r) { return key_of(r) == key; });
}

void ResultsStore::append(const TrialRecord& record) {
  std::lock_guard lock(mu_);
  const auto key = key_of(record);
  if (std::any_of(records_.begin(), records_.end(),
                  [&](const TrialRecord& r) { return key_of(r) == key; }))
    throw DuplicateKey("trial " + std::to_string(record.trial) + " of " + record.fuzzer + "/" +
                       record.target + "/" + record.seed_set + " is already recorded");
  auto next = records_;
  next.push_back(record);
  save(ExperimentMatrix(next), path_);
  records_ = std::move(next);
}

ExperimentMatrix ResultsStore::snapshot() const {
  std::lock_guard lock(mu_);
  return ExperimentMatrix(records_);
}

CampaignResult run_campaign(const CampaignSpec& spec) {
  spec.check();
  std::error_code ec;
  fs::create_directories(spec.output_dir, ec);
  if (ec) throw HarnessError("cannot create " + spec.output_dir.string() + ": " + ec.message());
  ResultsStore store(spec.store_path());

  std::vector<std::optional<TrialResult>> slots(static_cast<std::size_t>(spec.trials));
  std::vector<std::string> errors(slots.size());
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < spec.trials; i = next++) {
      const auto idx = static_cast<std::size_t>(i);
      try {
        if (store.contains({spec.fuzzer_id, spec.target_id, spec.seed_set_id, i}))
          throw DuplicateKey("already recorded; refusing to re-run");
        auto r = run_trial(spec, i);
        if (r.termination == Termination::fuzzer_error) {
          errors[idx] = r.message;
          continue;
        }
        store.append(r.record);
        slots[idx] = std::move(r);
      } catch (const std::exception& e) {
        errors[idx] = e.what();
      }
    }
  };
  const int workers = std::min(spec.parallel_slots, spec.trials);
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }

  CampaignResult out;
  std::vector<TrialRecord> records;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (slots[i]) {
      records.push_back(slots[i]->record);
      out.results.push_back(std::move(*slots[i]));
    }
    if (!errors[i].empty()) out.errors.push_back("trial " + std::to_string(i) + ": " + errors[i]);
  }
  out.fragment = ExperimentMatrix(std::move(records));
  return out;
}

}  // namespace senf::harness
