#pragma once

#include <sys/types.h>

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace senf::harness::detail {

struct ExitStatus {
  bool signaled = false;
  int signal = 0;
  int exit_code = 0;
};

struct SpawnOptions {
  std::filesystem::path cwd;           // empty: inherit
  std::filesystem::path stdin_path;    // empty: /dev/null
  std::filesystem::path output_path;   // stdout+stderr, appended; empty: /dev/null
  bool search_path = false;            // resolve argv[0] through PATH
};

// A spawned process leading its own process group.  The destructor kills
// the whole group and reaps the leader if it is still running.
class Child {
 public:
  // Throws HarnessError when the process cannot be started.
  Child(const std::vector<std::string>& argv, const SpawnOptions& options);
  ~Child();
  Child(const Child&) = delete;
  Child& operator=(const Child&) = delete;

  pid_t pid() const noexcept { return pid_; }

  // Non-blocking; the status once the leader has exited.
  std::optional<ExitStatus> poll();
  // Blocks until exit or the deadline; nullopt on timeout.
  std::optional<ExitStatus> wait_until(std::chrono::steady_clock::time_point deadline);
  // SIGKILL to the group, then reap the leader.
  void kill_group();

 private:
  pid_t pid_ = -1;
  std::optional<ExitStatus> status_;
};

}  // namespace senf::harness::detail
