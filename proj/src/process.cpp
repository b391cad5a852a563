#include "process.hpp"

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>

#include "senf/error.hpp"

extern char** environ;

namespace senf::harness::detail {

namespace {

ExitStatus decode(int status) {
  ExitStatus s;
  if (WIFSIGNALED(status)) {
    s.signaled = true;
    s.signal = WTERMSIG(status);
  } else if (WIFEXITED(status)) {
    s.exit_code = WEXITSTATUS(status);
  }
  return s;
}

class SpawnAttrs {
 public:
  SpawnAttrs() {
    posix_spawnattr_init(&attr_);
    posix_spawn_file_actions_init(&actions_);
  }
  ~SpawnAttrs() {
    posix_spawn_file_actions_destroy(&actions_);
    posix_spawnattr_destroy(&attr_);
  }
  posix_spawnattr_t attr_;
  posix_spawn_file_actions_t actions_;
};

}  // namespace

Child::Child(const std::vector<std::string>& argv, const SpawnOptions& options) {
  if (argv.empty()) throw HarnessError("empty command");
  SpawnAttrs sa;
  // New process group so the fuzzer and anything it forks can be killed together.
  posix_spawnattr_setpgroup(&sa.attr_, 0);
  sigset_t defaults;
  sigemptyset(&defaults);
  sigaddset(&defaults, SIGPIPE);
  sigaddset(&defaults, SIGINT);
  sigaddset(&defaults, SIGTERM);
  posix_spawnattr_setsigdefault(&sa.attr_, &defaults);
  sigset_t empty;
  sigemptyset(&empty);
  posix_spawnattr_setsigmask(&sa.attr_, &empty);
  posix_spawnattr_setflags(&sa.attr_,
                           POSIX_SPAWN_SETPGROUP | POSIX_SPAWN_SETSIGDEF | POSIX_SPAWN_SETSIGMASK);

  const std::string in = options.stdin_path.empty() ? "/dev/null" : options.stdin_path.string();
  const std::string out =
      options.output_path.empty() ? "/dev/null" : options.output_path.string();
  posix_spawn_file_actions_addopen(&sa.actions_, STDIN_FILENO, in.c_str(), O_RDONLY, 0);
  posix_spawn_file_actions_addopen(&sa.actions_, STDOUT_FILENO, out.c_str(),
                                   O_WRONLY | O_CREAT | O_APPEND, 0644);
  posix_spawn_file_actions_adddup2(&sa.actions_, STDOUT_FILENO, STDERR_FILENO);
  const std::string cwd = options.cwd.string();
  if (!cwd.empty()) posix_spawn_file_actions_addchdir_np(&sa.actions_, cwd.c_str());

  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  const int rc = options.search_path
                     ? posix_spawnp(&pid_, args[0], &sa.actions_, &sa.attr_, args.data(), environ)
                     : posix_spawn(&pid_, args[0], &sa.actions_, &sa.attr_, args.data(), environ);
  if (rc != 0) {
    pid_ = -1;
    throw HarnessError("cannot spawn " + argv[0] + ": " + std::strerror(rc));
  }
}

Child::~Child() {
  // Also sweeps up group members that outlived the leader.
  if (pid_ > 0) kill_group();
}

std::optional<ExitStatus> Child::poll() {
  if (status_) return status_;
  int status = 0;
  pid_t r;
  do {
    r = ::waitpid(pid_, &status, WNOHANG);
  } while (r < 0 && errno == EINTR);
  if (r == pid_) status_ = decode(status);
  return status_;
}

std::optional<ExitStatus> Child::wait_until(std::chrono::steady_clock::time_point deadline) {
  auto pause = std::chrono::microseconds(500);
  while (true) {
    if (auto s = poll()) return s;
    const auto now = std::chrono::steady_clock::now();
    if (now >= deadline) return std::nullopt;
    std::this_thread::sleep_for(
        std::min<std::chrono::steady_clock::duration>(pause, deadline - now));
    pause = std::min(pause * 2, std::chrono::microseconds(20000));
  }
}

void Child::kill_group() {
  if (pid_ <= 0) return;
  ::kill(-pid_, SIGKILL);
  if (!status_) {
    int status = 0;
    pid_t r;
    do {
      r = ::waitpid(pid_, &status, 0);
    } while (r < 0 && errno == EINTR);
    if (r == pid_) status_ = decode(status);
    else status_ = ExitStatus{true, SIGKILL, 0};
  }
}

}  // namespace senf::harness::detail
