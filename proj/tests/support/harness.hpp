#pragma once

#include <atomic>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

namespace sockscope::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag = "sockscope");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

/// Untraced TCP echo server on 127.0.0.1, one thread per connection.
class EchoServer {
public:
  EchoServer();
  ~EchoServer();
  EchoServer(const EchoServer&) = delete;
  EchoServer& operator=(const EchoServer&) = delete;

  int port() const { return port_; }
  /// Bytes echoed so far across all connections.
  std::uint64_t echoed() const { return echoed_; }

private:
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> stop_{false};
  std::atomic<std::uint64_t> echoed_{0};
  std::thread acceptor_;
  std::vector<std::thread> workers_;
};

struct ProcessResult {
  int exit_code = 0;
  std::string out;
};

/// fork/exec with optional extra environment, capturing stdout.
ProcessResult run_process(const std::vector<std::string>& argv,
                          const std::vector<std::string>& extra_env = {});

/// A running child with stdout on a pipe. Killed and reaped on destruction.
class ChildProcess {
public:
  explicit ChildProcess(const std::vector<std::string>& argv, const std::vector<std::string>& extra_env = {});
  ~ChildProcess();
  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  int pid() const { return pid_; }
  /// Next stdout line without the newline; empty at EOF.
  std::string read_line();
  void signal(int sig);
  int wait();

private:
  int out_fd_ = -1;  // before pid_: the spawn in pid_'s initializer sets it
  int pid_ = -1;
  int exit_code_ = 0;
  std::string buffered_;
};

std::string read_file(const std::filesystem::path& p);

/// The single events file of a trace directory with one process.
std::filesystem::path only_events_file(const std::filesystem::path& dir);

}  // namespace sockscope::test
