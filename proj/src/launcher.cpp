#include "sockscope/launcher.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <fstream>

#include "sockscope/host_info.hpp"
#include "sockscope/trace_io.hpp"

extern char** environ;

namespace sockscope {
namespace fs = std::filesystem;

namespace {

constexpr const char* kPreloadName = "libsockscope_preload.so";

bool executable(const fs::path& p) {
  std::error_code ec;
  return fs::is_regular_file(p, ec) && ::access(p.c_str(), X_OK) == 0;
}

fs::path default_out_dir(const std::string& app) {
  std::string stamp = utc_now_rfc3339();
  std::erase(stamp, ':');
  std::erase(stamp, '-');
  fs::path base = fs::path("sockscope-traces") / (app + "-" + stamp);
  fs::path p = base;
  for (int i = 1; fs::exists(p); ++i) p = base.string() + "." + std::to_string(i);
  return p;
}

std::vector<std::string> child_env(const fs::path& dir, const fs::path& preload, const Salt& salt,
                                   bool opt_out) {
  static constexpr std::string_view kOwned[] = {"LD_PRELOAD=", "SOCKSCOPE_OUT=", "SOCKSCOPE_SALT=",
                                                "SOCKSCOPE_OPTOUT=", "SOCKSCOPE_T0="};
  std::vector<std::string> env;
  std::string ld_preload = preload.string();
  for (char** e = environ; *e != nullptr; ++e) {
    std::string_view kv(*e);
    bool owned = false;
    for (auto prefix : kOwned) owned = owned || kv.starts_with(prefix);
    if (kv.starts_with("LD_PRELOAD=") && kv.size() > 11) ld_preload += ":" + std::string(kv.substr(11));
    if (!owned) env.emplace_back(kv);
  }
  env.push_back("LD_PRELOAD=" + ld_preload);
  env.push_back("SOCKSCOPE_OUT=" + fs::absolute(dir).string());
  env.push_back("SOCKSCOPE_SALT=" + salt.hex());
  env.push_back(std::string("SOCKSCOPE_OPTOUT=") + (opt_out ? "1" : "0"));
  env.push_back("SOCKSCOPE_T0=" + std::to_string(monotonic_ns()));
  return env;
}

std::vector<char*> c_strings(std::vector<std::string>& v) {
  std::vector<char*> out;
  for (auto& s : v) out.push_back(s.data());
  out.push_back(nullptr);
  return out;
}

}  // namespace

std::optional<fs::path> resolve_command(const std::string& name) {
  if (name.empty()) return std::nullopt;
  if (name.find('/') != std::string::npos) {
    if (executable(name)) return fs::path(name);
    return std::nullopt;
  }
  const char* path = std::getenv("PATH");
  std::string_view dirs = path != nullptr ? path : "/usr/local/bin:/usr/bin:/bin";
  while (true) {
    auto colon = dirs.find(':');
    auto dir = dirs.substr(0, colon);
    fs::path candidate = fs::path(dir.empty() ? "." : std::string(dir)) / name;
    if (executable(candidate)) return candidate;
    if (colon == std::string_view::npos) break;
    dirs.remove_prefix(colon + 1);
  }
  return std::nullopt;
}

fs::path find_preload_library() {
  if (const char* env = std::getenv("SOCKSCOPE_PRELOAD"); env != nullptr && *env != '\0') {
    if (fs::exists(env)) return fs::absolute(env);
    throw LaunchError(std::string("SOCKSCOPE_PRELOAD does not exist: ") + env);
  }
  std::error_code ec;
  fs::path self = fs::read_symlink("/proc/self/exe", ec);
  if (!ec) {
    for (const auto& dir : {self.parent_path(), self.parent_path().parent_path() / "lib"}) {
      if (fs::exists(dir / kPreloadName)) return dir / kPreloadName;
    }
  }
#ifdef SOCKSCOPE_PRELOAD_PATH
  if (fs::exists(SOCKSCOPE_PRELOAD_PATH)) return SOCKSCOPE_PRELOAD_PATH;
#endif
  throw LaunchError(std::string("cannot find ") + kPreloadName);
}

LaunchResult run_traced(const std::vector<std::string>& argv, const LaunchOptions& options) {
  if (argv.empty()) throw LaunchError("no command given");
  auto exe = resolve_command(argv.front());
  if (!exe) throw LaunchError("command not found: " + argv.front());
  fs::path preload = options.preload ? *options.preload : find_preload_library();

  Salt salt = options.salt ? *options.salt : Salt::generate();
  TraceMeta meta = describe_host(argv, salt, options.opt_out);

  LaunchResult result;
  result.trace_dir = options.out_dir ? *options.out_dir : default_out_dir(meta.app_name);
  fs::create_directories(result.trace_dir);
  if (fs::exists(result.trace_dir / "meta.json"))
    throw Error("trace directory already holds a trace: " + result.trace_dir.string());
  write_meta_file(result.trace_dir / "meta.json", meta);

  auto env = child_env(result.trace_dir, fs::absolute(preload), salt, options.opt_out);
  auto args = argv;
  auto c_env = c_strings(env);
  auto c_args = c_strings(args);
  std::string exe_path = exe->string();

  pid_t pid = ::fork();
  if (pid < 0) throw LaunchError(std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    ::execve(exe_path.c_str(), c_args.data(), c_env.data());
    _exit(127);
  }
  // The child's own file; stays empty when nothing gets traced.
  std::ofstream(result.trace_dir / events_file_name(pid), std::ios::app);

  // The child gets terminal signals too; the launcher just waits for it.
  struct sigaction ign{}, old_int{}, old_quit{};
  ign.sa_handler = SIG_IGN;
  sigaction(SIGINT, &ign, &old_int);
  sigaction(SIGQUIT, &ign, &old_quit);
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  sigaction(SIGINT, &old_int, nullptr);
  sigaction(SIGQUIT, &old_quit, nullptr);

  if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
  else if (WIFSIGNALED(status)) result.exit_code = 128 + WTERMSIG(status);
  return result;
}

}  // namespace sockscope
