#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sockscope/error.hpp"
#include "sockscope/privacy.hpp"

namespace sockscope {

/// The command could not be started. No trace directory is left behind
/// when the command was not found.
class LaunchError : public Error {
public:
  using Error::Error;
};

struct LaunchOptions {
  std::optional<std::filesystem::path> out_dir;  // default: ./sockscope-traces/<app>-<stamp>
  std::optional<Salt> salt;                      // default: fresh random salt
  bool opt_out = false;
  std::optional<std::filesystem::path> preload;  // default: find_preload_library()
};

struct LaunchResult {
  std::filesystem::path trace_dir;
  int exit_code = 0;  // 128 + signal when the child was killed
};

/// PATH lookup, or the name itself when it contains a slash.
std::optional<std::filesystem::path> resolve_command(const std::string& name);

/// $SOCKSCOPE_PRELOAD, then next to the running executable, then the build tree.
std::filesystem::path find_preload_library();

/// Writes meta.json and an empty events file, runs argv with the interposer
/// preloaded and waits for it.
LaunchResult run_traced(const std::vector<std::string>& argv, const LaunchOptions& options);

}  // namespace sockscope
