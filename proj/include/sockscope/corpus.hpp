#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sockscope/lifecycle.hpp"
#include "sockscope/trace_event.hpp"

namespace sockscope {

struct ProcessTrace {
  long pid = 0;
  std::vector<TraceEvent> events;  // file order
};

/// One traced run: meta.json plus one events file per process.
struct Trace {
  std::string id;  // path relative to the corpus root, or a store id
  TraceMeta meta;
  std::vector<ProcessTrace> processes;
  std::vector<SocketLifecycle> lifecycles;
  std::vector<TraceEvent> unattributed;

  std::size_t event_count() const;
};

struct LoadOptions {
  bool collapse_twins = false;
};

/// Builds lifecycles for every process of the trace. Lifecycle ids start at 0
/// and are renumbered when the trace joins a Corpus.
Trace make_trace(std::string id, TraceMeta meta, std::vector<ProcessTrace> processes,
                 const LoadOptions& options = {});

/// Reads `dir/meta.json` and every `dir/events.<pid>.jsonl`.
Trace load_trace(const std::filesystem::path& dir, std::string id, const LoadOptions& options = {});

class Corpus {
public:
  /// Appends a trace, giving its lifecycles corpus-unique ids.
  void add(Trace trace);

  const std::vector<Trace>& traces() const { return traces_; }
  const std::map<std::string, std::vector<std::size_t>>& app_index() const { return app_index_; }

  bool empty() const { return traces_.empty(); }
  std::size_t app_count() const { return app_index_.size(); }
  std::size_t socket_count() const;
  std::size_t event_count() const;

private:
  std::vector<Trace> traces_;
  std::map<std::string, std::vector<std::size_t>> app_index_;
  std::uint64_t next_socket_id_ = 0;
};

/// Every directory under `root` (root included) holding a meta.json is a
/// trace. Traces load in parallel and join the corpus in path order.
Corpus load_corpus(const std::filesystem::path& root, const LoadOptions& options = {});

std::vector<std::filesystem::path> find_trace_dirs(const std::filesystem::path& root);

}  // namespace sockscope
