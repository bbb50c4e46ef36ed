#include "sockscope/corpus.hpp"

#include <algorithm>
#include <exception>

#include "sockscope/error.hpp"
#include "sockscope/trace_io.hpp"

namespace sockscope {

namespace fs = std::filesystem;

std::size_t Trace::event_count() const {
  std::size_t n = 0;
  for (const auto& p : processes) n += p.events.size();
  return n;
}

Trace make_trace(std::string id, TraceMeta meta, std::vector<ProcessTrace> processes,
                 const LoadOptions& options) {
  Trace t;
  t.id = std::move(id);
  t.meta = std::move(meta);
  std::sort(processes.begin(), processes.end(),
            [](const ProcessTrace& a, const ProcessTrace& b) { return a.pid < b.pid; });
  std::uint64_t next_id = 0;
  for (auto& p : processes) {
    if (options.collapse_twins) p.events = collapse_twins(p.events);
    auto set = build_lifecycles(p.events, p.pid, next_id);
    next_id += set.lifecycles.size();
    for (auto& l : set.lifecycles) t.lifecycles.push_back(std::move(l));
    for (auto& e : set.unattributed) t.unattributed.push_back(std::move(e));
  }
  t.processes = std::move(processes);
  return t;
}

Trace load_trace(const fs::path& dir, std::string id, const LoadOptions& options) {
  auto meta = read_meta_file(dir / "meta.json");
  std::vector<ProcessTrace> processes;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    long pid = events_file_pid(entry.path());
    if (pid < 0) continue;
    processes.push_back({pid, read_events_file(entry.path())});
  }
  return make_trace(std::move(id), std::move(meta), std::move(processes), options);
}

void Corpus::add(Trace trace) {
  for (auto& l : trace.lifecycles) l.socket_id = next_socket_id_++;
  app_index_[trace.meta.app_name].push_back(traces_.size());
  traces_.push_back(std::move(trace));
}

std::size_t Corpus::socket_count() const {
  std::size_t n = 0;
  for (const auto& t : traces_) n += t.lifecycles.size();
  return n;
}

std::size_t Corpus::event_count() const {
  std::size_t n = 0;
  for (const auto& t : traces_) n += t.event_count();
  return n;
}

std::vector<fs::path> find_trace_dirs(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw Error("not a directory: " + root.string());
  std::vector<fs::path> dirs;
  if (fs::exists(root / "meta.json")) dirs.push_back(root);
  for (fs::recursive_directory_iterator it(root, ec), end; it != end; it.increment(ec)) {
    if (ec) throw Error("cannot read " + root.string() + ": " + ec.message());
    if (it->is_directory() && fs::exists(it->path() / "meta.json")) dirs.push_back(it->path());
  }
  if (ec) throw Error("cannot read " + root.string() + ": " + ec.message());
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

Corpus load_corpus(const fs::path& root, const LoadOptions& options) {
  auto dirs = find_trace_dirs(root);
  std::vector<Trace> loaded(dirs.size());
  std::vector<std::exception_ptr> errors(dirs.size());
  const auto n = static_cast<std::ptrdiff_t>(dirs.size());

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      auto rel = fs::relative(dirs[i], root).generic_string();
      loaded[i] = load_trace(dirs[i], rel == "." ? std::string{} : rel, options);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }

  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  Corpus corpus;
  for (auto& t : loaded) corpus.add(std::move(t));
  return corpus;
}

}  // namespace sockscope
