#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "sockscope/ingest.hpp"

namespace sockscope {

struct ServiceConfig {
  std::filesystem::path data_dir;
  std::size_t max_upload = 64u << 20;
};

struct ReportScope {
  enum class Kind : std::uint8_t { trace, app, corpus } kind = Kind::corpus;
  std::string key;  // trace id or app name
};

/// HTTP front end of a TraceStore.
///   POST /api/traces                 gzip'd tar body -> {"trace_id": ...}
///   GET  /api/traces[?app=&limit=&after=]
///   GET  /api/traces/{id}/report
///   GET  /api/traces/{id}/archive
///   GET  /api/apps/{name}/report
///   GET  /api/corpus/report
///   GET  /healthz
class IngestService {
public:
  explicit IngestService(ServiceConfig config);
  ~IngestService();
  IngestService(const IngestService&) = delete;
  IngestService& operator=(const IngestService&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Call after bind().
  void serve();
  void stop();

  /// Report JSON for a scope, or nullopt when the scope does not exist.
  /// Cached per (scope, store version).
  std::optional<std::string> report(const ReportScope& scope);

  TraceStore& store() { return store_; }

private:
  void routes();

  TraceStore store_;
  struct Http;
  std::unique_ptr<Http> http_;
  std::mutex cache_mu_;
  std::map<std::string, std::pair<std::uint64_t, std::string>> cache_;
};

}  // namespace sockscope
