#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sockscope/corpus.hpp"
#include "sockscope/error.hpp"

namespace sockscope {

/// The upload itself is unacceptable (malformed, unanonymized, too large).
class UploadRejected : public Error {
public:
  using Error::Error;
};

/// The store failed while committing. Nothing partial is left behind.
class StorageError : public Error {
public:
  using Error::Error;
};

struct StoredTrace {
  std::string trace_id;  // SHA-256 of the uploaded archive, hex
  TraceMeta meta;
  std::string received_at;  // RFC 3339, microsecond precision
  std::uint64_t event_count = 0;
  std::uint64_t byte_size = 0;

  friend bool operator==(const StoredTrace&, const StoredTrace&) = default;
};

std::string sha256_hex(std::string_view data);

/// Checks an uploaded gzip'd tar and returns its parsed content. Throws
/// UploadRejected with a diagnostic.
struct ValidatedUpload {
  TraceMeta meta;
  std::vector<std::pair<std::string, std::string>> files;  // name, bytes
  std::uint64_t event_count = 0;
};
ValidatedUpload validate_upload(std::string_view archive, std::size_t max_inflated);

/// True when an IP address with identifying bits appears in the events. Only
/// meaningful for traces that claim no salt.
bool has_raw_global_address(const std::vector<TraceEvent>& events);

/// Content-addressed trace store:
///   <root>/store/<first 2 hex>/<trace_id>/  archive.tar.gz, meta.json, events files, record.json
///   <root>/index.jsonl                       one record per committed trace
/// A trace directory is staged under <root>/tmp and renamed into place before
/// its index line is appended, so a crash leaves either nothing or a complete
/// directory. Opening the store truncates a torn final index line and indexes
/// complete directories the index does not mention.
class TraceStore {
public:
  explicit TraceStore(std::filesystem::path root, std::size_t max_upload = 64u << 20);

  struct PutResult {
    std::string trace_id;
    bool created = false;
  };
  PutResult put(std::string_view archive);

  std::vector<StoredTrace> list(const std::optional<std::string>& app = std::nullopt) const;
  std::optional<StoredTrace> find(const std::string& trace_id) const;
  bool has_app(const std::string& app) const;

  Trace load(const std::string& trace_id) const;
  std::string archive(const std::string& trace_id) const;

  /// Grows with every committed trace.
  std::uint64_t version() const;
  std::size_t max_upload() const { return max_upload_; }
  const std::filesystem::path& root() const { return root_; }

private:
  std::filesystem::path trace_dir(const std::string& trace_id) const;
  void recover();
  void append_index(const StoredTrace& t);
  std::string next_received_at();

  std::filesystem::path root_;
  std::size_t max_upload_;
  mutable std::mutex mu_;
  std::vector<StoredTrace> entries_;
  std::map<std::string, std::size_t> by_id_;
  std::string last_received_;
};

std::string stored_trace_to_json(const StoredTrace& t);
StoredTrace stored_trace_from_json(std::string_view line);

}  // namespace sockscope
