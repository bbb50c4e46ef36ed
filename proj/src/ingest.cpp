#include "sockscope/ingest.hpp"

#include <fcntl.h>
#include <openssl/evp.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sockscope/archive.hpp"
#include "sockscope/trace_io.hpp"

namespace sockscope {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 15];
  }
  return out;
}

bool has_raw_global_address(const std::vector<TraceEvent>& events) {
  auto raw_global = [](const std::optional<NetAddress>& a) {
    if (!a || !a->is_ip()) return false;
    if (a->classify_bits() != AddressClass::global) return false;
    return std::any_of(a->bits.begin(), a->bits.end(), [](std::uint8_t b) { return b != 0; });
  };
  for (const auto& e : events) {
    if (const auto* a = std::get_if<AddrArgs>(&e.args); a && raw_global(a->addr)) return true;
    if (const auto* io = std::get_if<IoArgs>(&e.args); io && raw_global(io->addr)) return true;
  }
  return false;
}

ValidatedUpload validate_upload(std::string_view archive, std::size_t max_inflated) {
  std::vector<ArchiveEntry> entries;
  try {
    entries = read_tar(gzip_decompress(archive, max_inflated));
  } catch (const ArchiveError& e) {
    throw UploadRejected(std::string("archive: ") + e.what());
  }
  ValidatedUpload v;
  std::set<std::string> names;
  const ArchiveEntry* meta = nullptr;
  for (const auto& e : entries) {
    if (!names.insert(e.name).second) throw UploadRejected("archive: duplicate entry '" + e.name + "'");
    if (e.name == "meta.json") {
      meta = &e;
    } else if (events_file_pid(e.name) < 0) {
      throw UploadRejected("archive: unexpected file '" + e.name + "'");
    }
  }
  if (!meta) throw UploadRejected("archive: missing meta.json");
  try {
    v.meta = meta_from_json(meta->data);
  } catch (const std::exception& e) {
    throw UploadRejected(std::string("meta.json: ") + e.what());
  }
  if (v.meta.salt_fingerprint) {
    const auto& fp = *v.meta.salt_fingerprint;
    bool ok = fp.size() == 8 && std::all_of(fp.begin(), fp.end(), [](char c) {
                return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
              });
    if (!ok) throw UploadRejected("meta.json: salt_fp must be 8 lowercase hex digits");
  }
  for (const auto& e : entries) {
    if (&e != meta) {
      std::vector<TraceEvent> events;
      try {
        events = parse_trace(std::string_view(e.data));
      } catch (const std::exception& ex) {
        throw UploadRejected(e.name + ": " + ex.what());
      }
      if (!v.meta.salt_fingerprint && has_raw_global_address(events)) {
        throw UploadRejected(e.name + ": global IP address in a trace without salt_fp (not anonymized)");
      }
      v.event_count += events.size();
    }
    v.files.emplace_back(e.name, e.data);
  }
  return v;
}

std::string stored_trace_to_json(const StoredTrace& t) {
  json j = {{"trace_id", t.trace_id},
            {"received_at", t.received_at},
            {"event_count", t.event_count},
            {"byte_size", t.byte_size},
            {"meta", json::parse(meta_to_json(t.meta))}};
  return j.dump();
}

StoredTrace stored_trace_from_json(std::string_view line) {
  auto j = json::parse(line);
  StoredTrace t;
  t.trace_id = j.at("trace_id").get<std::string>();
  t.received_at = j.at("received_at").get<std::string>();
  t.event_count = j.at("event_count").get<std::uint64_t>();
  t.byte_size = j.at("byte_size").get<std::uint64_t>();
  t.meta = meta_from_json(j.at("meta").dump());
  if (t.trace_id.size() != 64) throw Error("bad trace id");
  return t;
}

namespace {

class Fd {
public:
  explicit Fd(int fd) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() {
    if (fd_ >= 0) ::close(fd_);
  }
  int get() const { return fd_; }

private:
  int fd_;
};

void write_all(int fd, std::string_view data, const fs::path& path) {
  while (!data.empty()) {
    ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw StorageError("write " + path.string() + ": " + std::strerror(errno));
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

void write_file_synced(const fs::path& path, std::string_view data) {
  Fd fd(::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644));
  if (fd.get() < 0) throw StorageError("open " + path.string() + ": " + std::strerror(errno));
  write_all(fd.get(), data, path);
  if (::fsync(fd.get()) != 0) throw StorageError("fsync " + path.string() + ": " + std::strerror(errno));
}

void sync_dir(const fs::path& dir) {
  Fd fd(::open(dir.c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC));
  if (fd.get() >= 0) ::fsync(fd.get());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw StorageError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string now_rfc3339_us() {
  auto now = std::chrono::system_clock::now();
  auto us = std::chrono::duration_cast<std::chrono::microseconds>(now.time_since_epoch()).count();
  std::time_t secs = static_cast<std::time_t>(us / 1000000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[40];
  std::size_t n = std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  std::snprintf(buf + n, sizeof buf - n, ".%06lldZ", static_cast<long long>(us % 1000000));
  return buf;
}

std::atomic<std::uint64_t> staging_counter{0};

}  // namespace

TraceStore::TraceStore(fs::path root, std::size_t max_upload) : root_(std::move(root)), max_upload_(max_upload) {
  std::error_code ec;
  fs::create_directories(root_ / "store", ec);
  fs::create_directories(root_ / "tmp", ec);
  if (ec) throw StorageError("cannot create store under " + root_.string() + ": " + ec.message());
  auto probe = root_ / "tmp" / ".probe";
  {
    Fd fd(::open(probe.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644));
    if (fd.get() < 0) throw StorageError(root_.string() + " is not writable: " + std::strerror(errno));
  }
  fs::remove(probe, ec);
  recover();
}

fs::path TraceStore::trace_dir(const std::string& id) const { return root_ / "store" / id.substr(0, 2) / id; }

void TraceStore::recover() {
  std::error_code ec;
  for (const auto& de : fs::directory_iterator(root_ / "tmp")) fs::remove_all(de.path(), ec);

  const auto index = root_ / "index.jsonl";
  bool rewrite = false;
  if (fs::exists(index)) {
    std::string text = slurp(index);
    std::size_t pos = 0;
    while (pos < text.size()) {
      auto nl = text.find('\n', pos);
      if (nl == std::string::npos) {
        rewrite = true;  // torn final line
        break;
      }
      try {
        auto t = stored_trace_from_json(std::string_view(text).substr(pos, nl - pos));
        if (!by_id_.contains(t.trace_id) && fs::exists(trace_dir(t.trace_id) / "record.json")) {
          by_id_[t.trace_id] = entries_.size();
          entries_.push_back(std::move(t));
        } else {
          rewrite = true;
        }
      } catch (const std::exception&) {
        rewrite = true;
      }
      pos = nl + 1;
    }
  }

  // Complete directories the index lost (crash between rename and append).
  std::vector<fs::path> dirs;
  for (const auto& shard : fs::directory_iterator(root_ / "store")) {
    if (!shard.is_directory()) continue;
    for (const auto& d : fs::directory_iterator(shard.path())) dirs.push_back(d.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) {
    auto id = d.filename().string();
    if (by_id_.contains(id)) continue;
    try {
      auto t = stored_trace_from_json(slurp(d / "record.json"));
      if (t.trace_id != id) throw Error("record does not match directory");
      by_id_[id] = entries_.size();
      entries_.push_back(std::move(t));
      rewrite = true;
    } catch (const std::exception&) {
      fs::remove_all(d, ec);
    }
  }

  if (rewrite) {
    std::string body;
    for (const auto& t : entries_) body += stored_trace_to_json(t) + "\n";
    auto tmp = root_ / "tmp" / "index.jsonl";
    write_file_synced(tmp, body);
    fs::rename(tmp, index);
    sync_dir(root_);
  }
  for (const auto& t : entries_) last_received_ = std::max(last_received_, t.received_at);
}

std::string TraceStore::next_received_at() {
  auto now = now_rfc3339_us();
  if (now <= last_received_) {
    // Same microsecond, or the clock stepped back: keep the order strict.
    auto us = std::stoll(last_received_.substr(20, 6)) + 1;
    now = last_received_;
    if (us < 1000000) {
      char buf[24];
      std::snprintf(buf, sizeof buf, "%06lld", static_cast<long long>(us));
      now.replace(20, 6, buf);
    }
  }
  last_received_ = now;
  return now;
}

void TraceStore::append_index(const StoredTrace& t) {
  const auto index = root_ / "index.jsonl";
  Fd fd(::open(index.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644));
  if (fd.get() < 0) throw StorageError("open index: " + std::string(std::strerror(errno)));
  write_all(fd.get(), stored_trace_to_json(t) + "\n", index);
  if (::fsync(fd.get()) != 0) throw StorageError("fsync index: " + std::string(std::strerror(errno)));
}

TraceStore::PutResult TraceStore::put(std::string_view archive) {
  if (archive.size() > max_upload_) {
    throw UploadRejected("archive of " + std::to_string(archive.size()) + " bytes exceeds the " +
                         std::to_string(max_upload_) + " byte limit");
  }
  const auto id = sha256_hex(archive);
  {
    std::lock_guard lock(mu_);
    if (by_id_.contains(id)) return {id, false};
  }
  auto v = validate_upload(archive, max_upload_ * 4);

  std::lock_guard lock(mu_);
  if (by_id_.contains(id)) return {id, false};

  StoredTrace rec;
  rec.trace_id = id;
  rec.meta = v.meta;
  rec.event_count = v.event_count;
  rec.byte_size = archive.size();
  rec.received_at = next_received_at();

  const auto staging = root_ / "tmp" / (id + "." + std::to_string(::getpid()) + "." +
                                        std::to_string(staging_counter.fetch_add(1)));
  const auto final_dir = trace_dir(id);
  try {
    fs::create_directories(staging);
    write_file_synced(staging / "archive.tar.gz", archive);
    for (const auto& [name, data] : v.files) write_file_synced(staging / name, data);
    write_file_synced(staging / "record.json", stored_trace_to_json(rec) + "\n");
    sync_dir(staging);
    fs::create_directories(final_dir.parent_path());
    fs::rename(staging, final_dir);
    sync_dir(final_dir.parent_path());
    append_index(rec);
  } catch (const std::exception& e) {
    std::error_code ec;
    fs::remove_all(staging, ec);
    if (!fs::exists(final_dir / "record.json", ec)) {
      throw StorageError(std::string("storing trace failed: ") + e.what());
    }
    // The directory landed; a restart will index it. Serve it now as well.
  }
  by_id_[id] = entries_.size();
  entries_.push_back(std::move(rec));
  return {id, true};
}

std::vector<StoredTrace> TraceStore::list(const std::optional<std::string>& app) const {
  std::vector<StoredTrace> out;
  {
    std::lock_guard lock(mu_);
    for (const auto& t : entries_) {
      if (!app || t.meta.app_name == *app) out.push_back(t);
    }
  }
  std::sort(out.begin(), out.end(), [](const StoredTrace& a, const StoredTrace& b) {
    return std::tie(a.received_at, a.trace_id) > std::tie(b.received_at, b.trace_id);
  });
  return out;
}

std::optional<StoredTrace> TraceStore::find(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = by_id_.find(id);
  if (it == by_id_.end()) return std::nullopt;
  return entries_[it->second];
}

bool TraceStore::has_app(const std::string& app) const {
  std::lock_guard lock(mu_);
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& t) { return t.meta.app_name == app; });
}

Trace TraceStore::load(const std::string& id) const {
  if (!find(id)) throw Error("unknown trace " + id);
  return load_trace(trace_dir(id), id);
}

std::string TraceStore::archive(const std::string& id) const {
  if (!find(id)) throw Error("unknown trace " + id);
  return slurp(trace_dir(id) / "archive.tar.gz");
}

std::uint64_t TraceStore::version() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

}  // namespace sockscope
