#include "sockscope/trace_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sockscope/constants.hpp"
#include "sockscope/error.hpp"

namespace sockscope {
namespace {

using nlohmann::json;

// ---- writer -------------------------------------------------------------

class Writer {
public:
  explicit Writer(std::string& out) : out_(out) {}

  void raw(std::string_view s) { out_.append(s); }

  void key(std::string_view k) {
    if (need_comma_) out_.push_back(',');
    out_.push_back('"');
    out_.append(k);
    out_.append("\":");
    need_comma_ = false;
  }

  void open() {
    out_.push_back('{');
    need_comma_ = false;
  }
  void close() {
    out_.push_back('}');
    need_comma_ = true;
  }

  template <typename Int>
  void num(Int v) {
    char buf[24];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out_.append(buf, ptr);
    need_comma_ = true;
  }

  // Names produced by the constant tables never need escaping.
  void str(std::string_view s) {
    out_.push_back('"');
    out_.append(s);
    out_.push_back('"');
    need_comma_ = true;
  }

  void str_array(const std::vector<std::string>& items) {
    out_.push_back('[');
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) out_.push_back(',');
      out_.push_back('"');
      out_.append(items[i]);
      out_.push_back('"');
    }
    out_.push_back(']');
    need_comma_ = true;
  }

  template <typename Int>
  void field(std::string_view k, Int v) {
    key(k);
    num(v);
  }

  void field_str(std::string_view k, std::string_view v) {
    key(k);
    str(v);
  }

private:
  std::string& out_;
  bool need_comma_ = false;
};

void write_addr(Writer& w, const NetAddress& a) {
  w.open();
  w.field_str("family", to_string(a.family));
  if (a.is_ip()) {
    w.field_str("addr", a.address_text());
    w.field("port", a.port);
    w.field_str("class", to_string(a.cls));
  }
  w.close();
}

void write_optval(Writer& w, const OptvalSummary& v) {
  if (std::holds_alternative<std::monostate>(v)) return;
  w.key("optval");
  w.open();
  if (auto* i = std::get_if<std::int64_t>(&v)) {
    w.field("int", *i);
  } else if (auto* tv = std::get_if<Timeval>(&v)) {
    w.field("sec", tv->sec);
    w.field("usec", tv->usec);
  } else if (auto* l = std::get_if<Linger>(&v)) {
    w.field("onoff", l->onoff);
    w.field("linger", l->seconds);
  } else if (auto* o = std::get_if<OpaqueValue>(&v)) {
    w.field("len", o->length);
  }
  w.close();
}

void write_args(Writer& w, const TraceEvent& e) {
  w.key("args");
  w.open();
  std::visit(
      [&](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, SocketArgs>) {
          w.field_str("domain", domain_name(a.domain));
          w.field_str("type", socktype_name(a.type));
          w.field("protocol", a.protocol);
          if (a.creation_flags) {
            w.key("flags");
            w.str_array(sock_flag_names(a.creation_flags));
          }
          if (a.pair) {
            w.key("sv");
            w.raw("[");
            w.num((*a.pair)[0]);
            w.raw(",");
            w.num((*a.pair)[1]);
            w.raw("]");
          }
        } else if constexpr (std::is_same_v<T, AddrArgs>) {
          w.field("fd", a.fd);
          if (a.addr) {
            w.key("addr");
            write_addr(w, *a.addr);
          }
          if (a.flags) {
            w.key("flags");
            w.str_array(sock_flag_names(*a.flags));
          }
        } else if constexpr (std::is_same_v<T, IoArgs>) {
          w.field("fd", a.fd);
          w.field("size", a.buf_size);
          if (a.flags) {
            w.key("flags");
            w.str_array(msg_flag_names(a.flags));
          }
          if (a.iov_count) w.field("iovcnt", *a.iov_count);
          if (a.addr) {
            w.key("addr");
            write_addr(w, *a.addr);
          }
        } else if constexpr (std::is_same_v<T, SockoptArgs>) {
          w.field("fd", a.fd);
          w.field_str("level", level_name(a.level));
          w.field_str("optname", optname_name(a.level, a.optname));
          write_optval(w, a.optval);
        } else if constexpr (std::is_same_v<T, FcntlArgs>) {
          w.field("fd", a.fd);
          w.field_str("cmd", fcntl_cmd_name(a.cmd));
          if (a.flag_word) w.field("arg", *a.flag_word);
        } else if constexpr (std::is_same_v<T, IoctlArgs>) {
          w.field("fd", a.fd);
          w.field_str("request", ioctl_request_name(a.request));
          if (a.value) w.field("arg", *a.value);
        } else if constexpr (std::is_same_v<T, PollArgs>) {
          w.field("nfds", a.nfds);
          w.field("timeout", a.timeout_ms);
        } else if constexpr (std::is_same_v<T, EpollArgs>) {
          w.field("epfd", a.epfd);
          if (a.op) w.field_str("op", epoll_op_name(*a.op));
          if (a.fd) w.field("fd", *a.fd);
          if (a.events) w.field("events", *a.events);
          if (a.maxevents) w.field("maxevents", *a.maxevents);
          if (a.timeout_ms) w.field("timeout", *a.timeout_ms);
          if (a.size_or_flags) w.field("size", *a.size_or_flags);
        } else if constexpr (std::is_same_v<T, DupArgs>) {
          w.field("oldfd", a.oldfd);
          w.field("newfd", a.newfd);
          if (a.flags) {
            w.key("flags");
            w.str_array(sock_flag_names(*a.flags));
          }
        } else if constexpr (std::is_same_v<T, FdArgs>) {
          w.field("fd", a.fd);
          if (a.arg) w.field("arg", *a.arg);
        } else if constexpr (std::is_same_v<T, SendfileArgs>) {
          w.field("out_fd", a.out_fd);
          w.field("in_fd", a.in_fd);
          w.field("count", a.count);
        }
      },
      e.args);
  w.close();
}

// ---- reader -------------------------------------------------------------

class Reader {
public:
  Reader(const json& obj, std::size_t line) : obj_(obj), line_(line) {}

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(line_, what); }

  const json& get(const char* key) const {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) fail(std::string("missing key '") + key + "'");
    return *it;
  }

  bool has(const char* key) const {
    seen_.insert(key);
    return obj_.contains(key);
  }

  // Anything not asked for is not part of the format.
  void reject_unread() const {
    for (const auto& [k, _] : obj_.items()) {
      if (!seen_.count(k)) fail("unexpected key '" + k + "'");
    }
  }

  template <typename Int>
  Int integer(const char* key) const {
    return as_int<Int>(get(key), key);
  }

  template <typename Int>
  std::optional<Int> opt_integer(const char* key) const {
    if (!has(key)) return std::nullopt;
    return as_int<Int>(obj_.at(key), key);
  }

  template <typename Int>
  Int as_int(const json& v, const char* key) const {
    if (!v.is_number_integer()) fail(std::string("key '") + key + "' must be an integer");
    if constexpr (std::is_unsigned_v<Int>) {
      if (v.is_number_unsigned()) return static_cast<Int>(v.get<std::uint64_t>());
      auto s = v.get<std::int64_t>();
      if (s < 0) fail(std::string("key '") + key + "' must be non-negative");
      return static_cast<Int>(s);
    } else {
      return static_cast<Int>(v.get<std::int64_t>());
    }
  }

  std::string string(const char* key) const {
    const auto& v = get(key);
    if (!v.is_string()) fail(std::string("key '") + key + "' must be a string");
    return v.get<std::string>();
  }

  // Symbolic value: a known name, a decimal string, or a bare integer.
  template <typename Int, typename Lookup>
  Int symbol(const char* key, Lookup lookup) const {
    const auto& v = get(key);
    if (v.is_number_integer()) return as_int<Int>(v, key);
    if (!v.is_string()) fail(std::string("key '") + key + "' must be a name");
    auto found = lookup(v.template get<std::string>());
    if (!found) fail(std::string("unknown value for '") + key + "': " + v.template get<std::string>());
    return static_cast<Int>(*found);
  }

  template <typename Lookup>
  std::optional<std::uint32_t> flags(const char* key, Lookup lookup) const {
    if (!has(key)) return std::nullopt;
    const auto& v = obj_.at(key);
    if (v.is_number_integer()) return as_int<std::uint32_t>(v, key);
    if (!v.is_array()) fail(std::string("key '") + key + "' must be an array of flag names");
    std::vector<std::string> names;
    for (const auto& item : v) {
      if (!item.is_string()) fail(std::string("key '") + key + "' must hold strings");
      names.push_back(item.get<std::string>());
    }
    auto value = lookup(names);
    if (!value) fail(std::string("unknown flag in '") + key + "'");
    return value;
  }

  const json& object() const { return obj_; }
  std::size_t line() const { return line_; }

private:
  const json& obj_;
  std::size_t line_;
  mutable std::set<std::string, std::less<>> seen_;
};

NetAddress read_addr(const json& v, std::size_t line) {
  if (!v.is_object()) throw ParseError(line, "address must be an object");
  Reader r(v, line);
  auto family = address_family_from_name(r.string("family"));
  if (!family) r.fail("unknown address family");
  if (*family == AddressFamily::unix_path || *family == AddressFamily::unspec) {
    r.reject_unread();
    return *family == AddressFamily::unix_path ? NetAddress::unix_path() : NetAddress::unspecified();
  }
  auto port = r.integer<std::int64_t>("port");
  if (port < 0 || port > 65535) r.fail("port out of range");
  auto addr = NetAddress::from_text(*family, r.string("addr"), static_cast<std::uint16_t>(port));
  if (!addr) r.fail("malformed address text");
  if (r.has("class")) {
    auto cls = address_class_from_name(r.string("class"));
    if (!cls) r.fail("unknown address class");
    addr->cls = *cls;
  }
  r.reject_unread();
  return *addr;
}

std::optional<NetAddress> opt_addr(const Reader& r, const char* key) {
  if (!r.has(key)) return std::nullopt;
  return read_addr(r.object().at(key), r.line());
}

OptvalSummary read_optval(const Reader& r) {
  if (!r.has("optval")) return std::monostate{};
  const auto& v = r.object().at("optval");
  if (!v.is_object()) r.fail("optval must be an object");
  Reader o(v, r.line());
  OptvalSummary out;
  if (v.contains("int")) {
    out = o.integer<std::int64_t>("int");
  } else if (v.contains("sec")) {
    out = Timeval{o.integer<std::int64_t>("sec"), o.integer<std::int64_t>("usec")};
  } else if (v.contains("onoff")) {
    out = Linger{o.integer<int>("onoff"), o.integer<int>("linger")};
  } else if (v.contains("len")) {
    out = OpaqueValue{o.integer<std::uint32_t>("len")};
  } else {
    r.fail("unrecognized optval summary");
  }
  o.reject_unread();
  return out;
}

FnArgs read_fields(ApiFunction fn, const Reader& r) {
  switch (arg_kind(fn)) {
    case ArgKind::socket: {
      SocketArgs a;
      a.domain = r.symbol<int>("domain", domain_value);
      a.type = r.symbol<int>("type", socktype_value);
      a.protocol = r.integer<int>("protocol");
      a.creation_flags = r.flags("flags", sock_flags_value).value_or(0);
      if (r.has("sv")) {
        const auto& sv = r.object().at("sv");
        if (!sv.is_array() || sv.size() != 2 || !sv[0].is_number_integer() ||
            !sv[1].is_number_integer())
          r.fail("sv must be a pair of integers");
        a.pair = std::array<int, 2>{sv[0].get<int>(), sv[1].get<int>()};
      }
      return a;
    }
    case ArgKind::addr: {
      AddrArgs a;
      a.fd = r.integer<int>("fd");
      a.addr = opt_addr(r, "addr");
      a.flags = r.flags("flags", sock_flags_value);
      return a;
    }
    case ArgKind::io: {
      IoArgs a;
      a.fd = r.integer<int>("fd");
      a.buf_size = r.integer<std::uint64_t>("size");
      a.flags = r.flags("flags", msg_flags_value).value_or(0);
      a.iov_count = r.opt_integer<std::uint32_t>("iovcnt");
      a.addr = opt_addr(r, "addr");
      return a;
    }
    case ArgKind::sockopt: {
      SockoptArgs a;
      a.fd = r.integer<int>("fd");
      a.level = r.symbol<int>("level", level_value);
      int level = a.level;
      a.optname = r.symbol<int>("optname", [level](std::string_view n) {
        return optname_value(level, n);
      });
      a.optval = read_optval(r);
      return a;
    }
    case ArgKind::fcntl: {
      FcntlArgs a;
      a.fd = r.integer<int>("fd");
      a.cmd = r.symbol<int>("cmd", fcntl_cmd_value);
      a.flag_word = r.opt_integer<std::int64_t>("arg");
      return a;
    }
    case ArgKind::ioctl: {
      IoctlArgs a;
      a.fd = r.integer<int>("fd");
      a.request = r.symbol<unsigned long>("request", ioctl_request_value);
      a.value = r.opt_integer<std::int64_t>("arg");
      return a;
    }
    case ArgKind::poll: {
      PollArgs a;
      a.nfds = r.integer<std::uint64_t>("nfds");
      a.timeout_ms = r.integer<std::int64_t>("timeout");
      return a;
    }
    case ArgKind::epoll: {
      EpollArgs a;
      a.epfd = r.integer<int>("epfd");
      if (r.has("op")) a.op = r.symbol<int>("op", epoll_op_value);
      a.fd = r.opt_integer<int>("fd");
      a.events = r.opt_integer<std::uint32_t>("events");
      a.maxevents = r.opt_integer<int>("maxevents");
      a.timeout_ms = r.opt_integer<std::int64_t>("timeout");
      a.size_or_flags = r.opt_integer<int>("size");
      return a;
    }
    case ArgKind::dup: {
      DupArgs a;
      a.oldfd = r.integer<int>("oldfd");
      a.newfd = r.integer<int>("newfd");
      a.flags = r.flags("flags", sock_flags_value);
      return a;
    }
    case ArgKind::fd: {
      FdArgs a;
      a.fd = r.integer<int>("fd");
      a.arg = r.opt_integer<int>("arg");
      return a;
    }
    case ArgKind::sendfile: {
      SendfileArgs a;
      a.out_fd = r.integer<int>("out_fd");
      a.in_fd = r.integer<int>("in_fd");
      a.count = r.integer<std::uint64_t>("count");
      return a;
    }
  }
  r.fail("unhandled argument family");
}

FnArgs read_args(ApiFunction fn, const json& v, std::size_t line) {
  if (!v.is_object()) throw ParseError(line, "args must be an object");
  Reader r(v, line);
  auto args = read_fields(fn, r);
  r.reject_unread();
  return args;
}

constexpr std::string_view kEventKeys[] = {"ts", "tid", "fn", "args", "ret", "err"};

}  // namespace

void append_event_json(const TraceEvent& e, std::string& out) {
  Writer w(out);
  w.open();
  w.field("ts", e.ts_us);
  w.field("tid", e.tid);
  w.field_str("fn", to_string(e.fn));
  write_args(w, e);
  w.field("ret", e.ret);
  w.field("err", e.err);
  w.close();
  out.push_back('\n');
}

std::string serialize_events(const std::vector<TraceEvent>& events) {
  std::string out;
  out.reserve(events.size() * 96);
  for (const auto& e : events) append_event_json(e, out);
  return out;
}

TraceEvent parse_event_line(std::string_view line, std::size_t line_no) {
  json obj = json::parse(line.begin(), line.end(), nullptr, false);
  if (obj.is_discarded()) throw ParseError(line_no, "malformed JSON");
  if (!obj.is_object()) throw ParseError(line_no, "event must be a JSON object");
  for (const auto& [k, _] : obj.items()) {
    bool known = false;
    for (auto key : kEventKeys) known = known || key == k;
    if (!known) throw ParseError(line_no, "unexpected key '" + k + "'");
  }
  Reader r(obj, line_no);
  TraceEvent e;
  auto name = r.string("fn");
  auto fn = api_function_from_name(name);
  if (!fn) throw UnknownFunctionError(line_no, name);
  e.fn = *fn;
  e.ts_us = r.integer<std::int64_t>("ts");
  if (e.ts_us < 0) r.fail("negative timestamp");
  e.tid = r.integer<std::int64_t>("tid");
  e.args = read_args(e.fn, r.get("args"), line_no);
  e.ret = r.integer<std::int64_t>("ret");
  e.err = r.integer<int>("err");
  return e;
}

std::vector<TraceEvent> parse_trace(std::istream& in) {
  std::vector<TraceEvent> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    events.push_back(parse_event_line(line, line_no));
  }
  return events;
}

std::vector<TraceEvent> parse_trace(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_trace(in);
}

std::vector<TraceEvent> parse_trace(std::istream& in, const TraceMeta&) { return parse_trace(in); }

std::vector<TraceEvent> read_events_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return parse_trace(in);
  } catch (const UnknownFunctionError&) {
    throw;
  } catch (const ParseError& e) {
    throw ParseError(0, path.filename().string() + ": " + e.what());
  }
}

void write_events_file(const std::filesystem::path& path, const std::vector<TraceEvent>& events) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  auto text = serialize_events(events);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("short write to " + path.string());
}

std::string meta_to_json(const TraceMeta& m) {
  json j = json::object();
  j["app"] = m.app_name;
  j["cmd"] = m.command_line;
  j["os"] = m.os_name;
  if (!m.metadata_opt_out) {
    if (m.kernel_version) j["kernel"] = *m.kernel_version;
    if (m.network_config_summary) j["netcfg"] = *m.network_config_summary;
  }
  j["tracer_version"] = m.tracer_version;
  j["started_at"] = m.started_at;
  if (m.salt_fingerprint) j["salt_fp"] = *m.salt_fingerprint;
  j["opt_out"] = m.metadata_opt_out;
  return j.dump(2) + "\n";
}

TraceMeta meta_from_json(std::string_view text) {
  json j = json::parse(text.begin(), text.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ParseError(0, "meta.json: malformed JSON");
  Reader r(j, 0);
  TraceMeta m;
  m.app_name = r.string("app");
  if (m.app_name.empty()) throw ParseError(0, "meta.json: empty app name");
  m.command_line = r.has("cmd") ? r.string("cmd") : std::string{};
  m.os_name = r.has("os") ? r.string("os") : std::string{};
  if (r.has("kernel")) m.kernel_version = r.string("kernel");
  if (r.has("netcfg")) m.network_config_summary = r.string("netcfg");
  m.tracer_version = r.has("tracer_version") ? r.string("tracer_version") : std::string{};
  m.started_at = r.has("started_at") ? r.string("started_at") : std::string{};
  if (r.has("salt_fp")) m.salt_fingerprint = r.string("salt_fp");
  if (r.has("opt_out")) {
    if (!j.at("opt_out").is_boolean()) throw ParseError(0, "meta.json: opt_out must be a bool");
    m.metadata_opt_out = j.at("opt_out").get<bool>();
  }
  if (m.metadata_opt_out && (m.kernel_version || m.network_config_summary))
    throw ParseError(0, "meta.json: opted-out trace carries kernel/netcfg");
  return m;
}

TraceMeta read_meta_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return meta_from_json(ss.str());
}

void write_meta_file(const std::filesystem::path& path, const TraceMeta& meta) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << meta_to_json(meta);
}

long events_file_pid(const std::filesystem::path& path) {
  auto name = path.filename().string();
  constexpr std::string_view prefix = "events.";
  constexpr std::string_view suffix = ".jsonl";
  if (name.size() <= prefix.size() + suffix.size()) return -1;
  if (name.compare(0, prefix.size(), prefix) != 0) return -1;
  if (name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) return -1;
  std::string_view digits(name.data() + prefix.size(), name.size() - prefix.size() - suffix.size());
  long pid = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), pid);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || pid < 0) return -1;
  return pid;
}

std::string events_file_name(long pid) { return "events." + std::to_string(pid) + ".jsonl"; }

}  // namespace sockscope
