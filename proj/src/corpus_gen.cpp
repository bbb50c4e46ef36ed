#include "sockscope/corpus_gen.hpp"

#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sockscope/privacy.hpp"
#include "sockscope/rng.hpp"
#include "sockscope/trace_io.hpp"

namespace sockscope {

namespace {

std::string join_offenders(const std::vector<std::string>& offenders) {
  std::string out = "infeasible corpus spec:";
  for (const auto& o : offenders) out += "\n  " + o;
  return out;
}

}  // namespace

GenSpecError::GenSpecError(std::vector<std::string> offenders)
    : Error(join_offenders(offenders)), offenders_(std::move(offenders)) {}

// ---- spec parsing -----------------------------------------------------------

namespace {

using nlohmann::json;

template <typename Enum, std::size_t N>
std::optional<Enum> enum_from_name(std::string_view name, const Enum (&all)[N]) {
  for (auto v : all) {
    if (to_string(v) == name) return v;
  }
  return std::nullopt;
}

constexpr SockType kSockTypes[] = {SockType::stream, SockType::dgram, SockType::other};
constexpr UdpClass kUdpClasses[] = {UdpClass::netinfo_ioctl, UdpClass::connect_no_data, UdpClass::data,
                                    UdpClass::other};
constexpr TcpClass kTcpClasses[] = {TcpClass::local_rcvtimeo_only, TcpClass::local_immediate_close,
                                    TcpClass::local_wireless_check, TcpClass::local_other,
                                    TcpClass::remote_data, TcpClass::remote_no_data};
constexpr PeerClass kPeerClasses[] = {PeerClass::loopback, PeerClass::link_local, PeerClass::remote,
                                      PeerClass::unknown};

class SpecReader {
public:
  std::vector<std::string> errors;

  void check_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> keys) {
    if (!obj.is_object()) {
      errors.push_back(std::string(where) + ": expected an object");
      return;
    }
    for (const auto& [k, _] : obj.items()) {
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
        errors.push_back(std::string(where) + ": unknown key '" + k + "'");
      }
    }
  }

  std::uint64_t count(const json& obj, const char* key, std::string_view where, std::uint64_t fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj[key];
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      errors.push_back(std::string(where) + key + ": expected a non-negative integer");
      return fallback;
    }
    return v.get<std::uint64_t>();
  }

  double number(const json& obj, const char* key, std::string_view where, double fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj[key];
    if (!v.is_number()) {
      errors.push_back(std::string(where) + key + ": expected a number");
      return fallback;
    }
    return v.get<double>();
  }

  bool boolean(const json& obj, const char* key, std::string_view where, bool fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_boolean()) {
      errors.push_back(std::string(where) + key + ": expected a boolean");
      return fallback;
    }
    return obj[key].get<bool>();
  }

  template <typename Key, typename Value, typename Convert>
  std::map<Key, Value> mapping(const json& obj, const char* key, Convert convert,
                               std::map<Key, Value> fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& m = obj[key];
    if (!m.is_object()) {
      errors.push_back(std::string(key) + ": expected an object");
      return fallback;
    }
    std::map<Key, Value> out;
    for (const auto& [name, v] : m.items()) {
      auto k = convert(name);
      if (!k) {
        errors.push_back(std::string(key) + ": unknown name '" + name + "'");
        continue;
      }
      if constexpr (std::is_same_v<Value, double>) {
        if (!v.is_number()) {
          errors.push_back(std::string(key) + "." + name + ": expected a number");
          continue;
        }
        out[*k] = v.template get<double>();
      } else {
        if (!v.is_number_integer() || v.template get<std::int64_t>() < 0) {
          errors.push_back(std::string(key) + "." + name + ": expected a non-negative integer");
          continue;
        }
        out[*k] = v.template get<std::uint64_t>();
      }
    }
    return out;
  }

  std::vector<IoCallSpec> io_calls(const json& obj, const char* key, bool send) {
    std::vector<IoCallSpec> out;
    if (!obj.contains(key)) return out;
    if (!obj[key].is_array()) {
      errors.push_back(std::string(key) + ": expected an array");
      return out;
    }
    for (std::size_t i = 0; i < obj[key].size(); ++i) {
      const auto& c = obj[key][i];
      auto where = std::string(key) + "[" + std::to_string(i) + "].";
      check_keys(c, where, {"fn", "calls", "sizes"});
      if (!c.is_object()) continue;
      IoCallSpec s;
      auto fn = c.contains("fn") && c["fn"].is_string()
                    ? api_function_from_name(c["fn"].get<std::string>())
                    : std::nullopt;
      if (!fn || (send ? !is_send_family(*fn) : !is_recv_family(*fn))) {
        errors.push_back(where + "fn: expected a " + (send ? "send" : "receive") + "-family function");
        continue;
      }
      s.fn = *fn;
      s.calls = count(c, "calls", where, 0);
      s.sizes = mapping<std::uint64_t, double>(
          c, "sizes",
          [](const std::string& n) -> std::optional<std::uint64_t> {
            std::uint64_t v = 0;
            auto [p, ec] = std::from_chars(n.data(), n.data() + n.size(), v);
            if (ec != std::errc{} || p != n.data() + n.size()) return std::nullopt;
            return v;
          },
          {});
      out.push_back(std::move(s));
    }
    return out;
  }
};

}  // namespace

CorpusGenSpec parse_gen_spec(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw GenSpecError({std::string("invalid JSON: ") + e.what()});
  }
  SpecReader r;
  CorpusGenSpec s;
  r.check_keys(j, "spec",
               {"seed", "apps", "traces_per_app", "sockets", "socket_types", "udp_classes", "tcp_classes",
                "ioctl", "send_calls", "recv_calls", "send_flags", "recv_flags", "opening_pattern",
                "closing_pattern", "tcp_info", "accepts", "multicast", "nonblock", "app_functions", "twins",
                "stamp", "opt_out"});
  if (!j.is_object()) throw GenSpecError(r.errors);

  s.seed = r.count(j, "seed", "", 0);
  s.apps = r.count(j, "apps", "", 1);
  s.traces_per_app = r.count(j, "traces_per_app", "", 1);
  s.sockets = r.count(j, "sockets", "", 0);
  s.socket_types = r.mapping<SockType, double>(
      j, "socket_types", [](const std::string& n) { return enum_from_name(n, kSockTypes); }, s.socket_types);
  s.udp_classes = r.mapping<UdpClass, double>(
      j, "udp_classes", [](const std::string& n) { return enum_from_name(n, kUdpClasses); }, s.udp_classes);
  s.tcp_classes = r.mapping<TcpClass, double>(
      j, "tcp_classes", [](const std::string& n) { return enum_from_name(n, kTcpClasses); }, s.tcp_classes);

  if (j.contains("ioctl")) {
    const auto& io = j["ioctl"];
    r.check_keys(io, "ioctl", {"total", "mix"});
    s.ioctl_total = r.count(io, "total", "ioctl.", 0);
    s.ioctl_mix = r.mapping<std::string, double>(
        io, "mix",
        [](const std::string& n) -> std::optional<std::string> {
          if (n == "other") return n;
          for (auto known : kNetinfoRequests) {
            if (known == n) return n;
          }
          return std::nullopt;
        },
        {});
  }

  s.send_calls = r.io_calls(j, "send_calls", true);
  s.recv_calls = r.io_calls(j, "recv_calls", false);
  auto flag_name = [](const std::string& n) -> std::optional<std::string> {
    for (auto t : kTrackedMsgFlags) {
      if (t == n) return n;
    }
    return std::nullopt;
  };
  s.send_flags = r.mapping<std::string, double>(j, "send_flags", flag_name, {});
  s.recv_flags = r.mapping<std::string, double>(j, "recv_flags", flag_name, {});
  s.opening_pattern = r.number(j, "opening_pattern", "", 0);
  s.closing_pattern = r.number(j, "closing_pattern", "", 0);

  if (j.contains("tcp_info")) {
    const auto& t = j["tcp_info"];
    r.check_keys(t, "tcp_info", {"sockets", "once", "max_reads"});
    s.tcpinfo_sockets = r.count(t, "sockets", "tcp_info.", 0);
    s.tcpinfo_once = r.count(t, "once", "tcp_info.", 0);
    s.tcpinfo_max_reads = static_cast<std::uint32_t>(r.count(t, "max_reads", "tcp_info.", 5));
  }
  if (j.contains("accepts")) {
    const auto& a = j["accepts"];
    r.check_keys(a, "accepts", {"listeners", "peers"});
    s.listeners = r.count(a, "listeners", "accepts.", 0);
    s.accept_peers = r.mapping<PeerClass, std::uint64_t>(
        a, "peers", [](const std::string& n) { return enum_from_name(n, kPeerClasses); }, {});
  }
  if (j.contains("multicast")) {
    const auto& m = j["multicast"];
    r.check_keys(m, "multicast", {"sender_apps", "joiner_apps"});
    s.multicast_sender_apps = r.count(m, "sender_apps", "multicast.", 0);
    s.multicast_joiner_apps = r.count(m, "joiner_apps", "multicast.", 0);
  }
  if (j.contains("nonblock")) {
    const auto& m = j["nonblock"];
    r.check_keys(m, "nonblock", {"creation_flag_apps", "ioctl_apps"});
    s.nonblock_creation_flag_apps = r.count(m, "creation_flag_apps", "nonblock.", 0);
    s.nonblock_ioctl_apps = r.count(m, "ioctl_apps", "nonblock.", 0);
  }
  s.app_functions = r.mapping<ApiFunction, double>(
      j, "app_functions", [](const std::string& n) { return api_function_from_name(n); }, {});
  s.twins = r.boolean(j, "twins", "", false);
  if (j.contains("stamp")) {
    const auto& st = j["stamp"];
    r.check_keys(st, "stamp", {"sockets", "reads", "period_ms", "jitter_ms"});
    s.stamp_sockets = r.count(st, "sockets", "stamp.", 0);
    s.stamp_reads = r.count(st, "reads", "stamp.", 0);
    s.stamp_period_ms = r.number(st, "period_ms", "stamp.", 1000);
    s.stamp_jitter_ms = r.number(st, "jitter_ms", "stamp.", 0);
  }
  s.opt_out = r.boolean(j, "opt_out", "", false);
  if (!r.errors.empty()) throw GenSpecError(r.errors);
  return s;
}

CorpusGenSpec load_gen_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_gen_spec(ss.str());
}

// ---- feasibility ------------------------------------------------------------

namespace {

class Feasibility {
public:
  std::vector<std::string> offenders;

  void require(bool ok, std::string message) {
    if (!ok) offenders.push_back(std::move(message));
  }

  std::uint64_t exact(double share, std::uint64_t total, const std::string& name) {
    if (!(share >= 0.0 && share <= 1.0)) {
      offenders.push_back(name + ": share " + fmt(share) + " outside [0,1]");
      return 0;
    }
    double x = share * static_cast<double>(total);
    double r = std::round(x);
    if (std::fabs(x - r) > 1e-6) {
      offenders.push_back(name + ": share " + fmt(share) + " of " + std::to_string(total) +
                          " is not a whole count (" + fmt(x) + ")");
    }
    return static_cast<std::uint64_t>(r);
  }

  template <typename Key>
  std::map<Key, std::uint64_t> mix(const std::map<Key, double>& shares, std::uint64_t total,
                                   const std::string& name, auto key_name) {
    std::map<Key, std::uint64_t> out;
    double sum = 0;
    std::uint64_t counted = 0;
    for (const auto& [k, share] : shares) {
      sum += share;
      auto n = exact(share, total, name + "." + key_name(k));
      out[k] = n;
      counted += n;
    }
    if (total > 0 && std::fabs(sum - 1.0) > 1e-9) {
      offenders.push_back(name + ": shares sum to " + fmt(sum) + ", not 1");
    } else if (total > 0 && counted != total) {
      offenders.push_back(name + ": counts sum to " + std::to_string(counted) + ", not " +
                          std::to_string(total));
    }
    return out;
  }

  void raise() const {
    if (!offenders.empty()) throw GenSpecError(offenders);
  }

private:
  static std::string fmt(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
  }
};

auto enum_key = [](auto k) { return std::string(to_string(k)); };
auto string_key = [](const std::string& k) { return k; };
auto size_key = [](std::uint64_t k) { return std::to_string(k); };

// ---- socket plans -----------------------------------------------------------

enum class Kind : std::uint8_t {
  tcp_rcvtimeo,
  tcp_immediate_close,
  tcp_wireless,
  tcp_local_other,
  tcp_listener,
  tcp_remote_data,
  tcp_remote_no_data,
  udp_netinfo,
  udp_connect,
  udp_data,
  udp_other,
  raw,
};

struct IoCall {
  ApiFunction fn;
  std::uint64_t size;
  std::uint32_t flags;
};

struct Plan {
  Kind kind = Kind::raw;
  int domain = AF_INET;
  std::vector<IoCall> payload;
  std::vector<unsigned long> ioctls;
  std::vector<PeerClass> peers;
  bool opening = false;
  bool closing = false;
  std::uint32_t tcpinfo_reads = 0;
  std::uint64_t stamp_reads = 0;
  bool multicast_send = false;
  bool join = false;
  bool creation_nonblock = false;
  bool fionbio = false;
};

bool is_stream(Kind k) { return k <= Kind::tcp_remote_no_data; }
bool is_remote(Kind k) { return k == Kind::tcp_remote_data || k == Kind::tcp_remote_no_data; }

unsigned long pick_other_request(Rng& rng) {
  static constexpr unsigned long kOthers[] = {ioctl_req::kSIOCGIFCONF, ioctl_req::kSIOCGIFMTU,
                                              ioctl_req::kSIOCGIFHWADDR, ioctl_req::kSIOCGIFINDEX};
  return kOthers[rng.below(std::size(kOthers))];
}

std::vector<Plan> make_plans(const CorpusGenSpec& spec, Rng& rng) {
  Feasibility f;
  f.require(spec.apps >= 1, "apps: must be at least 1");
  f.require(spec.traces_per_app >= 1, "traces_per_app: must be at least 1");

  std::map<SockType, double> type_shares = spec.socket_types;
  auto types = f.mix(type_shares, spec.sockets, "socket_types", enum_key);
  auto udp = f.mix(spec.udp_classes, types[SockType::dgram], "udp_classes", enum_key);
  auto tcp = f.mix(spec.tcp_classes, types[SockType::stream], "tcp_classes", enum_key);

  const std::uint64_t netinfo = udp[UdpClass::netinfo_ioctl];
  std::map<std::string, std::uint64_t> ioctls;
  if (spec.ioctl_total > 0) {
    ioctls = f.mix(spec.ioctl_mix, spec.ioctl_total, "ioctl.mix", string_key);
    f.require(netinfo > 0, "ioctl.total: no netinfo_ioctl datagram sockets to carry ioctl calls");
    f.require(spec.ioctl_total >= netinfo,
              "ioctl.total: " + std::to_string(spec.ioctl_total) + " calls cannot cover " +
                  std::to_string(netinfo) + " netinfo_ioctl sockets");
  } else if (netinfo > 0) {
    ioctls["SIOCGIFADDR"] = netinfo;
  }

  const std::uint64_t remote_data = tcp[TcpClass::remote_data];
  const std::uint64_t remote = remote_data + tcp[TcpClass::remote_no_data];

  // Payload pool.
  std::vector<IoCallSpec> sends = spec.send_calls, recvs = spec.recv_calls;
  if (sends.empty() && recvs.empty() && remote_data > 0) {
    sends.push_back({ApiFunction::send, remote_data, {{128, 1.0}}});
    recvs.push_back({ApiFunction::recv, remote_data, {{4096, 1.0}}});
  }
  std::vector<IoCall> send_pool, recv_pool;
  auto fill = [&](const std::vector<IoCallSpec>& specs, std::vector<IoCall>& pool, const char* name) {
    for (std::size_t i = 0; i < specs.size(); ++i) {
      const auto& s = specs[i];
      auto sizes = f.mix(s.sizes, s.calls, std::string(name) + "[" + std::to_string(i) + "].sizes", size_key);
      if (s.calls > 0 && s.sizes.empty()) sizes[64] = s.calls;
      for (const auto& [size, n] : sizes) {
        for (std::uint64_t k = 0; k < n; ++k) pool.push_back({s.fn, size, 0});
      }
    }
  };
  fill(sends, send_pool, "send_calls");
  fill(recvs, recv_pool, "recv_calls");
  auto assign_flags = [&](std::vector<IoCall>& pool, const std::map<std::string, double>& flags,
                          const char* name) {
    std::vector<std::size_t> capable;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (takes_msg_flags(pool[i].fn)) capable.push_back(i);
    }
    for (const auto& [flag, share] : flags) {
      auto n = f.exact(share, capable.size(), std::string(name) + "." + flag);
      if (n > capable.size()) continue;
      auto bit = *msg_flags_value({flag});
      rng.shuffle(capable);
      for (std::uint64_t k = 0; k < n; ++k) pool[capable[k]].flags |= bit;
    }
  };
  assign_flags(send_pool, spec.send_flags, "send_flags");
  assign_flags(recv_pool, spec.recv_flags, "recv_flags");
  std::vector<IoCall> payload = std::move(send_pool);
  payload.insert(payload.end(), recv_pool.begin(), recv_pool.end());
  f.require(payload.size() >= remote_data,
            "send_calls/recv_calls: " + std::to_string(payload.size()) + " payload calls cannot cover " +
                std::to_string(remote_data) + " remote_data sockets");
  f.require(payload.empty() || remote_data > 0, "send_calls/recv_calls: no remote_data sockets to carry them");

  auto opening = f.exact(spec.opening_pattern, spec.sockets, "opening_pattern");
  auto closing = f.exact(spec.closing_pattern, spec.sockets, "closing_pattern");
  f.require(opening <= remote_data, "opening_pattern: " + std::to_string(opening) +
                                        " sockets exceed the " + std::to_string(remote_data) +
                                        " remote_data sockets");
  f.require(closing <= remote, "closing_pattern: " + std::to_string(closing) + " sockets exceed the " +
                                   std::to_string(remote) + " remote sockets");
  f.require(spec.tcpinfo_sockets <= remote, "tcp_info.sockets: exceeds the " + std::to_string(remote) +
                                                " remote stream sockets");
  f.require(spec.tcpinfo_once <= spec.tcpinfo_sockets, "tcp_info.once: exceeds tcp_info.sockets");
  f.require(spec.tcpinfo_once == spec.tcpinfo_sockets || spec.tcpinfo_max_reads >= 2,
            "tcp_info.max_reads: must be at least 2");

  std::uint64_t accepted = 0;
  for (const auto& [_, n] : spec.accept_peers) accepted += n;
  f.require(spec.accept_peers.count(PeerClass::unknown) == 0 || spec.accept_peers.at(PeerClass::unknown) == 0,
            "accepts.peers.unknown: accepted peers always have an address");
  f.require(accepted == 0 || spec.listeners > 0, "accepts.peers: accepted connections need a listener");
  f.require(spec.listeners + accepted <= tcp[TcpClass::local_other],
            "accepts: " + std::to_string(spec.listeners + accepted) + " listening and accepted sockets exceed the " +
                std::to_string(tcp[TcpClass::local_other]) + " local_other sockets");
  f.require(spec.stamp_sockets <= udp[UdpClass::data], "stamp.sockets: exceeds the datagram data sockets");
  f.require(spec.multicast_sender_apps <= spec.apps, "multicast.sender_apps: exceeds apps");
  f.require(spec.multicast_joiner_apps <= spec.apps, "multicast.joiner_apps: exceeds apps");
  f.require(spec.nonblock_creation_flag_apps <= spec.apps, "nonblock.creation_flag_apps: exceeds apps");
  f.require(spec.nonblock_ioctl_apps <= spec.apps, "nonblock.ioctl_apps: exceeds apps");
  for (const auto& [fn, share] : spec.app_functions) {
    f.exact(share, spec.apps, "app_functions." + std::string(to_string(fn)));
  }
  f.raise();

  std::vector<Plan> plans;
  auto add = [&](Kind k, std::uint64_t n, int domain_mix) {
    for (std::uint64_t i = 0; i < n; ++i) {
      Plan p;
      p.kind = k;
      p.domain = domain_mix && rng.chance(0.5) ? AF_INET6 : AF_INET;
      plans.push_back(std::move(p));
    }
  };
  add(Kind::tcp_rcvtimeo, tcp[TcpClass::local_rcvtimeo_only], 1);
  add(Kind::tcp_immediate_close, tcp[TcpClass::local_immediate_close], 1);
  add(Kind::tcp_wireless, tcp[TcpClass::local_wireless_check], 1);
  add(Kind::tcp_local_other, tcp[TcpClass::local_other] - spec.listeners - accepted, 1);
  add(Kind::tcp_listener, spec.listeners, 1);
  add(Kind::tcp_remote_data, remote_data, 1);
  add(Kind::tcp_remote_no_data, tcp[TcpClass::remote_no_data], 1);
  add(Kind::udp_netinfo, netinfo, 0);
  add(Kind::udp_connect, udp[UdpClass::connect_no_data], 0);
  add(Kind::udp_data, udp[UdpClass::data], 0);
  add(Kind::udp_other, udp[UdpClass::other], 0);
  add(Kind::raw, types[SockType::other], 0);

  auto indices_of = [&](auto pred) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < plans.size(); ++i) {
      if (pred(plans[i].kind)) out.push_back(i);
    }
    return out;
  };

  auto data_idx = indices_of([](Kind k) { return k == Kind::tcp_remote_data; });
  rng.shuffle(payload);
  for (std::size_t i = 0; i < payload.size(); ++i) {
    auto target = i < data_idx.size() ? data_idx[i] : data_idx[rng.below(data_idx.size())];
    plans[target].payload.push_back(payload[i]);
  }
  rng.shuffle(data_idx);
  for (std::uint64_t i = 0; i < opening; ++i) plans[data_idx[i]].opening = true;

  auto remote_idx = indices_of(is_remote);
  rng.shuffle(remote_idx);
  for (std::uint64_t i = 0; i < closing; ++i) plans[remote_idx[i]].closing = true;
  rng.shuffle(remote_idx);
  for (std::uint64_t i = 0; i < spec.tcpinfo_sockets; ++i) {
    plans[remote_idx[i]].tcpinfo_reads =
        i < spec.tcpinfo_once ? 1 : static_cast<std::uint32_t>(rng.between(2, spec.tcpinfo_max_reads));
  }

  auto netinfo_idx = indices_of([](Kind k) { return k == Kind::udp_netinfo; });
  std::vector<unsigned long> requests;
  for (const auto& [name, n] : ioctls) {
    for (std::uint64_t k = 0; k < n; ++k) {
      requests.push_back(name == "other" ? pick_other_request(rng) : *ioctl_request_value(name));
    }
  }
  rng.shuffle(requests);
  for (std::size_t i = 0; i < requests.size(); ++i) {
    auto target = i < netinfo_idx.size() ? netinfo_idx[i] : netinfo_idx[rng.below(netinfo_idx.size())];
    plans[target].ioctls.push_back(requests[i]);
  }

  auto udp_data_idx = indices_of([](Kind k) { return k == Kind::udp_data; });
  for (std::uint64_t i = 0; i < spec.stamp_sockets; ++i) plans[udp_data_idx[i]].stamp_reads = spec.stamp_reads;

  auto listener_idx = indices_of([](Kind k) { return k == Kind::tcp_listener; });
  std::size_t next_listener = 0;
  for (const auto& [cls, n] : spec.accept_peers) {
    for (std::uint64_t k = 0; k < n; ++k) {
      plans[listener_idx[next_listener]].peers.push_back(cls);
      next_listener = (next_listener + 1) % listener_idx.size();
    }
  }
  for (auto i : listener_idx) rng.shuffle(plans[i].peers);

  rng.shuffle(plans);
  return plans;
}

// ---- scripts ----------------------------------------------------------------

enum class FdRole : std::uint8_t { none, own, child };
enum class FdOp : std::uint8_t { none, alloc_own, alloc_child, free_own, free_child };

struct Step {
  TraceEvent ev;
  FdRole role = FdRole::own;
  FdOp op = FdOp::none;
  std::optional<std::int64_t> gap_us;
};

using Script = std::vector<Step>;

TraceEvent make_event(ApiFunction fn, FnArgs args, std::int64_t ret = 0, int err = 0) {
  TraceEvent e;
  e.fn = fn;
  e.args = std::move(args);
  e.ret = ret;
  e.err = err;
  return e;
}

void set_fd(TraceEvent& e, int fd) {
  std::visit(
      [fd](auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, SendfileArgs>) {
          a.out_fd = fd;
        } else if constexpr (requires { a.fd; } && !std::is_same_v<T, EpollArgs>) {
          a.fd = fd;
        }
      },
      e.args);
}

class Addresses {
public:
  explicit Addresses(Rng& rng) : rng_(rng) {}

  NetAddress global(int domain, std::uint16_t port) {
    if (domain == AF_INET6) {
      std::array<std::uint8_t, 16> b{};
      for (auto& x : b) x = static_cast<std::uint8_t>(rng_.next());
      b[0] = static_cast<std::uint8_t>(0x20 | (b[0] & 0x1f));
      return NetAddress::ipv6(b, port);
    }
    for (;;) {
      auto v = static_cast<std::uint32_t>(rng_.next());
      if ((v >> 24) != 0 && classify_ipv4(v) == AddressClass::global) return NetAddress::ipv4(v, port);
    }
  }

  NetAddress loopback(int domain, std::uint16_t port) {
    if (domain == AF_INET6) {
      std::array<std::uint8_t, 16> b{};
      b[15] = 1;
      return NetAddress::ipv6(b, port);
    }
    return NetAddress::ipv4(0x7f000001, port);
  }

  NetAddress link_local(int domain, std::uint16_t port) {
    if (domain == AF_INET6) {
      std::array<std::uint8_t, 16> b{};
      b[0] = 0xfe;
      b[1] = 0x80;
      for (int i = 8; i < 16; ++i) b[i] = static_cast<std::uint8_t>(rng_.next());
      return NetAddress::ipv6(b, port);
    }
    return NetAddress::ipv4(0xa9fe0000u | static_cast<std::uint32_t>(rng_.between(0x0100, 0xfeff)), port);
  }

  NetAddress wildcard(int domain) {
    if (domain == AF_INET6) return NetAddress::ipv6({}, 0);
    return NetAddress::ipv4(0, 0);
  }

  NetAddress of(PeerClass c, int domain) {
    auto port = static_cast<std::uint16_t>(rng_.between(32768, 60999));
    switch (c) {
      case PeerClass::loopback: return loopback(domain, port);
      case PeerClass::link_local: return link_local(domain, port);
      default: return global(domain, port);
    }
  }

private:
  Rng& rng_;
};

constexpr int kStatusRdwr = O_RDWR;

class ScriptBuilder {
public:
  ScriptBuilder(Rng& rng, Addresses& addrs, bool twins) : rng_(rng), addrs_(addrs), twins_(twins) {}

  Script build(const Plan& p) {
    s_.clear();
    switch (p.kind) {
      case Kind::tcp_rcvtimeo: {
        create(p, SOCK_STREAM);
        auto n = rng_.between(1, 3);
        for (int i = 0; i < n; ++i) sockopt(ApiFunction::setsockopt, SOL_SOCKET, SO_RCVTIMEO, Timeval{30, 0});
        close();
        break;
      }
      case Kind::tcp_immediate_close:
        create(p, SOCK_STREAM);
        close();
        break;
      case Kind::tcp_wireless:
        create(p, SOCK_STREAM);
        ioctl(ioctl_req::kSIOCGIWNAME, -1, ENODEV);
        close();
        break;
      case Kind::tcp_local_other:
        create(p, SOCK_STREAM);
        add(make_event(ApiFunction::connect, AddrArgs{-1, addrs_.loopback(p.domain, 8080), {}}));
        add(make_event(ApiFunction::getsockname, AddrArgs{-1, addrs_.of(PeerClass::loopback, p.domain), {}}));
        close();
        break;
      case Kind::tcp_listener:
        listener(p);
        break;
      case Kind::tcp_remote_data:
      case Kind::tcp_remote_no_data:
        remote(p);
        break;
      case Kind::udp_netinfo:
        create(p, SOCK_DGRAM);
        for (auto r : p.ioctls) ioctl(r, 0, 0);
        close();
        break;
      case Kind::udp_connect:
        create(p, SOCK_DGRAM);
        add(make_event(ApiFunction::connect, AddrArgs{-1, addrs_.global(p.domain, 53), {}}));
        add(make_event(ApiFunction::getsockname, AddrArgs{-1, addrs_.global(p.domain, 40000), {}}));
        close();
        break;
      case Kind::udp_data:
        udp_data(p);
        break;
      case Kind::udp_other:
        create(p, SOCK_DGRAM);
        if (rng_.chance(0.5)) {
          add(make_event(ApiFunction::bind, AddrArgs{-1, addrs_.wildcard(p.domain), {}}));
        }
        close();
        break;
      case Kind::raw:
        create(p, SOCK_RAW, IPPROTO_ICMP);
        close();
        break;
    }
    return std::move(s_);
  }

private:
  void add(TraceEvent e, FdRole role = FdRole::own, FdOp op = FdOp::none,
           std::optional<std::int64_t> gap = std::nullopt) {
    s_.push_back({std::move(e), role, op, gap});
  }

  void create(const Plan& p, int type, int protocol = 0) {
    SocketArgs a{p.domain, type, protocol, p.creation_nonblock ? static_cast<std::uint32_t>(SOCK_NONBLOCK) : 0u, {}};
    add(make_event(ApiFunction::socket, a), FdRole::none, FdOp::alloc_own);
    if (p.fionbio) ioctl(ioctl_req::kFIONBIO, 0, 0, 1);
  }

  void close() { add(make_event(ApiFunction::close, FdArgs{}), FdRole::own, FdOp::free_own); }

  void sockopt(ApiFunction fn, int level, int opt, OptvalSummary v) {
    add(make_event(fn, SockoptArgs{-1, level, opt, v}));
  }

  void ioctl(unsigned long request, std::int64_t ret, int err, std::optional<std::int64_t> value = {},
             std::optional<std::int64_t> gap = {}) {
    add(make_event(ApiFunction::ioctl, IoctlArgs{-1, request, value}, ret, err), FdRole::own, FdOp::none, gap);
  }

  void fcntl(int cmd, std::int64_t word) {
    add(make_event(ApiFunction::fcntl, FcntlArgs{-1, cmd, word}, cmd == F_GETFL ? word : 0));
  }

  void io(const IoCall& c) {
    IoArgs a{-1, c.size, c.flags, {}, {}};
    std::int64_t ret = static_cast<std::int64_t>(c.size);
    switch (c.fn) {
      case ApiFunction::sendmsg:
      case ApiFunction::recvmsg:
      case ApiFunction::writev:
      case ApiFunction::readv:
        a.iov_count = 1;
        break;
      case ApiFunction::sendmmsg:
      case ApiFunction::recvmmsg:
        a.iov_count = 1;
        ret = 1;
        break;
      default:
        break;
    }
    if (c.fn == ApiFunction::sendfile) {
      add(make_event(c.fn, SendfileArgs{-1, 1023, c.size}, ret));
      return;
    }
    add(make_event(c.fn, a, ret));
    if (twins_) {
      if (auto twin = complex_twin(c.fn)) add(make_event(*twin, a, ret), FdRole::own, FdOp::none, 0);
    }
  }

  void tcpinfo() { sockopt(ApiFunction::getsockopt, IPPROTO_TCP, TCP_INFO, OpaqueValue{232}); }

  void remote(const Plan& p) {
    const auto peer = addrs_.global(p.domain, rng_.chance(0.8) ? 443 : 80);
    std::vector<IoCall> rest = p.payload;
    if (p.opening) {
      create(p, SOCK_STREAM);
      add(make_event(ApiFunction::bind, AddrArgs{-1, addrs_.wildcard(p.domain), {}}));
      add(make_event(ApiFunction::getsockname, AddrArgs{-1, addrs_.wildcard(p.domain), {}}));
      sockopt(ApiFunction::setsockopt, SOL_SOCKET, SO_RCVTIMEO, Timeval{0, 0});
      fcntl(F_GETFL, kStatusRdwr);
      fcntl(F_SETFL, kStatusRdwr | O_NONBLOCK);
      add(make_event(ApiFunction::connect, AddrArgs{-1, peer, {}}, -1, EINPROGRESS));
      sockopt(ApiFunction::getsockopt, SOL_SOCKET, SO_ERROR, std::int64_t{0});
      fcntl(F_GETFL, kStatusRdwr | O_NONBLOCK);
      fcntl(F_SETFL, kStatusRdwr);
      add(make_event(ApiFunction::getsockname, AddrArgs{-1, addrs_.global(p.domain, 45000), {}}));
      sockopt(ApiFunction::getsockopt, SOL_SOCKET, SO_RCVTIMEO, Timeval{0, 0});
      sockopt(ApiFunction::getsockopt, SOL_SOCKET, SO_RCVTIMEO, Timeval{0, 0});
      fcntl(F_GETFL, kStatusRdwr);
      fcntl(F_SETFL, kStatusRdwr | O_NONBLOCK);
      io(rest.front());
      rest.erase(rest.begin());
    } else {
      create(p, SOCK_STREAM);
      if (p.kind == Kind::tcp_remote_data) {
        add(make_event(ApiFunction::connect, AddrArgs{-1, peer, {}}));
      } else {
        add(make_event(ApiFunction::connect, AddrArgs{-1, peer, {}}, -1, rng_.chance(0.5) ? ECONNREFUSED : ETIMEDOUT));
      }
    }
    // Interleave the remaining payload calls with the TCP_INFO reads.
    std::vector<int> order(rest.size(), 0);
    order.insert(order.end(), p.tcpinfo_reads, 1);
    rng_.shuffle(order);
    std::size_t next = 0;
    for (int o : order) {
      if (o == 0) {
        io(rest[next++]);
      } else {
        tcpinfo();
      }
    }
    if (p.closing) {
      sockopt(ApiFunction::getsockopt, SOL_SOCKET, SO_DEBUG, std::int64_t{0});
      sockopt(ApiFunction::getsockopt, SOL_SOCKET, SO_LINGER, Linger{0, 0});
    }
    close();
  }

  void listener(const Plan& p) {
    create(p, SOCK_STREAM);
    sockopt(ApiFunction::setsockopt, SOL_SOCKET, SO_REUSEADDR, std::int64_t{1});
    add(make_event(ApiFunction::bind, AddrArgs{-1, addrs_.loopback(p.domain, 8080), {}}));
    add(make_event(ApiFunction::listen, FdArgs{-1, 50}));
    for (auto cls : p.peers) {
      auto peer = addrs_.of(cls, p.domain);
      add(make_event(ApiFunction::accept, AddrArgs{-1, peer, {}}), FdRole::own, FdOp::alloc_child);
      add(make_event(ApiFunction::getpeername, AddrArgs{-1, peer, {}}), FdRole::child);
      add(make_event(ApiFunction::close, FdArgs{}), FdRole::child, FdOp::free_child);
    }
    close();
  }

  void udp_data(const Plan& p) {
    create(p, SOCK_DGRAM);
    if (p.join) {
      sockopt(ApiFunction::setsockopt, IPPROTO_IP, IP_ADD_MEMBERSHIP, OpaqueValue{8});
    }
    auto dest = p.multicast_send ? NetAddress::ipv4(0xeffffffa, 1900) : addrs_.global(p.domain, 53);
    add(make_event(ApiFunction::sendto, IoArgs{-1, 64, 0, {}, dest}, 64));
    add(make_event(ApiFunction::recvfrom, IoArgs{-1, 1500, 0, {}, dest}, 512));
    const auto period = static_cast<std::int64_t>(std::llround(1000.0 * p_period_ms_));
    const auto jitter = static_cast<std::int64_t>(std::llround(1000.0 * p_jitter_ms_));
    for (std::uint64_t i = 0; i < p.stamp_reads; ++i) {
      auto gap = period + (jitter > 0 ? rng_.between(-jitter, jitter) : 0);
      ioctl(ioctl_req::kSIOCGSTAMP, 0, 0, {}, std::max<std::int64_t>(gap, 1));
    }
    close();
  }

public:
  double p_period_ms_ = 1000;
  double p_jitter_ms_ = 0;

private:
  Rng& rng_;
  Addresses& addrs_;
  bool twins_;
  Script s_;
};

TraceEvent marker_event(ApiFunction fn) {
  TraceEvent e;
  e.fn = fn;
  e.ret = -1;
  e.err = EBADF;
  switch (arg_kind(fn)) {
    case ArgKind::socket:
      e.args = SocketArgs{-1, SOCK_STREAM, 0, 0, {}};
      e.err = EAFNOSUPPORT;
      break;
    case ArgKind::addr: e.args = AddrArgs{}; break;
    case ArgKind::io: e.args = IoArgs{}; break;
    case ArgKind::sockopt: e.args = SockoptArgs{-1, SOL_SOCKET, SO_ERROR, {}}; break;
    case ArgKind::fcntl: e.args = FcntlArgs{-1, F_GETFL, {}}; break;
    case ArgKind::ioctl: e.args = IoctlArgs{-1, ioctl_req::kFIONREAD, {}}; break;
    case ArgKind::poll:
      e.args = PollArgs{0, 0};
      e.ret = 0;
      e.err = 0;
      break;
    case ArgKind::epoll: {
      EpollArgs a;
      if (fn == ApiFunction::epoll_create || fn == ApiFunction::epoll_create1) {
        a.size_or_flags = fn == ApiFunction::epoll_create ? 0 : -1;
        e.err = EINVAL;
      } else if (fn == ApiFunction::epoll_ctl) {
        a.op = 1;
        a.fd = -1;
        a.events = 1;
      } else {
        a.maxevents = 1;
        a.timeout_ms = 0;
      }
      e.args = a;
      break;
    }
    case ArgKind::dup: e.args = DupArgs{}; break;
    case ArgKind::fd: e.args = FdArgs{}; break;
    case ArgKind::sendfile: e.args = SendfileArgs{}; break;
  }
  return e;
}

// Places every script on one timeline and hands out the lowest free fd at
// each creation, as the kernel would.
std::vector<TraceEvent> run_timeline(std::vector<Script>& scripts, long pid, Rng& rng) {
  constexpr std::int64_t kSpanUs = 60'000'000;
  struct Slot {
    std::int64_t t;
    std::size_t script;
    std::size_t step;
  };
  std::vector<Slot> slots;
  for (std::size_t i = 0; i < scripts.size(); ++i) {
    std::int64_t t = rng.between(0, kSpanUs);
    for (std::size_t k = 0; k < scripts[i].size(); ++k) {
      if (k > 0) t += scripts[i][k].gap_us ? *scripts[i][k].gap_us : rng.between(20, 5000);
      slots.push_back({t, i, k});
    }
  }
  std::sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) {
    return std::tie(a.t, a.script, a.step) < std::tie(b.t, b.script, b.step);
  });

  std::set<int> used;
  auto lowest_free = [&] {
    int fd = 3;
    for (int u : used) {
      if (u < fd) continue;
      if (u != fd) break;
      ++fd;
    }
    used.insert(fd);
    return fd;
  };
  std::vector<int> own(scripts.size(), -1), child(scripts.size(), -1);
  std::vector<TraceEvent> out;
  out.reserve(slots.size());
  for (const auto& s : slots) {
    Step& st = scripts[s.script][s.step];
    TraceEvent e = st.ev;
    e.ts_us = s.t;
    e.tid = pid + static_cast<long>(s.script % 3);
    if (st.role == FdRole::own) set_fd(e, own[s.script]);
    if (st.role == FdRole::child) set_fd(e, child[s.script]);
    switch (st.op) {
      case FdOp::alloc_own:
        own[s.script] = lowest_free();
        e.ret = own[s.script];
        break;
      case FdOp::alloc_child:
        child[s.script] = lowest_free();
        e.ret = child[s.script];
        break;
      case FdOp::free_own:
        used.erase(own[s.script]);
        break;
      case FdOp::free_child:
        used.erase(child[s.script]);
        break;
      case FdOp::none:
        break;
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::string rfc3339(std::int64_t epoch) {
  std::time_t t = static_cast<std::time_t>(epoch);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Salt derived_salt(std::uint64_t seed, std::uint64_t trace) {
  Rng r(seed ^ (0x9e3779b97f4a7c15ull * (trace + 1)));
  Salt s;
  for (auto& b : s.bytes) b = static_cast<std::uint8_t>(r.next());
  return s;
}

std::string app_name(std::uint64_t app) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "app-%03llu", static_cast<unsigned long long>(app));
  return buf;
}

TraceMeta make_meta(const std::string& app, std::uint64_t seed, std::uint64_t trace, const Salt& salt,
                    bool opt_out) {
  TraceMeta m;
  m.app_name = app;
  m.command_line = "/usr/bin/" + app;
  m.os_name = "Linux";
  if (!opt_out) {
    m.kernel_version = "5.15.0";
    m.network_config_summary = "lo:inet,inet6;wlan0:inet,inet6";
  }
  m.tracer_version = std::string(kTracerVersion);
  m.started_at = rfc3339(1483228800 + static_cast<std::int64_t>(seed % 31536000) +
                         static_cast<std::int64_t>(trace) * 3600);
  m.salt_fingerprint = salt.fingerprint();
  m.metadata_opt_out = opt_out;
  return m;
}

}  // namespace

std::vector<GeneratedTrace> generate_corpus(const CorpusGenSpec& spec) {
  Rng rng(spec.seed);
  std::vector<Plan> plans = make_plans(spec, rng);
  const std::uint64_t n_traces = spec.apps * spec.traces_per_app;
  auto app_of_trace = [&](std::uint64_t t) { return t % spec.apps; };

  std::vector<std::vector<std::size_t>> by_trace(n_traces);
  for (std::size_t i = 0; i < plans.size(); ++i) by_trace[i % n_traces].push_back(i);

  // App-level knobs pick sockets in app order.
  std::vector<std::string> offenders;
  auto per_app = [&](std::uint64_t wanted, const char* name, auto eligible, auto apply) {
    std::uint64_t done = 0;
    for (std::uint64_t app = 0; app < spec.apps && done < wanted; ++app) {
      bool found = false;
      for (std::uint64_t t = app; t < n_traces && !found; t += spec.apps) {
        for (auto i : by_trace[t]) {
          if (eligible(plans[i])) {
            apply(plans[i]);
            found = true;
            break;
          }
        }
      }
      done += found;
    }
    if (done < wanted) {
      offenders.push_back(std::string(name) + ": only " + std::to_string(done) + " apps own a suitable socket");
    }
  };
  per_app(spec.multicast_sender_apps, "multicast.sender_apps",
          [](const Plan& p) { return p.kind == Kind::udp_data && !p.multicast_send; },
          [](Plan& p) { p.multicast_send = true; });
  per_app(spec.multicast_joiner_apps, "multicast.joiner_apps",
          [](const Plan& p) { return p.kind == Kind::udp_data && !p.join; }, [](Plan& p) { p.join = true; });
  per_app(spec.nonblock_creation_flag_apps, "nonblock.creation_flag_apps",
          [](const Plan& p) { return is_stream(p.kind) && !p.opening && !p.fionbio && !p.creation_nonblock; },
          [](Plan& p) { p.creation_nonblock = true; });
  per_app(spec.nonblock_ioctl_apps, "nonblock.ioctl_apps",
          [](const Plan& p) { return is_remote(p.kind) && !p.opening && !p.fionbio && !p.creation_nonblock; },
          [](Plan& p) { p.fionbio = true; });
  if (!offenders.empty()) throw GenSpecError(offenders);

  Addresses addrs(rng);
  ScriptBuilder builder(rng, addrs, spec.twins);
  builder.p_period_ms_ = spec.stamp_period_ms;
  builder.p_jitter_ms_ = spec.stamp_jitter_ms;
  std::vector<std::vector<Script>> scripts(n_traces);
  for (std::uint64_t t = 0; t < n_traces; ++t) {
    for (auto i : by_trace[t]) scripts[t].push_back(builder.build(plans[i]));
  }

  // Function-usage targets: top up apps that lack the function.
  for (const auto& [fn, share] : spec.app_functions) {
    auto target = static_cast<std::uint64_t>(std::llround(share * static_cast<double>(spec.apps)));
    std::vector<bool> has(spec.apps, false);
    for (std::uint64_t t = 0; t < n_traces; ++t) {
      for (const auto& sc : scripts[t]) {
        for (const auto& st : sc) {
          if (st.ev.fn == fn) has[app_of_trace(t)] = true;
        }
      }
    }
    auto natural = static_cast<std::uint64_t>(std::count(has.begin(), has.end(), true));
    if (natural > target) {
      offenders.push_back("app_functions." + std::string(to_string(fn)) + ": " + std::to_string(natural) +
                          " apps already call it, above the target of " + std::to_string(target));
      continue;
    }
    std::uint64_t missing = target - natural;
    for (std::uint64_t app = 0; app < spec.apps && missing > 0; ++app) {
      if (has[app]) continue;
      scripts[app].push_back({Step{marker_event(fn), FdRole::none, FdOp::none, {}}});
      --missing;
    }
  }
  if (!offenders.empty()) throw GenSpecError(offenders);

  std::vector<GeneratedTrace> out;
  out.reserve(n_traces);
  for (std::uint64_t t = 0; t < n_traces; ++t) {
    const auto app = app_of_trace(t);
    const Salt salt = derived_salt(spec.seed, t);
    GeneratedTrace g;
    char dir[64];
    std::snprintf(dir, sizeof dir, "%s/trace-%02llu", app_name(app).c_str(),
                  static_cast<unsigned long long>(t / spec.apps));
    g.dir = dir;
    g.pid = 2000 + static_cast<long>(t);
    g.meta = make_meta(app_name(app), spec.seed, t, salt, spec.opt_out);
    g.events = run_timeline(scripts[t], g.pid, rng);
    for (auto& e : g.events) e = scrub_event(std::move(e), salt);
    out.push_back(std::move(g));
  }
  return out;
}

void write_corpus(const std::filesystem::path& root, const std::vector<GeneratedTrace>& traces) {
  namespace fs = std::filesystem;
  if (fs::exists(root) && !fs::is_empty(root)) {
    throw Error("output directory " + root.string() + " is not empty");
  }
  fs::create_directories(root);
  for (const auto& g : traces) {
    auto dir = root / g.dir;
    fs::create_directories(dir);
    write_meta_file(dir / "meta.json", g.meta);
    write_events_file(dir / events_file_name(g.pid), g.events);
  }
}

Corpus to_corpus(const std::vector<GeneratedTrace>& traces, const LoadOptions& options) {
  std::vector<const GeneratedTrace*> sorted;
  for (const auto& g : traces) sorted.push_back(&g);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->dir < b->dir; });
  Corpus c;
  for (const auto* g : sorted) {
    c.add(make_trace(g->dir, g->meta, {ProcessTrace{g->pid, g->events}}, options));
  }
  return c;
}

GeneratedTrace make_tcpinfo_connection(double duration_s, std::uint64_t reads, ReadPlacement placement,
                                       std::uint64_t seed) {
  Rng rng(seed);
  const auto span = static_cast<std::int64_t>(std::llround(duration_s * 1e6));
  const Salt salt = derived_salt(seed, 0);
  GeneratedTrace g;
  g.dir = "tcpinfo";
  g.pid = 4242;
  g.meta = make_meta("tcpinfo-probe", seed, 0, salt, false);

  std::vector<std::int64_t> times;
  const std::int64_t window = placement == ReadPlacement::uniform ? span - 2 : std::max<std::int64_t>(span / 50, 1);
  for (std::uint64_t i = 0; i < reads; ++i) times.push_back(2 + rng.between(0, window - 1));
  std::sort(times.begin(), times.end());

  Addresses addrs(rng);
  const int fd = 3;
  auto ev = [&](std::int64_t ts, ApiFunction fn, FnArgs args, std::int64_t ret = 0) {
    auto e = make_event(fn, std::move(args), ret);
    e.ts_us = ts;
    e.tid = g.pid;
    g.events.push_back(scrub_event(std::move(e), salt));
  };
  ev(0, ApiFunction::socket, SocketArgs{AF_INET, SOCK_STREAM, 0, 0, {}}, fd);
  ev(1, ApiFunction::connect, AddrArgs{fd, addrs.global(AF_INET, 443), {}});
  for (auto t : times) ev(t, ApiFunction::getsockopt, SockoptArgs{fd, IPPROTO_TCP, TCP_INFO, OpaqueValue{232}});
  ev(span, ApiFunction::close, FdArgs{fd, {}});
  return g;
}

}  // namespace sockscope
