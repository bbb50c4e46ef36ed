#include "sockscope/analysis.hpp"

#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "sockscope/error.hpp"

namespace sockscope {

bool Ratio::equals(double target) const {
  if (den == 0) return false;
  double scaled = target * static_cast<double>(den);
  double rounded = std::round(scaled);
  return std::fabs(scaled - rounded) < 1e-9 * std::max(1.0, scaled) &&
         static_cast<std::uint64_t>(rounded) == num;
}

std::string_view to_string(UdpClass c) {
  switch (c) {
    case UdpClass::netinfo_ioctl: return "netinfo_ioctl";
    case UdpClass::connect_no_data: return "connect_no_data";
    case UdpClass::data: return "data";
    case UdpClass::other: break;
  }
  return "other";
}

std::string_view to_string(TcpClass c) {
  switch (c) {
    case TcpClass::local_rcvtimeo_only: return "local_rcvtimeo_only";
    case TcpClass::local_immediate_close: return "local_immediate_close";
    case TcpClass::local_wireless_check: return "local_wireless_check";
    case TcpClass::local_other: return "local_other";
    case TcpClass::remote_data: return "remote_data";
    case TcpClass::remote_no_data: break;
  }
  return "remote_no_data";
}

std::string_view to_string(NonblockMethod m) {
  switch (m) {
    case NonblockMethod::creation_flag: return "creation_flag";
    case NonblockMethod::fcntl: return "fcntl";
    case NonblockMethod::ioctl: return "ioctl";
    case NonblockMethod::blocking: break;
  }
  return "blocking";
}

std::string_view to_string(PeerClass p) {
  switch (p) {
    case PeerClass::loopback: return "loopback";
    case PeerClass::link_local: return "link_local";
    case PeerClass::remote: return "remote";
    case PeerClass::unknown: break;
  }
  return "unknown";
}

std::string_view to_string(FlagDirection d) { return d == FlagDirection::send ? "send" : "recv"; }

bool is_local(TcpClass c) {
  return c != TcpClass::remote_data && c != TcpClass::remote_no_data;
}

std::string SockoptKey::name() const { return level_name(level) + ":" + optname_name(level, optname); }

void EmpiricalCdf::add(std::uint64_t size, std::uint64_t count) {
  counts_[size] += count;
  total_ += count;
}

void EmpiricalCdf::merge(const EmpiricalCdf& other) {
  for (const auto& [size, n] : other.counts_) add(size, n);
}

Ratio EmpiricalCdf::at(std::uint64_t x) const {
  std::uint64_t below = 0;
  for (auto it = counts_.begin(); it != counts_.end() && it->first <= x; ++it) below += it->second;
  return {below, total_};
}

std::vector<std::pair<std::uint64_t, std::uint64_t>> EmpiricalCdf::steps() const {
  std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
  std::uint64_t cum = 0;
  for (const auto& [size, n] : counts_) {
    cum += n;
    out.emplace_back(size, cum);
  }
  return out;
}

Ratio FlagStats::fraction(FlagDirection dir, std::string_view flag) const {
  const auto& m = dir == FlagDirection::send ? send : recv;
  auto it = m.find(std::string(flag));
  return {it == m.end() ? 0 : it->second, dir == FlagDirection::send ? send_calls : recv_calls};
}

std::uint64_t StatsReport::udp_total() const {
  std::uint64_t n = 0;
  for (const auto& [_, c] : udp_classes) n += c;
  return n;
}

std::uint64_t StatsReport::tcp_total() const {
  std::uint64_t n = 0;
  for (const auto& [_, c] : tcp_classes) n += c;
  return n;
}

std::uint64_t StatsReport::ioctl_total() const {
  std::uint64_t n = 0;
  for (const auto& [_, c] : ioctl_requests) n += c;
  return n;
}

namespace {

template <typename Map, typename Key>
std::uint64_t count_of(const Map& m, const Key& k) {
  auto it = m.find(k);
  return it == m.end() ? 0 : it->second;
}

}  // namespace

Ratio StatsReport::socket_type_share(SockType t) const { return {count_of(socket_types, t), sockets}; }
Ratio StatsReport::udp_share(UdpClass c) const { return {count_of(udp_classes, c), udp_total()}; }
Ratio StatsReport::tcp_share(TcpClass c) const { return {count_of(tcp_classes, c), tcp_total()}; }
Ratio StatsReport::ioctl_share(const std::string& r) const {
  return {count_of(ioctl_requests, r), ioctl_total()};
}

bool is_multicast_join(int level, int optname) {
  if (level == IPPROTO_IP) {
    return optname == IP_ADD_MEMBERSHIP || optname == IP_ADD_SOURCE_MEMBERSHIP ||
           optname == MCAST_JOIN_GROUP || optname == MCAST_JOIN_SOURCE_GROUP;
  }
  if (level == IPPROTO_IPV6) {
    return optname == IPV6_ADD_MEMBERSHIP || optname == MCAST_JOIN_GROUP ||
           optname == MCAST_JOIN_SOURCE_GROUP;
  }
  return false;
}

namespace {

bool is_remote_connect(const TraceEvent& e) {
  if (e.fn != ApiFunction::connect) return false;
  const auto& a = std::get<AddrArgs>(e.args);
  return a.addr && a.addr->is_ip() && !a.addr->is_loopback();
}

bool is_sockopt(const TraceEvent& e, int level, int optname) {
  if (e.fn != ApiFunction::getsockopt && e.fn != ApiFunction::setsockopt) return false;
  const auto& a = std::get<SockoptArgs>(e.args);
  return a.level == level && a.optname == optname;
}

bool is_ioctl(const TraceEvent& e, unsigned long request) {
  return e.fn == ApiFunction::ioctl && std::get<IoctlArgs>(e.args).request == request;
}

bool is_tcp_info(const TraceEvent& e) {
  return e.fn == ApiFunction::getsockopt && is_sockopt(e, IPPROTO_TCP, TCP_INFO);
}

double round4(double v) { return std::round(v * 1e4) / 1e4; }

}  // namespace

UdpClass classify_udp(const SocketLifecycle& l) {
  if (l.sock_type != SockType::dgram) throw WrongTypeError("classify_udp on a non-datagram socket");
  bool connect = false, ioctl = false;
  for (const auto& e : l.events) {
    if (is_payload(e.fn)) return UdpClass::data;
    connect = connect || e.fn == ApiFunction::connect;
    ioctl = ioctl || e.fn == ApiFunction::ioctl;
  }
  if (connect) return UdpClass::connect_no_data;
  if (ioctl) return UdpClass::netinfo_ioctl;
  return UdpClass::other;
}

TcpClass classify_tcp(const SocketLifecycle& l) {
  if (l.sock_type != SockType::stream) throw WrongTypeError("classify_tcp on a non-stream socket");
  bool remote = false;
  for (const auto& e : l.events) {
    if (!remote) {
      remote = is_remote_connect(e);
    } else if (is_payload(e.fn)) {
      return TcpClass::remote_data;
    }
  }
  if (remote) return TcpClass::remote_no_data;

  bool saw_close = false, only_rcvtimeo = true, any_rest = false, wireless = false;
  for (std::size_t i = 1; i < l.events.size(); ++i) {
    const auto& e = l.events[i];
    if (e.fn == ApiFunction::close) {
      saw_close = true;
      continue;
    }
    any_rest = true;
    if (!(e.fn == ApiFunction::setsockopt && is_sockopt(e, SOL_SOCKET, SO_RCVTIMEO))) {
      only_rcvtimeo = false;
    }
    wireless = wireless || is_ioctl(e, ioctl_req::kSIOCGIWNAME);
  }
  if (!any_rest) return saw_close ? TcpClass::local_immediate_close : TcpClass::local_other;
  if (only_rcvtimeo) return TcpClass::local_rcvtimeo_only;
  if (wireless) return TcpClass::local_wireless_check;
  return TcpClass::local_other;
}

NonblockMethod nonblock_method(const SocketLifecycle& l) {
  for (const auto& e : l.events) {
    if (e.fn == ApiFunction::socket) {
      if (std::get<SocketArgs>(e.args).creation_flags & SOCK_NONBLOCK)
        return NonblockMethod::creation_flag;
    } else if (e.fn == ApiFunction::accept4) {
      const auto& a = std::get<AddrArgs>(e.args);
      if (a.flags && (*a.flags & SOCK_NONBLOCK)) return NonblockMethod::creation_flag;
    } else if (e.fn == ApiFunction::fcntl) {
      const auto& a = std::get<FcntlArgs>(e.args);
      if (a.cmd == F_SETFL && a.flag_word && (*a.flag_word & O_NONBLOCK)) return NonblockMethod::fcntl;
    } else if (e.fn == ApiFunction::ioctl) {
      const auto& a = std::get<IoctlArgs>(e.args);
      if (a.request == ioctl_req::kFIONBIO && a.value.value_or(1) != 0) return NonblockMethod::ioctl;
    }
  }
  return NonblockMethod::blocking;
}

PeerClass peer_class(const std::optional<NetAddress>& peer) {
  if (!peer || !peer->is_ip()) return PeerClass::unknown;
  if (peer->is_loopback()) return PeerClass::loopback;
  if (peer->is_link_local()) return PeerClass::link_local;
  return PeerClass::remote;
}

double ks_distance_uniform(std::vector<double> sample) {
  if (sample.empty()) return 0.0;
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    double x = std::clamp(sample[i], 0.0, 1.0);
    d = std::max(d, static_cast<double>(i + 1) / n - x);
    d = std::max(d, x - static_cast<double>(i) / n);
  }
  return d;
}

namespace {

// Per-trace analysis result. App-level counts are resolved when partials are
// merged, since one app may own several traces.
struct TracePartial {
  std::string app;
  std::uint64_t events = 0;
  std::uint64_t sockets = 0;
  std::map<ApiFunction, std::uint64_t> calls;
  std::map<SockType, std::uint64_t> types;
  std::map<UdpClass, std::uint64_t> udp;
  std::map<TcpClass, std::uint64_t> tcp;
  std::map<std::string, std::uint64_t> ioctls;
  std::map<SockoptKey, SockoptUsage> sockopts;
  std::map<ApiFunction, EmpiricalCdf> cdfs;
  FlagStats flags;
  TcpInfoStats tcpinfo;
  std::map<NonblockMethod, std::uint64_t> modes;
  std::set<std::string> status_flags;
  std::uint64_t before_connect = 0;
  bool listens = false;
  std::uint64_t accepts = 0;
  std::map<PeerClass, std::uint64_t> peers;
  std::vector<IoctlTiming> timing;
  std::uint64_t multicast_sends = 0;
  std::uint64_t joins = 0;
};

void count_flags(std::map<std::string, std::uint64_t>& into, std::uint32_t flags) {
  for (const auto& name : msg_flag_names(flags)) {
    bool tracked = false;
    for (auto t : kTrackedMsgFlags) tracked = tracked || t == name;
    if (tracked) ++into[name];
  }
  std::uint32_t known = 0;
  for (auto t : kTrackedMsgFlags) known |= *msg_flags_value({std::string(t)});
  if (flags & ~known) ++into["other"];
}

void analyze_stream(const SocketLifecycle& l, TracePartial& p) {
  ++p.tcp[classify_tcp(l)];
  ++p.tcpinfo.stream_sockets;
  std::vector<std::int64_t> tcpinfo_ts;
  for (const auto& e : l.events) {
    if (e.fn == ApiFunction::getsockopt || e.fn == ApiFunction::setsockopt) {
      const auto& a = std::get<SockoptArgs>(e.args);
      auto& u = p.sockopts[{a.level, a.optname}];
      ++u.calls;
      if (e.fn == ApiFunction::getsockopt) {
        ++u.gets;
      } else {
        ++u.sets;
      }
      if (is_tcp_info(e)) tcpinfo_ts.push_back(e.ts_us);
    } else if (is_recv_family(e.fn)) {
      p.cdfs[e.fn].add(std::get<IoArgs>(e.args).buf_size);
    }
    if (takes_msg_flags(e.fn)) {
      auto flags = std::get<IoArgs>(e.args).flags;
      if (is_send_family(e.fn)) {
        ++p.flags.send_calls;
        count_flags(p.flags.send, flags);
      } else {
        ++p.flags.recv_calls;
        count_flags(p.flags.recv, flags);
      }
    }
  }
  if (!tcpinfo_ts.empty()) {
    ++p.tcpinfo.sockets_with_tcpinfo;
    if (tcpinfo_ts.size() == 1) ++p.tcpinfo.sockets_once;
    ++p.tcpinfo.per_socket_counts[tcpinfo_ts.size()];
    const auto first = l.events.front().ts_us;
    const auto span = l.events.back().ts_us - first;
    std::vector<double> times;
    times.reserve(tcpinfo_ts.size());
    for (auto t : tcpinfo_ts) {
      times.push_back(span > 0 ? static_cast<double>(t - first) / static_cast<double>(span) : 0.0);
    }
    p.tcpinfo.normalized_times.push_back(std::move(times));
  }
}

void analyze_dgram(const SocketLifecycle& l, TracePartial& p) {
  ++p.udp[classify_udp(l)];
  for (const auto& e : l.events) {
    if (e.fn != ApiFunction::ioctl) continue;
    auto name = ioctl_request_name(std::get<IoctlArgs>(e.args).request);
    bool named = false;
    for (auto r : kNetinfoRequests) named = named || r == name;
    ++p.ioctls[named ? name : std::string("other")];
  }
}

void analyze_modes(const SocketLifecycle& l, TracePartial& p) {
  auto method = nonblock_method(l);
  ++p.modes[method];
  std::optional<std::size_t> transition, first_connect;
  for (std::size_t i = 0; i < l.events.size(); ++i) {
    const auto& e = l.events[i];
    if (e.fn == ApiFunction::fcntl) {
      const auto& a = std::get<FcntlArgs>(e.args);
      if (a.cmd == F_SETFL && a.flag_word) {
        for (auto& name : status_flag_names(static_cast<std::uint32_t>(*a.flag_word) & ~O_ACCMODE))
          p.status_flags.insert(std::move(name));
      }
    }
    if (!first_connect && e.fn == ApiFunction::connect) first_connect = i;
  }
  if (method == NonblockMethod::blocking || !first_connect) return;
  for (std::size_t i = 0; i < l.events.size(); ++i) {
    const auto& e = l.events[i];
    bool sets = false;
    if (e.fn == ApiFunction::socket) {
      sets = std::get<SocketArgs>(e.args).creation_flags & SOCK_NONBLOCK;
    } else if (e.fn == ApiFunction::accept4) {
      const auto& a = std::get<AddrArgs>(e.args);
      sets = a.flags && (*a.flags & SOCK_NONBLOCK);
    } else if (e.fn == ApiFunction::fcntl) {
      const auto& a = std::get<FcntlArgs>(e.args);
      sets = a.cmd == F_SETFL && a.flag_word && (*a.flag_word & O_NONBLOCK);
    } else if (e.fn == ApiFunction::ioctl) {
      const auto& a = std::get<IoctlArgs>(e.args);
      sets = a.request == ioctl_req::kFIONBIO && a.value.value_or(1) != 0;
    }
    if (sets) {
      transition = i;
      break;
    }
  }
  if (transition && *transition < *first_connect) ++p.before_connect;
}

void analyze_timing(const SocketLifecycle& l, unsigned long request, TracePartial& p) {
  std::vector<std::int64_t> ts;
  for (const auto& e : l.events) {
    if (is_ioctl(e, request)) ts.push_back(e.ts_us);
  }
  if (ts.size() < 2) return;
  std::vector<double> gaps;
  for (std::size_t i = 1; i < ts.size(); ++i) gaps.push_back(static_cast<double>(ts[i] - ts[i - 1]) / 1000.0);
  double sum = 0;
  for (double g : gaps) sum += g;
  double mean = sum / static_cast<double>(gaps.size());
  double var = 0;
  for (double g : gaps) var += (g - mean) * (g - mean);
  var /= static_cast<double>(gaps.size());
  p.timing.push_back({l.socket_id, ts.size(), mean, std::sqrt(var)});
}

void analyze_process_events(const std::vector<TraceEvent>& events, TracePartial& p) {
  for (const auto& e : events) {
    ++p.calls[e.fn];
    switch (e.fn) {
      case ApiFunction::listen:
        p.listens = true;
        break;
      case ApiFunction::accept:
      case ApiFunction::accept4:
        if (e.ret >= 0) {
          ++p.accepts;
          ++p.peers[peer_class(std::get<AddrArgs>(e.args).addr)];
        }
        break;
      case ApiFunction::sendto:
      case ApiFunction::sendmsg:
      case ApiFunction::sendmmsg: {
        const auto& a = std::get<IoArgs>(e.args);
        if (a.addr && a.addr->is_ip() && a.addr->is_multicast()) ++p.multicast_sends;
        break;
      }
      case ApiFunction::setsockopt: {
        const auto& a = std::get<SockoptArgs>(e.args);
        if (is_multicast_join(a.level, a.optname)) ++p.joins;
        break;
      }
      default:
        break;
    }
  }
}

TracePartial analyze_trace(const Trace& t, const ReportOptions& opt) {
  TracePartial p;
  p.app = t.meta.app_name;
  p.events = t.event_count();
  p.sockets = t.lifecycles.size();
  for (const auto& proc : t.processes) {
    if (opt.collapse_twins) {
      analyze_process_events(collapse_twins(proc.events), p);
    } else {
      analyze_process_events(proc.events, p);
    }
  }
  for (const auto& l : t.lifecycles) {
    ++p.types[l.sock_type];
    if (l.sock_type == SockType::stream) analyze_stream(l, p);
    if (l.sock_type == SockType::dgram) analyze_dgram(l, p);
    analyze_modes(l, p);
    analyze_timing(l, opt.timing_request, p);
  }
  return p;
}

class ReportMerger {
public:
  explicit ReportMerger(const ReportOptions& opt) { report_.timing_request = opt.timing_request; }

  void merge(TracePartial&& p) {
    auto& r = report_;
    ++r.traces;
    apps_.insert(p.app);
    r.sockets += p.sockets;
    r.events += p.events;
    for (const auto& [fn, n] : p.calls) {
      r.function_usage[fn].calls += n;
      fn_apps_[fn].insert(p.app);
    }
    add_all(r.socket_types, p.types);
    add_all(r.udp_classes, p.udp);
    add_all(r.tcp_classes, p.tcp);
    add_all(r.ioctl_requests, p.ioctls);
    for (const auto& [key, u] : p.sockopts) {
      auto& dst = r.sockopt_usage[key];
      dst.calls += u.calls;
      dst.gets += u.gets;
      dst.sets += u.sets;
      sockopt_apps_[key].insert(p.app);
    }
    for (const auto& [fn, cdf] : p.cdfs) r.recv_cdfs[fn].merge(cdf);
    r.flags.send_calls += p.flags.send_calls;
    r.flags.recv_calls += p.flags.recv_calls;
    add_all(r.flags.send, p.flags.send);
    add_all(r.flags.recv, p.flags.recv);

    auto& ti = r.tcpinfo;
    ti.stream_sockets += p.tcpinfo.stream_sockets;
    ti.sockets_with_tcpinfo += p.tcpinfo.sockets_with_tcpinfo;
    ti.sockets_once += p.tcpinfo.sockets_once;
    add_all(ti.per_socket_counts, p.tcpinfo.per_socket_counts);
    for (auto& v : p.tcpinfo.normalized_times) ti.normalized_times.push_back(std::move(v));

    add_all(r.modes.sockets, p.modes);
    for (const auto& [m, n] : p.modes) {
      if (n) mode_apps_[m].insert(p.app);
    }
    r.modes.status_flags_set.insert(p.status_flags.begin(), p.status_flags.end());
    r.modes.nonblocking_before_connect += p.before_connect;

    if (p.listens) listen_apps_.insert(p.app);
    if (p.accepts) accept_apps_.insert(p.app);
    r.accepts.accepts += p.accepts;
    add_all(r.accepts.peers, p.peers);

    for (auto& t : p.timing) r.ioctl_timing.push_back(t);

    r.multicast.multicast_sends += p.multicast_sends;
    r.multicast.joins += p.joins;
    if (p.multicast_sends) sender_apps_.insert(p.app);
    if (p.joins) joiner_apps_.insert(p.app);
  }

  StatsReport finish() && {
    auto& r = report_;
    r.apps = apps_.size();
    for (auto& [fn, u] : r.function_usage) u.apps = fn_apps_[fn].size();
    for (auto& [key, u] : r.sockopt_usage) u.apps = sockopt_apps_[key].size();
    for (const auto& [m, apps] : mode_apps_) r.modes.apps[m] = apps.size();
    r.accepts.listen_apps = listen_apps_.size();
    r.accepts.accept_apps = accept_apps_.size();
    r.multicast.sender_apps = sender_apps_.size();
    r.multicast.joiner_apps = joiner_apps_.size();
    std::vector<double> pooled;
    for (const auto& v : r.tcpinfo.normalized_times) pooled.insert(pooled.end(), v.begin(), v.end());
    if (!pooled.empty()) r.tcpinfo.ks_uniform = ks_distance_uniform(std::move(pooled));
    return std::move(r);
  }

private:
  template <typename Map>
  static void add_all(Map& into, const Map& from) {
    for (const auto& [k, v] : from) into[k] += v;
  }

  StatsReport report_;
  std::set<std::string> apps_;
  std::map<ApiFunction, std::set<std::string>> fn_apps_;
  std::map<SockoptKey, std::set<std::string>> sockopt_apps_;
  std::map<NonblockMethod, std::set<std::string>> mode_apps_;
  std::set<std::string> listen_apps_, accept_apps_, sender_apps_, joiner_apps_;
};

}  // namespace

StatsReport compute_report(const Corpus& corpus, const ReportOptions& options, Execution exec) {
  const auto& traces = corpus.traces();
  ReportMerger merger(options);
  if (exec == Execution::serial) {
    for (const auto& t : traces) merger.merge(analyze_trace(t, options));
    return std::move(merger).finish();
  }

  std::vector<TracePartial> partials(traces.size());
  const auto n = static_cast<std::ptrdiff_t>(traces.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) partials[i] = analyze_trace(traces[i], options);
  for (auto& p : partials) merger.merge(std::move(p));
  return std::move(merger).finish();
}

FunctionUsageMap function_usage(const Corpus& corpus, bool collapse) {
  ReportOptions opt;
  opt.collapse_twins = collapse;
  return compute_report(corpus, opt).function_usage;
}

std::map<std::string, Ratio> ioctl_breakdown(const Corpus& corpus) {
  auto r = compute_report(corpus);
  std::map<std::string, Ratio> out;
  for (const auto& [name, n] : r.ioctl_requests) out[name] = {n, r.ioctl_total()};
  return out;
}

std::map<SockoptKey, SockoptUsage> sockopt_usage(const Corpus& corpus) {
  return compute_report(corpus).sockopt_usage;
}

EmpiricalCdf recv_buffer_cdf(const Corpus& corpus, ApiFunction fn) {
  if (!is_recv_family(fn)) {
    throw WrongFunctionError(std::string(to_string(fn)) + " is not a receive function");
  }
  auto r = compute_report(corpus);
  auto it = r.recv_cdfs.find(fn);
  return it == r.recv_cdfs.end() ? EmpiricalCdf{} : it->second;
}

FlagStats flag_stats(const Corpus& corpus) { return compute_report(corpus).flags; }
TcpInfoStats tcpinfo_stats(const Corpus& corpus) { return compute_report(corpus).tcpinfo; }
ModeTransitionStats mode_transition_stats(const Corpus& corpus) { return compute_report(corpus).modes; }
AcceptOriginStats accept_origin_stats(const Corpus& corpus) { return compute_report(corpus).accepts; }
MulticastStats multicast_stats(const Corpus& corpus) { return compute_report(corpus).multicast; }

std::vector<IoctlTiming> ioctl_timing(const Corpus& corpus, unsigned long request) {
  ReportOptions opt;
  opt.timing_request = request;
  return compute_report(corpus, opt).ioctl_timing;
}

// ---- JSON -------------------------------------------------------------------

namespace {

using nlohmann::json;

json count_entry(std::uint64_t count, std::uint64_t total) {
  return {{"count", count}, {"fraction", round4(Ratio{count, total}.value())}};
}

}  // namespace

std::string report_to_json(const StatsReport& r) {
  json j = json::object();
  j["summary"] = {{"traces", r.traces}, {"apps", r.apps}, {"sockets", r.sockets}, {"events", r.events}};

  json fu = json::object();
  for (const auto& [fn, u] : r.function_usage) {
    fu[std::string(to_string(fn))] = {{"apps", u.apps},
                                      {"calls", u.calls},
                                      {"app_fraction", round4(Ratio{u.apps, r.apps}.value())}};
  }
  j["function_usage"] = fu;

  json st = json::object();
  for (const auto& [t, n] : r.socket_types) st[std::string(to_string(t))] = count_entry(n, r.sockets);
  j["socket_types"] = st;

  json udp = json::object();
  for (const auto& [c, n] : r.udp_classes) udp[std::string(to_string(c))] = count_entry(n, r.udp_total());
  j["udp_classes"] = {{"total", r.udp_total()}, {"classes", udp}};

  json tcp = json::object();
  std::uint64_t local = 0;
  for (const auto& [c, n] : r.tcp_classes) {
    tcp[std::string(to_string(c))] = count_entry(n, r.tcp_total());
    if (is_local(c)) local += n;
  }
  j["tcp_classes"] = {{"total", r.tcp_total()},
                      {"classes", tcp},
                      {"local", count_entry(local, r.tcp_total())},
                      {"remote", count_entry(r.tcp_total() - local, r.tcp_total())}};

  json io = json::object();
  for (const auto& [name, n] : r.ioctl_requests) io[name] = count_entry(n, r.ioctl_total());
  j["ioctl_breakdown"] = {{"total", r.ioctl_total()}, {"requests", io}};

  json so = json::object();
  for (const auto& [key, u] : r.sockopt_usage) {
    so[key.name()] = {{"apps", u.apps}, {"calls", u.calls}, {"get", u.gets}, {"set", u.sets}};
  }
  j["sockopt_usage"] = so;

  json cdfs = json::object();
  for (const auto& [fn, cdf] : r.recv_cdfs) {
    json points = json::array();
    for (const auto& [size, cum] : cdf.steps()) {
      points.push_back({size, round4(Ratio{cum, cdf.total()}.value())});
    }
    cdfs[std::string(to_string(fn))] = {{"calls", cdf.total()}, {"points", points}};
  }
  j["recv_cdfs"] = cdfs;

  auto flag_block = [](const std::map<std::string, std::uint64_t>& m, std::uint64_t calls) {
    json b = json::object();
    b["calls"] = calls;
    json f = json::object();
    for (const auto& [flag, n] : m) f[flag] = count_entry(n, calls);
    b["flags"] = f;
    return b;
  };
  j["flags"] = {{"send", flag_block(r.flags.send, r.flags.send_calls)},
                {"recv", flag_block(r.flags.recv, r.flags.recv_calls)}};

  const auto& ti = r.tcpinfo;
  json counts = json::object();
  for (const auto& [reads, sockets] : ti.per_socket_counts) counts[std::to_string(reads)] = sockets;
  j["tcp_info"] = {{"stream_sockets", ti.stream_sockets},
                   {"sockets", ti.sockets_with_tcpinfo},
                   {"socket_fraction", round4(ti.socket_fraction().value())},
                   {"once", ti.sockets_once},
                   {"once_fraction", round4(ti.once_fraction().value())},
                   {"per_socket_counts", counts},
                   {"ks_uniform", ti.ks_uniform ? json(round4(*ti.ks_uniform)) : json(nullptr)}};

  json ms = json::object(), ma = json::object();
  for (const auto& [m, n] : r.modes.sockets) ms[std::string(to_string(m))] = n;
  for (const auto& [m, n] : r.modes.apps) ma[std::string(to_string(m))] = n;
  j["nonblocking"] = {{"sockets", ms},
                      {"apps", ma},
                      {"status_flags_set", r.modes.status_flags_set},
                      {"before_connect", r.modes.nonblocking_before_connect}};

  json peers = json::object();
  for (const auto& [c, n] : r.accepts.peers) peers[std::string(to_string(c))] = count_entry(n, r.accepts.accepts);
  j["accepts"] = {{"listen_apps", r.accepts.listen_apps},
                  {"accept_apps", r.accepts.accept_apps},
                  {"accepts", r.accepts.accepts},
                  {"peers", peers}};

  j["multicast"] = {{"sender_apps", r.multicast.sender_apps},
                    {"joiner_apps", r.multicast.joiner_apps},
                    {"sends", r.multicast.multicast_sends},
                    {"joins", r.multicast.joins}};

  json timing = json::array();
  for (const auto& t : r.ioctl_timing) {
    timing.push_back({{"socket", t.socket_id},
                      {"samples", t.samples},
                      {"mean_ms", round4(t.mean_ms)},
                      {"stddev_ms", round4(t.stddev_ms)}});
  }
  j["ioctl_timing"] = {{"request", ioctl_request_name(r.timing_request)}, {"sockets", timing}};

  return j.dump(2) + "\n";
}

}  // namespace sockscope
