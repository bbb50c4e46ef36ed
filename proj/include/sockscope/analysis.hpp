#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sockscope/constants.hpp"
#include "sockscope/corpus.hpp"

namespace sockscope {

/// Exact count ratio. Fractions in reports are derived from these, so
/// comparisons against rational targets are exact.
struct Ratio {
  std::uint64_t num = 0;
  std::uint64_t den = 0;

  double value() const { return den ? static_cast<double>(num) / static_cast<double>(den) : 0.0; }
  /// True when num/den == target exactly, i.e. target*den is the integer num.
  bool equals(double target) const;

  friend bool operator==(const Ratio&, const Ratio&) = default;
};

enum class UdpClass : std::uint8_t { netinfo_ioctl, connect_no_data, data, other };
enum class TcpClass : std::uint8_t {
  local_rcvtimeo_only,
  local_immediate_close,
  local_wireless_check,
  local_other,
  remote_data,
  remote_no_data,
};
enum class NonblockMethod : std::uint8_t { creation_flag, fcntl, ioctl, blocking };
enum class PeerClass : std::uint8_t { loopback, link_local, remote, unknown };
enum class FlagDirection : std::uint8_t { send, recv };

std::string_view to_string(UdpClass c);
std::string_view to_string(TcpClass c);
std::string_view to_string(NonblockMethod m);
std::string_view to_string(PeerClass p);
std::string_view to_string(FlagDirection d);

bool is_local(TcpClass c);

struct FunctionUsage {
  std::uint64_t apps = 0;
  std::uint64_t calls = 0;
  friend bool operator==(const FunctionUsage&, const FunctionUsage&) = default;
};
using FunctionUsageMap = std::map<ApiFunction, FunctionUsage>;

struct SockoptKey {
  int level = 0;
  int optname = 0;
  std::string name() const;  // "SOL_SOCKET:SO_RCVTIMEO"
  friend auto operator<=>(const SockoptKey&, const SockoptKey&) = default;
};

struct SockoptUsage {
  std::uint64_t apps = 0;
  std::uint64_t calls = 0;
  std::uint64_t gets = 0;
  std::uint64_t sets = 0;
  friend bool operator==(const SockoptUsage&, const SockoptUsage&) = default;
};

/// Empirical CDF over buffer sizes, stored as a size histogram.
class EmpiricalCdf {
public:
  void add(std::uint64_t size, std::uint64_t count = 1);
  void merge(const EmpiricalCdf& other);

  std::uint64_t total() const { return total_; }
  bool empty() const { return total_ == 0; }
  /// P(size <= x) as an exact ratio.
  Ratio at(std::uint64_t x) const;
  /// (size, cumulative count) at every observed size, ascending.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> steps() const;
  const std::map<std::uint64_t, std::uint64_t>& histogram() const { return counts_; }

  friend bool operator==(const EmpiricalCdf&, const EmpiricalCdf&) = default;

private:
  std::map<std::uint64_t, std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

// Flags tracked per direction; anything else lands in "other".
inline constexpr std::string_view kTrackedMsgFlags[] = {
    "MSG_NOSIGNAL", "MSG_DONTWAIT", "MSG_MORE", "MSG_PEEK", "MSG_WAITALL",
};

struct FlagStats {
  std::uint64_t send_calls = 0;
  std::uint64_t recv_calls = 0;
  std::map<std::string, std::uint64_t> send;  // flag -> calls carrying it
  std::map<std::string, std::uint64_t> recv;

  Ratio fraction(FlagDirection dir, std::string_view flag) const;
  friend bool operator==(const FlagStats&, const FlagStats&) = default;
};

struct TcpInfoStats {
  std::uint64_t stream_sockets = 0;
  std::uint64_t sockets_with_tcpinfo = 0;
  std::uint64_t sockets_once = 0;
  std::map<std::uint64_t, std::uint64_t> per_socket_counts;  // reads -> sockets
  std::vector<std::vector<double>> normalized_times;  // per socket, socket-id order
  std::optional<double> ks_uniform;

  Ratio socket_fraction() const { return {sockets_with_tcpinfo, stream_sockets}; }
  Ratio once_fraction() const { return {sockets_once, sockets_with_tcpinfo}; }
  friend bool operator==(const TcpInfoStats&, const TcpInfoStats&) = default;
};

struct ModeTransitionStats {
  std::map<NonblockMethod, std::uint64_t> sockets;
  std::map<NonblockMethod, std::uint64_t> apps;
  std::set<std::string> status_flags_set;  // every O_* flag passed to F_SETFL
  std::uint64_t nonblocking_before_connect = 0;
  friend bool operator==(const ModeTransitionStats&, const ModeTransitionStats&) = default;
};

struct AcceptOriginStats {
  std::uint64_t listen_apps = 0;
  std::uint64_t accept_apps = 0;
  std::uint64_t accepts = 0;
  std::map<PeerClass, std::uint64_t> peers;
  friend bool operator==(const AcceptOriginStats&, const AcceptOriginStats&) = default;
};

struct IoctlTiming {
  std::uint64_t socket_id = 0;
  std::uint64_t samples = 0;  // matching ioctl calls
  double mean_ms = 0;
  double stddev_ms = 0;  // population standard deviation
  friend bool operator==(const IoctlTiming&, const IoctlTiming&) = default;
};

struct MulticastStats {
  std::uint64_t sender_apps = 0;
  std::uint64_t joiner_apps = 0;
  std::uint64_t multicast_sends = 0;
  std::uint64_t joins = 0;
  friend bool operator==(const MulticastStats&, const MulticastStats&) = default;
};

struct StatsReport {
  std::uint64_t traces = 0;
  std::uint64_t apps = 0;
  std::uint64_t sockets = 0;
  std::uint64_t events = 0;

  FunctionUsageMap function_usage;
  std::map<SockType, std::uint64_t> socket_types;
  std::map<UdpClass, std::uint64_t> udp_classes;
  std::map<TcpClass, std::uint64_t> tcp_classes;
  std::map<std::string, std::uint64_t> ioctl_requests;  // dgram sockets only
  std::map<SockoptKey, SockoptUsage> sockopt_usage;     // stream sockets only
  std::map<ApiFunction, EmpiricalCdf> recv_cdfs;        // stream sockets only
  FlagStats flags;                                      // stream sockets only
  TcpInfoStats tcpinfo;
  ModeTransitionStats modes;
  AcceptOriginStats accepts;
  MulticastStats multicast;
  unsigned long timing_request = ioctl_req::kSIOCGSTAMP;
  std::vector<IoctlTiming> ioctl_timing;

  std::uint64_t udp_total() const;
  std::uint64_t tcp_total() const;
  std::uint64_t ioctl_total() const;
  Ratio socket_type_share(SockType t) const;
  Ratio udp_share(UdpClass c) const;
  Ratio tcp_share(TcpClass c) const;
  Ratio ioctl_share(const std::string& request) const;

  friend bool operator==(const StatsReport&, const StatsReport&) = default;
};

struct ReportOptions {
  bool collapse_twins = false;  // applied to process streams for function usage
  unsigned long timing_request = ioctl_req::kSIOCGSTAMP;
};

enum class Execution : std::uint8_t { serial, parallel };

/// Full report. The parallel path analyzes traces concurrently and merges in
/// trace order; both paths produce identical reports.
StatsReport compute_report(const Corpus& corpus, const ReportOptions& options = {},
                           Execution exec = Execution::parallel);

/// Sorted-key JSON, fractions rounded to 4 decimals. Byte-stable.
std::string report_to_json(const StatsReport& report);

// Individual statistics. Each is the matching slice of compute_report.
FunctionUsageMap function_usage(const Corpus& corpus, bool collapse_twins = false);
UdpClass classify_udp(const SocketLifecycle& lifecycle);
TcpClass classify_tcp(const SocketLifecycle& lifecycle);
std::map<std::string, Ratio> ioctl_breakdown(const Corpus& corpus);
std::map<SockoptKey, SockoptUsage> sockopt_usage(const Corpus& corpus);
EmpiricalCdf recv_buffer_cdf(const Corpus& corpus, ApiFunction fn);
FlagStats flag_stats(const Corpus& corpus);
TcpInfoStats tcpinfo_stats(const Corpus& corpus);
ModeTransitionStats mode_transition_stats(const Corpus& corpus);
AcceptOriginStats accept_origin_stats(const Corpus& corpus);
std::vector<IoctlTiming> ioctl_timing(const Corpus& corpus, unsigned long request);
MulticastStats multicast_stats(const Corpus& corpus);

NonblockMethod nonblock_method(const SocketLifecycle& lifecycle);
PeerClass peer_class(const std::optional<NetAddress>& peer);

/// Kolmogorov-Smirnov distance between the sample and U[0,1].
double ks_distance_uniform(std::vector<double> sample);

// Request names the ioctl breakdown reports individually.
inline constexpr std::string_view kNetinfoRequests[] = {
    "SIOCGIFADDR", "SIOCGIFNAME", "SIOCGIFFLAGS", "SIOCGIFNETMASK", "SIOCGIFBRDADDR",
};

bool is_multicast_join(int level, int optname);

}  // namespace sockscope
