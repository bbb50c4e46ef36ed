#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sockscope/analysis.hpp"
#include "sockscope/corpus.hpp"
#include "sockscope/error.hpp"

namespace sockscope {

/// A generation spec that cannot be realized. Lists every offending field.
class GenSpecError : public Error {
public:
  explicit GenSpecError(std::vector<std::string> offenders);
  const std::vector<std::string>& offenders() const noexcept { return offenders_; }

private:
  std::vector<std::string> offenders_;
};

struct IoCallSpec {
  ApiFunction fn = ApiFunction::send;
  std::uint64_t calls = 0;
  std::map<std::uint64_t, double> sizes;  // buffer size -> share of the calls
};

/// Targets for a synthetic corpus. Mixes are shares that must be realizable
/// exactly at the requested counts; per-feature knobs are plain counts.
struct CorpusGenSpec {
  std::uint64_t seed = 0;
  std::uint64_t apps = 1;
  std::uint64_t traces_per_app = 1;
  std::uint64_t sockets = 0;

  std::map<SockType, double> socket_types{{SockType::stream, 1.0}};
  std::map<UdpClass, double> udp_classes{{UdpClass::data, 1.0}};
  std::map<TcpClass, double> tcp_classes{{TcpClass::remote_data, 1.0}};

  // ioctl calls spread over netinfo_ioctl datagram sockets.
  std::uint64_t ioctl_total = 0;
  std::map<std::string, double> ioctl_mix;  // request name or "other" -> share

  // Payload calls spread over remote_data stream sockets. When both lists are
  // empty every such socket gets one send and one recv.
  std::vector<IoCallSpec> send_calls;
  std::vector<IoCallSpec> recv_calls;
  std::map<std::string, double> send_flags;  // share of flag-capable send calls
  std::map<std::string, double> recv_flags;

  double opening_pattern = 0;  // share of all sockets, realized on remote_data sockets
  double closing_pattern = 0;  // share of all sockets, realized on remote sockets

  std::uint64_t tcpinfo_sockets = 0;  // remote stream sockets reading TCP_INFO
  std::uint64_t tcpinfo_once = 0;     // of those, sockets reading it exactly once
  std::uint32_t tcpinfo_max_reads = 5;

  std::uint64_t listeners = 0;  // listening sockets, taken from local_other
  std::map<PeerClass, std::uint64_t> accept_peers;  // accepted sockets, also local_other

  std::uint64_t multicast_sender_apps = 0;
  std::uint64_t multicast_joiner_apps = 0;
  std::uint64_t nonblock_creation_flag_apps = 0;
  std::uint64_t nonblock_ioctl_apps = 0;

  // Target share of apps calling a function. Apps missing it get one failed
  // call on an invalid descriptor, which touches no socket statistic.
  std::map<ApiFunction, double> app_functions;

  bool twins = false;  // follow each send/recv with its sendto/recvfrom twin

  // Periodic SIOCGSTAMP reads on datagram data sockets.
  std::uint64_t stamp_sockets = 0;
  std::uint64_t stamp_reads = 0;
  double stamp_period_ms = 1000;
  double stamp_jitter_ms = 0;

  bool opt_out = false;
};

CorpusGenSpec parse_gen_spec(std::string_view json_text);
CorpusGenSpec load_gen_spec(const std::filesystem::path& path);

struct GeneratedTrace {
  std::string dir;  // relative to the corpus root, e.g. "app-003/trace-00"
  TraceMeta meta;
  long pid = 0;
  std::vector<TraceEvent> events;
};

/// Deterministic for a given spec. Throws GenSpecError on infeasible targets.
std::vector<GeneratedTrace> generate_corpus(const CorpusGenSpec& spec);

/// Writes meta.json and events.<pid>.jsonl under root/<dir>. Refuses a
/// non-empty root.
void write_corpus(const std::filesystem::path& root, const std::vector<GeneratedTrace>& traces);

/// In-memory equivalent of write_corpus followed by load_corpus.
Corpus to_corpus(const std::vector<GeneratedTrace>& traces, const LoadOptions& options = {});

enum class ReadPlacement : std::uint8_t { uniform, burst };

/// One remote stream connection lasting `duration_s` with `reads` TCP_INFO
/// reads, placed uniformly over the lifetime or bunched into its first 2%.
GeneratedTrace make_tcpinfo_connection(double duration_s, std::uint64_t reads,
                                       ReadPlacement placement, std::uint64_t seed);

}  // namespace sockscope
