#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sockscope/api_function.hpp"
#include "sockscope/net_address.hpp"

namespace sockscope {

struct SocketArgs {
  int domain = 0;
  int type = 0;  // base type, creation flags split out
  int protocol = 0;
  std::uint32_t creation_flags = 0;  // SOCK_NONBLOCK | SOCK_CLOEXEC
  std::optional<std::array<int, 2>> pair;  // socketpair() result

  friend bool operator==(const SocketArgs&, const SocketArgs&) = default;
};

// bind/connect/accept*/getsockname/getpeername. For accept* `fd` is the
// listening socket and the new socket is the return value.
struct AddrArgs {
  int fd = -1;
  std::optional<NetAddress> addr;
  std::optional<std::uint32_t> flags;  // accept4 SOCK_* flags

  friend bool operator==(const AddrArgs&, const AddrArgs&) = default;
};

// Sizes only. There is deliberately no field able to hold payload bytes.
struct IoArgs {
  int fd = -1;
  std::uint64_t buf_size = 0;
  std::uint32_t flags = 0;  // MSG_*
  std::optional<std::uint32_t> iov_count;  // iovec entries, or message count for *mmsg
  std::optional<NetAddress> addr;  // sendto destination / recvfrom source / msg_name

  friend bool operator==(const IoArgs&, const IoArgs&) = default;
};

struct Timeval {
  std::int64_t sec = 0;
  std::int64_t usec = 0;
  friend bool operator==(const Timeval&, const Timeval&) = default;
};

struct Linger {
  int onoff = 0;
  int seconds = 0;
  friend bool operator==(const Linger&, const Linger&) = default;
};

struct OpaqueValue {
  std::uint32_t length = 0;
  friend bool operator==(const OpaqueValue&, const OpaqueValue&) = default;
};

using OptvalSummary = std::variant<std::monostate, std::int64_t, Timeval, Linger, OpaqueValue>;

struct SockoptArgs {
  int fd = -1;
  int level = 0;
  int optname = 0;
  OptvalSummary optval;

  friend bool operator==(const SockoptArgs&, const SockoptArgs&) = default;
};

struct FcntlArgs {
  int fd = -1;
  int cmd = 0;
  std::optional<std::int64_t> flag_word;  // F_SETFL argument, F_GETFL result, etc.

  friend bool operator==(const FcntlArgs&, const FcntlArgs&) = default;
};

struct IoctlArgs {
  int fd = -1;
  unsigned long request = 0;
  std::optional<std::int64_t> value;  // int-valued requests such as FIONBIO

  friend bool operator==(const IoctlArgs&, const IoctlArgs&) = default;
};

struct PollArgs {
  std::uint64_t nfds = 0;
  std::int64_t timeout_ms = -1;

  friend bool operator==(const PollArgs&, const PollArgs&) = default;
};

struct EpollArgs {
  int epfd = -1;
  std::optional<int> op;
  std::optional<int> fd;
  std::optional<std::uint32_t> events;
  std::optional<int> maxevents;
  std::optional<std::int64_t> timeout_ms;
  std::optional<int> size_or_flags;  // epoll_create size / epoll_create1 flags

  friend bool operator==(const EpollArgs&, const EpollArgs&) = default;
};

struct DupArgs {
  int oldfd = -1;
  int newfd = -1;
  std::optional<std::uint32_t> flags;

  friend bool operator==(const DupArgs&, const DupArgs&) = default;
};

struct FdArgs {
  int fd = -1;
  std::optional<int> arg;  // listen backlog, shutdown how

  friend bool operator==(const FdArgs&, const FdArgs&) = default;
};

struct SendfileArgs {
  int out_fd = -1;
  int in_fd = -1;
  std::uint64_t count = 0;

  friend bool operator==(const SendfileArgs&, const SendfileArgs&) = default;
};

using FnArgs = std::variant<SocketArgs, AddrArgs, IoArgs, SockoptArgs, FcntlArgs, IoctlArgs,
                            PollArgs, EpollArgs, DupArgs, FdArgs, SendfileArgs>;

/// The variant index an event of `fn` must carry.
constexpr std::size_t args_index(ApiFunction fn) { return static_cast<std::size_t>(arg_kind(fn)); }

static_assert(std::variant_size_v<FnArgs> == static_cast<std::size_t>(ArgKind::sendfile) + 1);

struct TraceEvent {
  std::int64_t ts_us = 0;
  std::int64_t tid = 0;
  ApiFunction fn = ApiFunction::close;
  FnArgs args = FdArgs{};
  std::int64_t ret = 0;
  int err = 0;
  // Set by collapse_twins on a simple call that absorbed its complex sibling.
  // In-memory only; never serialized.
  bool twin_collapsed = false;

  bool args_consistent() const { return args.index() == args_index(fn); }

  /// The socket descriptor this event operates on, if any. For dup-family and
  /// F_DUPFD this is the source descriptor; for epoll_ctl the target.
  std::optional<int> subject_fd() const;

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

struct TraceMeta {
  std::string app_name;
  std::string command_line;
  std::string os_name;
  std::optional<std::string> kernel_version;
  std::optional<std::string> network_config_summary;
  std::string tracer_version;
  std::string started_at;  // RFC 3339
  std::optional<std::string> salt_fingerprint;  // 8 hex chars
  bool metadata_opt_out = false;

  friend bool operator==(const TraceMeta&, const TraceMeta&) = default;
};

inline constexpr std::string_view kTracerVersion = "0.1.0";

}  // namespace sockscope
