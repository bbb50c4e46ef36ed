#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "sockscope/trace_event.hpp"

namespace sockscope {

enum class SockType : std::uint8_t { stream, dgram, other };

std::string_view to_string(SockType t);
/// TCP and UDP are stream and datagram sockets of the IP families. Everything
/// else, unix-domain sockets included, is `other`.
SockType sock_type_of(int domain, int base_type);

/// Everything that happened to one socket, across every descriptor that
/// referred to it (dup aliases included). A new socket on a reused fd number
/// starts a new lifecycle.
struct SocketLifecycle {
  std::uint64_t socket_id = 0;
  long pid = 0;
  SockType sock_type = SockType::other;
  int domain = 0;
  std::vector<TraceEvent> events;
  std::set<int> fds;
  bool closed = false;  // a close() released the last descriptor

  friend bool operator==(const SocketLifecycle&, const SocketLifecycle&) = default;
};

struct LifecycleSet {
  std::vector<SocketLifecycle> lifecycles;
  // Events not attributable to a socket created by a traced call: file I/O on
  // non-socket fds, poll/select/epoll_wait, failed creations, and calls on
  // fds inherited from before tracing started.
  std::vector<TraceEvent> unattributed;
};

/// Groups the events of one process by socket. Events are merged across
/// threads by timestamp (stable, so per-thread order is kept on ties).
/// Lifecycle ids are assigned sequentially from `first_id`.
LifecycleSet build_lifecycles(std::vector<TraceEvent> events, long pid = 0,
                              std::uint64_t first_id = 0);

/// Merges each simple twin call (send, recv, accept, epoll_wait) with the
/// complex sibling recorded immediately after it on the same thread, when
/// both name the same descriptor and size. The merged event keeps the simple
/// name. Each simple call absorbs at most one sibling, which makes the
/// transformation idempotent.
std::vector<TraceEvent> collapse_twins(const std::vector<TraceEvent>& events);

}  // namespace sockscope
