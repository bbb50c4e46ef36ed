#include "sockscope/lifecycle.hpp"

#include <fcntl.h>
#include <sys/socket.h>

#include <algorithm>
#include <unordered_map>

namespace sockscope {

std::string_view to_string(SockType t) {
  switch (t) {
    case SockType::stream: return "stream";
    case SockType::dgram: return "dgram";
    case SockType::other: break;
  }
  return "other";
}

SockType sock_type_of(int domain, int base_type) {
  if (domain != AF_INET && domain != AF_INET6) return SockType::other;
  switch (base_type) {
    case SOCK_STREAM: return SockType::stream;
    case SOCK_DGRAM: return SockType::dgram;
    default: return SockType::other;
  }
}

namespace {

class Builder {
public:
  Builder(long pid, std::uint64_t first_id) : pid_(pid), next_id_(first_id) {}

  void feed(TraceEvent e) {
    if (!e.args_consistent()) {
      out_.unattributed.push_back(std::move(e));
      return;
    }
    switch (e.fn) {
      case ApiFunction::socket:
      case ApiFunction::socketpair:
        on_socket(std::move(e));
        return;
      case ApiFunction::accept:
      case ApiFunction::accept4:
        on_accept(std::move(e));
        return;
      case ApiFunction::dup:
      case ApiFunction::dup2:
      case ApiFunction::dup3:
        on_dup(std::move(e));
        return;
      case ApiFunction::close:
        on_close(std::move(e));
        return;
      case ApiFunction::fcntl: {
        const auto& a = std::get<FcntlArgs>(e.args);
        if ((a.cmd == F_DUPFD || a.cmd == F_DUPFD_CLOEXEC) && e.ret >= 0) {
          if (auto lc = lookup(a.fd)) {
            alias(static_cast<int>(e.ret), *lc);
            push(*lc, std::move(e));
            return;
          }
        }
        break;
      }
      default:
        break;
    }
    attribute(std::move(e));
  }

  LifecycleSet finish() && { return std::move(out_); }

private:
  std::optional<std::size_t> lookup(int fd) const {
    auto it = fd_map_.find(fd);
    if (it == fd_map_.end()) return std::nullopt;
    return it->second;
  }

  // Forgets `fd`. Returns the lifecycle it belonged to.
  std::optional<std::size_t> release(int fd) {
    auto it = fd_map_.find(fd);
    if (it == fd_map_.end()) return std::nullopt;
    std::size_t lc = it->second;
    fd_map_.erase(it);
    --live_[lc];
    return lc;
  }

  void alias(int fd, std::size_t lc) {
    release(fd);
    fd_map_[fd] = lc;
    ++live_[lc];
    out_.lifecycles[lc].fds.insert(fd);
  }

  std::size_t open(int domain, SockType type) {
    SocketLifecycle l;
    l.socket_id = next_id_++;
    l.pid = pid_;
    l.domain = domain;
    l.sock_type = type;
    out_.lifecycles.push_back(std::move(l));
    live_.push_back(0);
    return out_.lifecycles.size() - 1;
  }

  void push(std::size_t lc, TraceEvent e) { out_.lifecycles[lc].events.push_back(std::move(e)); }

  void attribute(TraceEvent e) {
    auto fd = e.subject_fd();
    if (fd) {
      if (auto lc = lookup(*fd)) {
        push(*lc, std::move(e));
        return;
      }
    }
    out_.unattributed.push_back(std::move(e));
  }

  void on_socket(TraceEvent e) {
    const auto& a = std::get<SocketArgs>(e.args);
    bool is_pair = e.fn == ApiFunction::socketpair;
    if (e.ret < 0 || (is_pair && !a.pair)) {
      out_.unattributed.push_back(std::move(e));
      return;
    }
    std::size_t lc = open(a.domain, sock_type_of(a.domain, a.type));
    if (is_pair) {
      alias((*a.pair)[0], lc);
      alias((*a.pair)[1], lc);
    } else {
      alias(static_cast<int>(e.ret), lc);
    }
    push(lc, std::move(e));
  }

  void on_accept(TraceEvent e) {
    const auto& a = std::get<AddrArgs>(e.args);
    auto listener = lookup(a.fd);
    if (e.ret < 0) {
      if (listener) {
        push(*listener, std::move(e));
      } else {
        out_.unattributed.push_back(std::move(e));
      }
      return;
    }
    int domain = listener ? out_.lifecycles[*listener].domain
                 : (a.addr && a.addr->family == AddressFamily::ipv6) ? AF_INET6
                 : (a.addr && a.addr->family == AddressFamily::unix_path) ? AF_UNIX
                                                                          : AF_INET;
    SockType type = listener ? out_.lifecycles[*listener].sock_type : sock_type_of(domain, SOCK_STREAM);
    std::size_t lc = open(domain, type);
    alias(static_cast<int>(e.ret), lc);
    push(lc, std::move(e));
  }

  void on_dup(TraceEvent e) {
    const auto& a = std::get<DupArgs>(e.args);
    auto lc = lookup(a.oldfd);
    int newfd = e.fn == ApiFunction::dup ? static_cast<int>(e.ret) : a.newfd;
    if (!lc) {
      // dup2 of a non-socket over a socket fd closes that socket implicitly.
      if (e.ret >= 0 && e.fn != ApiFunction::dup) release(newfd);
      out_.unattributed.push_back(std::move(e));
      return;
    }
    if (e.ret >= 0 && newfd != a.oldfd) alias(newfd, *lc);
    push(*lc, std::move(e));
  }

  void on_close(TraceEvent e) {
    int fd = std::get<FdArgs>(e.args).fd;
    auto lc = release(fd);
    if (!lc) {
      out_.unattributed.push_back(std::move(e));
      return;
    }
    push(*lc, std::move(e));
    if (live_[*lc] == 0) out_.lifecycles[*lc].closed = true;
  }

  long pid_;
  std::uint64_t next_id_;
  std::unordered_map<int, std::size_t> fd_map_;
  std::vector<int> live_;
  LifecycleSet out_;
};

bool twin_args_match(const TraceEvent& simple, const TraceEvent& complex) {
  switch (arg_kind(simple.fn)) {
    case ArgKind::io: {
      const auto& a = std::get<IoArgs>(simple.args);
      const auto& b = std::get<IoArgs>(complex.args);
      return a.fd == b.fd && a.buf_size == b.buf_size;
    }
    case ArgKind::addr:
      return std::get<AddrArgs>(simple.args).fd == std::get<AddrArgs>(complex.args).fd;
    case ArgKind::epoll: {
      const auto& a = std::get<EpollArgs>(simple.args);
      const auto& b = std::get<EpollArgs>(complex.args);
      return a.epfd == b.epfd && a.maxevents == b.maxevents;
    }
    default:
      return false;
  }
}

}  // namespace

LifecycleSet build_lifecycles(std::vector<TraceEvent> events, long pid, std::uint64_t first_id) {
  std::stable_sort(events.begin(), events.end(),
                   [](const TraceEvent& a, const TraceEvent& b) { return a.ts_us < b.ts_us; });
  Builder b(pid, first_id);
  for (auto& e : events) b.feed(std::move(e));
  return std::move(b).finish();
}

std::vector<TraceEvent> collapse_twins(const std::vector<TraceEvent>& events) {
  std::vector<TraceEvent> out;
  out.reserve(events.size());
  std::unordered_map<std::int64_t, std::size_t> last_on_thread;
  for (const auto& e : events) {
    auto it = last_on_thread.find(e.tid);
    if (it != last_on_thread.end()) {
      TraceEvent& prev = out[it->second];
      if (!prev.twin_collapsed && complex_twin(prev.fn) == e.fn && twin_args_match(prev, e)) {
        prev.twin_collapsed = true;
        continue;
      }
    }
    out.push_back(e);
    last_on_thread[e.tid] = out.size() - 1;
  }
  return out;
}

}  // namespace sockscope
