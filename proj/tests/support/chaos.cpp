#include "chaos.hpp"

#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/ioctl.h>
#include <sys/socket.h>

#include "sockscope/constants.hpp"
#include "sockscope/rng.hpp"

namespace sockscope::test {

namespace {

NetAddress random_addr(Rng& rng) {
  switch (rng.below(6)) {
    case 0: return NetAddress::ipv4(0x7f000001, 80);
    case 1: return NetAddress::ipv4(0xa9fe0102, 443);
    case 2: return NetAddress::ipv4(0xeffffffa, 1900);
    case 3: {
      std::array<std::uint8_t, 16> b{};
      b[0] = 0x20;
      b[1] = 0x01;
      b[15] = static_cast<std::uint8_t>(rng.below(256));
      return NetAddress::ipv6(b, 443);
    }
    case 4: return NetAddress::unix_path();
    default: return NetAddress::ipv4(0x5db8d800 + static_cast<std::uint32_t>(rng.below(256)), 443);
  }
}

std::uint32_t random_msg_flags(Rng& rng) {
  static constexpr std::uint32_t kFlags[] = {MSG_NOSIGNAL, MSG_DONTWAIT, MSG_MORE, MSG_PEEK,
                                             MSG_WAITALL, MSG_OOB, MSG_TRUNC};
  std::uint32_t f = 0;
  for (auto flag : kFlags)
    if (rng.chance(0.2)) f |= flag;
  return f;
}

unsigned long random_ioctl(Rng& rng) {
  static constexpr unsigned long kReqs[] = {
      ioctl_req::kSIOCGIFCONF, ioctl_req::kSIOCGIFFLAGS, ioctl_req::kSIOCGIFADDR, ioctl_req::kSIOCGIFNAME,
      ioctl_req::kSIOCGIFNETMASK, ioctl_req::kSIOCGIFBRDADDR,
      ioctl_req::kSIOCGIFINDEX, ioctl_req::kSIOCGIWNAME, ioctl_req::kSIOCGSTAMP,
      ioctl_req::kFIONBIO, ioctl_req::kFIONREAD, 0x5401};
  return kReqs[rng.below(std::size(kReqs))];
}

SockoptArgs random_sockopt(Rng& rng, int fd) {
  static constexpr std::pair<int, int> kOpts[] = {
      {SOL_SOCKET, SO_RCVTIMEO}, {SOL_SOCKET, SO_ERROR},  {SOL_SOCKET, SO_LINGER},
      {SOL_SOCKET, SO_DEBUG},    {IPPROTO_TCP, TCP_INFO}, {IPPROTO_TCP, TCP_NODELAY},
      {IPPROTO_IP, IP_ADD_MEMBERSHIP}, {IPPROTO_IPV6, IPV6_ADD_MEMBERSHIP}};
  auto [level, opt] = kOpts[rng.below(std::size(kOpts))];
  SockoptArgs a{fd, level, opt, std::monostate{}};
  if (rng.chance(0.5)) a.optval = std::int64_t{static_cast<std::int64_t>(rng.below(3))};
  return a;
}

}  // namespace

std::vector<TraceEvent> chaos_events(std::uint64_t seed, std::size_t count, int max_fd) {
  Rng rng(seed);
  std::vector<TraceEvent> out;
  out.reserve(count);
  std::int64_t ts = 0;
  auto fd = [&] { return static_cast<int>(rng.between(0, max_fd)); };
  for (std::size_t i = 0; i < count; ++i) {
    TraceEvent e;
    if (!rng.chance(0.15)) ts += static_cast<std::int64_t>(rng.below(200));
    e.ts_us = ts;
    e.tid = 100 + static_cast<std::int64_t>(rng.below(3));
    bool fail = rng.chance(0.1);
    e.ret = 0;
    auto fn = static_cast<ApiFunction>(rng.below(kApiFunctionCount));
    // Creation calls are rarer in real traces but drive everything else.
    if (rng.chance(0.12)) fn = rng.chance(0.85) ? ApiFunction::socket : ApiFunction::socketpair;
    e.fn = fn;
    switch (arg_kind(fn)) {
      case ArgKind::socket: {
        SocketArgs a;
        static constexpr int kDomains[] = {AF_INET, AF_INET6, AF_UNIX};
        static constexpr int kTypes[] = {SOCK_STREAM, SOCK_DGRAM, SOCK_RAW};
        a.domain = kDomains[rng.below(3)];
        a.type = rng.chance(0.5) ? SOCK_STREAM : kTypes[rng.below(3)];
        if (rng.chance(0.2)) a.creation_flags |= SOCK_NONBLOCK;
        if (rng.chance(0.1)) a.creation_flags |= SOCK_CLOEXEC;
        if (fn == ApiFunction::socketpair) {
          if (!fail) a.pair = std::array<int, 2>{fd(), fd()};
        } else {
          e.ret = fail ? -1 : fd();
        }
        e.args = a;
        break;
      }
      case ArgKind::addr: {
        AddrArgs a;
        a.fd = fd();
        if (rng.chance(0.9)) a.addr = random_addr(rng);
        if (fn == ApiFunction::accept4) a.flags = rng.chance(0.3) ? static_cast<unsigned>(SOCK_NONBLOCK) : 0u;
        if (fn == ApiFunction::accept || fn == ApiFunction::accept4) e.ret = fail ? -1 : fd();
        e.args = a;
        break;
      }
      case ArgKind::io: {
        IoArgs a;
        a.fd = fd();
        static constexpr std::uint64_t kSizes[] = {0, 1, 5, 100, 4096, 8192};
        a.buf_size = kSizes[rng.below(std::size(kSizes))];
        if (takes_msg_flags(fn)) a.flags = random_msg_flags(rng);
        if (fn == ApiFunction::sendto || fn == ApiFunction::sendmsg || fn == ApiFunction::recvfrom) {
          if (rng.chance(0.6)) a.addr = random_addr(rng);
        }
        if (fn == ApiFunction::sendmsg || fn == ApiFunction::recvmsg || fn == ApiFunction::writev)
          a.iov_count = static_cast<std::uint32_t>(rng.between(1, 4));
        e.ret = fail ? -1 : static_cast<std::int64_t>(a.buf_size);
        e.args = a;
        break;
      }
      case ArgKind::sockopt:
        e.args = random_sockopt(rng, fd());
        break;
      case ArgKind::fcntl: {
        FcntlArgs a;
        a.fd = fd();
        static constexpr int kCmds[] = {F_GETFL, F_SETFL, F_DUPFD, F_DUPFD_CLOEXEC, F_GETFD};
        a.cmd = kCmds[rng.below(std::size(kCmds))];
        if (a.cmd == F_SETFL) {
          a.flag_word = (rng.chance(0.7) ? O_NONBLOCK : 0) | (rng.chance(0.2) ? O_APPEND : 0) | O_RDWR;
        } else if (a.cmd == F_DUPFD || a.cmd == F_DUPFD_CLOEXEC) {
          a.flag_word = 0;
          e.ret = fail ? -1 : fd();
        }
        e.args = a;
        break;
      }
      case ArgKind::ioctl: {
        IoctlArgs a;
        a.fd = fd();
        a.request = random_ioctl(rng);
        if (a.request == ioctl_req::kFIONBIO && rng.chance(0.8)) a.value = rng.below(2);
        e.args = a;
        break;
      }
      case ArgKind::poll:
        e.args = PollArgs{rng.below(4), static_cast<std::int64_t>(rng.below(100))};
        break;
      case ArgKind::epoll: {
        EpollArgs a;
        a.epfd = fd();
        if (fn == ApiFunction::epoll_ctl) {
          a.op = 1;
          a.fd = fd();
          a.events = 1;
        } else if (fn == ApiFunction::epoll_wait || fn == ApiFunction::epoll_pwait) {
          a.maxevents = 8;
          a.timeout_ms = 10;
        } else {
          a.epfd = -1;
          a.size_or_flags = 0;
          e.ret = fd();
        }
        e.args = a;
        break;
      }
      case ArgKind::dup: {
        DupArgs a;
        a.oldfd = fd();
        a.newfd = fd();
        if (fn == ApiFunction::dup3) a.flags = 0;
        e.ret = fail ? -1 : fn == ApiFunction::dup ? fd() : a.newfd;
        if (fn == ApiFunction::dup) a.newfd = static_cast<int>(e.ret);
        e.args = a;
        break;
      }
      case ArgKind::fd: {
        FdArgs a;
        a.fd = fd();
        if (fn == ApiFunction::listen) a.arg = 16;
        if (fn == ApiFunction::shutdown) a.arg = SHUT_RDWR;
        e.args = a;
        break;
      }
      case ArgKind::sendfile:
        e.args = SendfileArgs{fd(), fd(), 512};
        break;
    }
    if (fail && e.ret >= 0) e.ret = -1;
    e.err = e.ret < 0 ? 9 : 0;
    out.push_back(std::move(e));
  }
  return out;
}

Corpus chaos_corpus(std::uint64_t seed, const ChaosOptions& options) {
  Rng rng(seed ^ 0x5eed);
  Corpus corpus;
  std::size_t traces = 1 + rng.below(6);
  std::size_t budget = options.max_events;
  for (std::size_t t = 0; t < traces && budget > 0; ++t) {
    TraceMeta meta;
    meta.app_name = "app" + std::to_string(rng.below(options.apps));
    meta.command_line = meta.app_name;
    meta.os_name = "Linux";
    meta.tracer_version = "0.1.0";
    meta.started_at = "2017-01-01T00:00:00Z";
    std::vector<ProcessTrace> procs;
    std::size_t nproc = 1 + rng.below(2);
    for (std::size_t p = 0; p < nproc && budget > 0; ++p) {
      std::size_t n = std::min<std::size_t>(budget, rng.below(options.max_events / traces + 1));
      budget -= n;
      procs.push_back({static_cast<long>(1000 + t * 10 + p), chaos_events(rng.next(), n, options.max_fd)});
    }
    corpus.add(make_trace("trace-" + std::to_string(t), meta, std::move(procs)));
  }
  return corpus;
}

}  // namespace sockscope::test
