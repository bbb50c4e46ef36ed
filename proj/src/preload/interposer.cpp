// Preloaded into traced processes. Every exported function below shadows the
// libc symbol of the same name, calls through to the real one and records an
// event afterwards.

#include <dlfcn.h>
#include <fcntl.h>
#include <poll.h>
#include <pthread.h>
#include <sys/epoll.h>
#include <sys/ioctl.h>
#include <sys/select.h>
#include <sys/sendfile.h>
#include <sys/socket.h>
#include <sys/stat.h>
#include <sys/syscall.h>
#include <sys/uio.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstdarg>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include "sockscope/fd_table.hpp"
#include "sockscope/host_info.hpp"
#include "sockscope/privacy.hpp"
#include "sockscope/trace_io.hpp"

extern "C" {
ssize_t __read_chk(int, void*, size_t, size_t);
ssize_t __recv_chk(int, void*, size_t, size_t, int);
ssize_t __recvfrom_chk(int, void*, size_t, size_t, int, sockaddr*, socklen_t*);
int __poll_chk(pollfd*, nfds_t, int, size_t);
int fcntl64(int, int, ...);
}

#define EXPORT extern "C" __attribute__((visibility("default")))

#define REAL(name)                                                                     \
  static auto real_##name =                                                            \
      reinterpret_cast<decltype(&::name)>(dlsym(RTLD_NEXT, #name))

namespace sockscope {
namespace {

constexpr std::size_t kBufferLimit = 64 * 1024;
constexpr std::size_t kPage = 4096;

struct ThreadBuffer {
  std::mutex mu;
  std::string data;
};

struct Tracer {
  bool enabled = false;
  std::string dir;
  Salt salt;
  std::int64_t t0_ns = 0;
  pid_t pid = 0;
  int out_fd = -1;
  std::mutex file_mu;
  std::uint64_t file_off = 0;  // end of the events file, kept in step with our appends
  FdTable fds;
  std::atomic<std::uint64_t> drops{0};
  std::atomic<bool> final_flush{false};
  std::mutex registry_mu;
  std::vector<ThreadBuffer*> buffers;
  pthread_key_t key{};
};

// Leaked on purpose: must outlive every other destructor in the process.
Tracer* g = nullptr;
pthread_once_t g_once = PTHREAD_ONCE_INIT;

thread_local int t_depth = 0;
thread_local ThreadBuffer* t_buf = nullptr;
thread_local long t_tid = 0;

struct Guard {
  Guard() { ++t_depth; }
  ~Guard() { --t_depth; }
  Guard(const Guard&) = delete;
  Guard& operator=(const Guard&) = delete;
};

ssize_t raw_write(int fd, const void* p, std::size_t n) {
  REAL(write);
  return real_write(fd, p, n);
}

int raw_close(int fd) {
  REAL(close);
  return real_close(fd);
}

// One write() per call. Returns false once the file is unusable.
bool append_piece(const char* p, std::size_t n) {
  while (n > 0) {
    ssize_t w = raw_write(g->out_fd, p, n);
    if (w < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    g->file_off += static_cast<std::uint64_t>(w);
    p += w;
    n -= static_cast<std::size_t>(w);
  }
  return true;
}

// Every write stays inside one page of the file. A fatal signal is only acted
// on between pages, so a killed process leaves whole lines behind. A line that
// would straddle a page boundary is preceded by a blank filler line instead.
void flush_locked(ThreadBuffer& b) {
  if (b.data.empty()) return;
  const std::string& d = b.data;
  std::size_t pos = 0;
  {
    std::lock_guard lock(g->file_mu);
    char filler[kPage];
    while (pos < d.size() && g->out_fd >= 0) {
      std::size_t room = kPage - static_cast<std::size_t>(g->file_off % kPage);
      std::size_t end = pos;
      while (end < d.size()) {
        std::size_t nl = d.find('\n', end);
        if (nl == std::string::npos) nl = d.size() - 1;
        if (nl + 1 - pos > room) break;
        end = nl + 1;
      }
      bool ok;
      if (end > pos) {
        ok = append_piece(d.data() + pos, end - pos);
        pos = end;
      } else if (d.find('\n', pos) - pos + 1 > kPage) {
        // Longer than a page; cannot be made atomic.
        end = d.find('\n', pos) + 1;
        ok = append_piece(d.data() + pos, end - pos);
        pos = end;
      } else {
        std::memset(filler, ' ', room - 1);
        filler[room - 1] = '\n';
        ok = append_piece(filler, room);
      }
      if (!ok) break;
    }
  }
  if (pos < d.size()) {
    std::size_t lost = 0;
    for (std::size_t i = pos; i < d.size(); ++i) lost += d[i] == '\n';
    g->drops += lost;
  }
  b.data.clear();
}

void flush_all() {
  std::lock_guard lock(g->registry_mu);
  for (auto* b : g->buffers) {
    std::lock_guard bl(b->mu);
    flush_locked(*b);
  }
}

void write_drops() {
  auto n = g->drops.load();
  if (n == 0) return;
  std::ofstream(g->dir + "/dropped." + std::to_string(g->pid)) << n << '\n';
}

int open_events_file() {
  std::string path = g->dir + "/" + events_file_name(g->pid);
  int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  struct stat st {};
  g->file_off = fd >= 0 && ::fstat(fd, &st) == 0 ? static_cast<std::uint64_t>(st.st_size) : 0;
  return fd;
}

void on_thread_exit(void* p) {
  Guard guard;
  auto* b = static_cast<ThreadBuffer*>(p);
  {
    std::lock_guard lock(g->registry_mu);
    std::erase(g->buffers, b);
  }
  {
    std::lock_guard bl(b->mu);
    flush_locked(*b);
  }
  delete b;
  t_buf = nullptr;
}

void before_fork() {
  if (!g->enabled) return;
  Guard guard;
  flush_all();
  g->registry_mu.lock();
  g->fds.lock();
  g->file_mu.lock();
}

void after_fork_parent() {
  if (!g->enabled) return;
  g->file_mu.unlock();
  g->fds.unlock();
  g->registry_mu.unlock();
}

void after_fork_child() {
  if (!g->enabled) return;
  Guard guard;
  // Other threads do not exist here; their buffers may be locked forever and
  // already went to the parent's file, so they are abandoned.
  g->buffers.clear();
  if (t_buf != nullptr) {
    t_buf->data.clear();
    g->buffers.push_back(t_buf);
  }
  t_tid = 0;
  g->file_mu.unlock();
  g->fds.unlock();
  g->registry_mu.unlock();
  g->pid = getpid();
  g->drops = 0;
  if (g->out_fd >= 0) raw_close(g->out_fd);
  g->out_fd = open_events_file();
  g->fds.rebase(static_cast<std::uint32_t>(g->pid));
}

std::vector<std::string> self_argv() {
  std::ifstream in("/proc/self/cmdline", std::ios::binary);
  std::vector<std::string> out;
  std::string arg;
  while (std::getline(in, arg, '\0')) out.push_back(arg);
  return out;
}

void init() {
  Guard guard;
  g = new Tracer;
  const char* out = std::getenv("SOCKSCOPE_OUT");
  if (out == nullptr || *out == '\0') return;
  g->dir = out;
  g->pid = getpid();
  g->fds.rebase(static_cast<std::uint32_t>(g->pid));

  bool opt_out = false;
  if (const char* o = std::getenv("SOCKSCOPE_OPTOUT")) opt_out = std::strcmp(o, "1") == 0;

  std::optional<Salt> salt;
  if (const char* s = std::getenv("SOCKSCOPE_SALT")) salt = Salt::from_hex(s);
  if (!salt) {
    // Running without the launcher: this process owns the trace and its meta.
    salt = Salt::generate();
    std::string meta_path = g->dir + "/meta.json";
    int fd = ::open(meta_path.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0644);
    if (fd >= 0) {
      std::string text = meta_to_json(describe_host(self_argv(), *salt, opt_out));
      raw_write(fd, text.data(), text.size());
      raw_close(fd);
    }
  }
  g->salt = *salt;

  g->t0_ns = monotonic_ns();
  if (const char* t0 = std::getenv("SOCKSCOPE_T0")) {
    char* end = nullptr;
    long long v = std::strtoll(t0, &end, 10);
    if (end != t0 && *end == '\0' && v > 0 && v <= g->t0_ns) g->t0_ns = v;
  }

  g->out_fd = open_events_file();
  pthread_key_create(&g->key, on_thread_exit);
  pthread_atfork(before_fork, after_fork_parent, after_fork_child);
  g->enabled = true;
}

bool active() {
  if (t_depth > 0) return false;
  pthread_once(&g_once, init);
  return g->enabled;
}

ThreadBuffer& thread_buffer() {
  if (t_buf == nullptr) {
    t_buf = new ThreadBuffer;
    t_buf->data.reserve(kBufferLimit + 512);
    {
      std::lock_guard lock(g->registry_mu);
      g->buffers.push_back(t_buf);
    }
    pthread_setspecific(g->key, t_buf);
  }
  return *t_buf;
}

long thread_id() {
  if (t_tid == 0) t_tid = syscall(SYS_gettid);
  return t_tid;
}

// Called after the real function returned, with errno still as it left it.
void record(ApiFunction fn, FnArgs args, std::int64_t ret, bool flush_now = false) {
  int saved = errno;
  if (!active()) return;
  Guard guard;
  try {
    TraceEvent e;
    e.ts_us = std::max<std::int64_t>(0, (monotonic_ns() - g->t0_ns) / 1000);
    e.tid = thread_id();
    e.fn = fn;
    e.args = std::move(args);
    e.ret = ret;
    e.err = ret < 0 ? saved : 0;
    e = scrub_event(std::move(e), g->salt);
    auto& b = thread_buffer();
    std::lock_guard lock(b.mu);
    append_event_json(e, b.data);
    if (flush_now || b.data.size() >= kBufferLimit || g->final_flush.load(std::memory_order_relaxed))
      flush_locked(b);
  } catch (...) {
    g->drops += 1;
  }
  errno = saved;
}

// Socket-ness for the calls that also work on files and pipes.
bool is_socket_fd(int fd) {
  if (t_depth > 0) return false;
  pthread_once(&g_once, init);
  if (!g->enabled) return false;
  if (g->fds.lookup(fd)) return true;
  struct stat st{};
  int saved = errno;
  bool sock = fstat(fd, &st) == 0 && S_ISSOCK(st.st_mode);
  errno = saved;
  return sock;
}

void track_create(int fd) {
  if (fd >= 0 && t_depth == 0 && g != nullptr && g->enabled) g->fds.on_create(fd);
}

std::optional<NetAddress> addr_of(const sockaddr* sa, socklen_t len) {
  if (sa == nullptr) return std::nullopt;
  return NetAddress::from_sockaddr(sa, len);
}

std::uint64_t iov_bytes(const iovec* iov, std::size_t n) {
  std::uint64_t total = 0;
  if (iov == nullptr) return 0;
  for (std::size_t i = 0; i < n; ++i) total += iov[i].iov_len;
  return total;
}

IoArgs msg_args(int fd, const msghdr* msg, int flags, bool name_valid) {
  IoArgs a;
  a.fd = fd;
  a.flags = static_cast<std::uint32_t>(flags);
  if (msg != nullptr) {
    a.buf_size = iov_bytes(msg->msg_iov, msg->msg_iovlen);
    a.iov_count = static_cast<std::uint32_t>(msg->msg_iovlen);
    if (name_valid && msg->msg_name != nullptr && msg->msg_namelen > 0)
      a.addr = NetAddress::from_sockaddr(static_cast<const sockaddr*>(msg->msg_name), msg->msg_namelen);
  }
  return a;
}

IoArgs mmsg_args(int fd, const mmsghdr* v, unsigned n, int flags) {
  IoArgs a;
  a.fd = fd;
  a.flags = static_cast<std::uint32_t>(flags);
  a.iov_count = n;
  if (v != nullptr)
    for (unsigned i = 0; i < n; ++i) a.buf_size += iov_bytes(v[i].msg_hdr.msg_iov, v[i].msg_hdr.msg_iovlen);
  return a;
}

OptvalSummary optval_summary(int level, int optname, const void* val, socklen_t len) {
  if (val == nullptr) return std::monostate{};
  if (level == SOL_SOCKET && (optname == SO_RCVTIMEO || optname == SO_SNDTIMEO) &&
      len >= sizeof(timeval)) {
    timeval tv{};
    std::memcpy(&tv, val, sizeof tv);
    return Timeval{tv.tv_sec, tv.tv_usec};
  }
  if (level == SOL_SOCKET && optname == SO_LINGER && len >= sizeof(linger)) {
    linger l{};
    std::memcpy(&l, val, sizeof l);
    return Linger{l.l_onoff, l.l_linger};
  }
  if (len == sizeof(int)) {
    int v = 0;
    std::memcpy(&v, val, sizeof v);
    return std::int64_t{v};
  }
  return OpaqueValue{static_cast<std::uint32_t>(len)};
}

std::int64_t timespec_ms(const timespec* ts) {
  if (ts == nullptr) return -1;
  return std::int64_t{ts->tv_sec} * 1000 + ts->tv_nsec / 1'000'000;
}

std::int64_t timeval_ms(const timeval* tv) {
  if (tv == nullptr) return -1;
  return std::int64_t{tv->tv_sec} * 1000 + tv->tv_usec / 1000;
}

bool fcntl_takes_int(int cmd) {
  switch (cmd) {
    case F_DUPFD: case F_DUPFD_CLOEXEC: case F_SETFD: case F_SETFL: case F_SETOWN:
    case F_SETSIG: case F_SETLEASE: case F_NOTIFY: case F_SETPIPE_SZ: case F_ADD_SEALS:
      return true;
    default:
      return false;
  }
}

int traced_fcntl(int (*real)(int, int, ...), int fd, int cmd, void* arg) {
  int ret = real(fd, cmd, arg);
  int saved = errno;
  FcntlArgs a;
  a.fd = fd;
  a.cmd = cmd;
  if (fcntl_takes_int(cmd)) a.flag_word = static_cast<int>(reinterpret_cast<std::intptr_t>(arg));
  else if (cmd == F_GETFL && ret >= 0) a.flag_word = ret;
  if ((cmd == F_DUPFD || cmd == F_DUPFD_CLOEXEC) && ret >= 0 && t_depth == 0 && g && g->enabled)
    g->fds.on_alias(ret, fd);
  errno = saved;
  record(ApiFunction::fcntl, a, ret);
  return ret;
}

void finish() {
  if (g == nullptr || !g->enabled) return;
  Guard guard;
  g->final_flush = true;
  flush_all();
  write_drops();
}

__attribute__((destructor)) void at_unload() { finish(); }

}  // namespace
}  // namespace sockscope

using namespace sockscope;

EXPORT int socket(int domain, int type, int protocol) {
  REAL(socket);
  int ret = real_socket(domain, type, protocol);
  int saved = errno;
  track_create(ret);
  SocketArgs a;
  a.domain = domain;
  a.type = type & ~(SOCK_NONBLOCK | SOCK_CLOEXEC);
  a.protocol = protocol;
  a.creation_flags = static_cast<std::uint32_t>(type & (SOCK_NONBLOCK | SOCK_CLOEXEC));
  errno = saved;
  record(ApiFunction::socket, a, ret);
  return ret;
}

EXPORT int socketpair(int domain, int type, int protocol, int sv[2]) {
  REAL(socketpair);
  int ret = real_socketpair(domain, type, protocol, sv);
  int saved = errno;
  SocketArgs a;
  a.domain = domain;
  a.type = type & ~(SOCK_NONBLOCK | SOCK_CLOEXEC);
  a.protocol = protocol;
  a.creation_flags = static_cast<std::uint32_t>(type & (SOCK_NONBLOCK | SOCK_CLOEXEC));
  if (ret == 0) {
    track_create(sv[0]);
    track_create(sv[1]);
    a.pair = std::array<int, 2>{sv[0], sv[1]};
  }
  errno = saved;
  record(ApiFunction::socketpair, a, ret);
  return ret;
}

EXPORT int bind(int fd, const sockaddr* addr, socklen_t len) {
  REAL(bind);
  int ret = real_bind(fd, addr, len);
  record(ApiFunction::bind, AddrArgs{fd, addr_of(addr, len), std::nullopt}, ret);
  return ret;
}

EXPORT int connect(int fd, const sockaddr* addr, socklen_t len) {
  REAL(connect);
  int ret = real_connect(fd, addr, len);
  record(ApiFunction::connect, AddrArgs{fd, addr_of(addr, len), std::nullopt}, ret);
  return ret;
}

EXPORT int listen(int fd, int backlog) {
  REAL(listen);
  int ret = real_listen(fd, backlog);
  record(ApiFunction::listen, FdArgs{fd, backlog}, ret);
  return ret;
}

EXPORT int accept(int fd, sockaddr* addr, socklen_t* len) {
  REAL(accept);
  int ret = real_accept(fd, addr, len);
  int saved = errno;
  track_create(ret);
  std::optional<NetAddress> peer;
  if (ret >= 0 && addr != nullptr && len != nullptr) peer = addr_of(addr, *len);
  errno = saved;
  record(ApiFunction::accept, AddrArgs{fd, peer, std::nullopt}, ret);
  return ret;
}

EXPORT int accept4(int fd, sockaddr* addr, socklen_t* len, int flags) {
  REAL(accept4);
  int ret = real_accept4(fd, addr, len, flags);
  int saved = errno;
  track_create(ret);
  std::optional<NetAddress> peer;
  if (ret >= 0 && addr != nullptr && len != nullptr) peer = addr_of(addr, *len);
  errno = saved;
  record(ApiFunction::accept4, AddrArgs{fd, peer, static_cast<std::uint32_t>(flags)}, ret);
  return ret;
}

EXPORT int getsockname(int fd, sockaddr* addr, socklen_t* len) {
  REAL(getsockname);
  int ret = real_getsockname(fd, addr, len);
  std::optional<NetAddress> a;
  if (ret == 0 && len != nullptr) a = addr_of(addr, *len);
  record(ApiFunction::getsockname, AddrArgs{fd, a, std::nullopt}, ret);
  return ret;
}

EXPORT int getpeername(int fd, sockaddr* addr, socklen_t* len) {
  REAL(getpeername);
  int ret = real_getpeername(fd, addr, len);
  std::optional<NetAddress> a;
  if (ret == 0 && len != nullptr) a = addr_of(addr, *len);
  record(ApiFunction::getpeername, AddrArgs{fd, a, std::nullopt}, ret);
  return ret;
}

EXPORT int shutdown(int fd, int how) {
  REAL(shutdown);
  int ret = real_shutdown(fd, how);
  record(ApiFunction::shutdown, FdArgs{fd, how}, ret);
  return ret;
}

EXPORT int close(int fd) {
  REAL(close);
  bool was_socket = t_depth == 0 && g != nullptr && g->enabled && g->fds.lookup(fd).has_value();
  int ret = real_close(fd);
  int saved = errno;
  if (t_depth == 0 && g != nullptr && g->enabled) g->fds.on_close(fd);
  errno = saved;
  record(ApiFunction::close, FdArgs{fd, std::nullopt}, ret, was_socket);
  return ret;
}

EXPORT int dup(int oldfd) {
  REAL(dup);
  int ret = real_dup(oldfd);
  int saved = errno;
  if (ret >= 0 && t_depth == 0 && g != nullptr && g->enabled) g->fds.on_alias(ret, oldfd);
  errno = saved;
  record(ApiFunction::dup, DupArgs{oldfd, ret, std::nullopt}, ret);
  return ret;
}

EXPORT int dup2(int oldfd, int newfd) {
  REAL(dup2);
  int ret = real_dup2(oldfd, newfd);
  int saved = errno;
  if (ret >= 0 && t_depth == 0 && g != nullptr && g->enabled) g->fds.on_alias(newfd, oldfd);
  errno = saved;
  record(ApiFunction::dup2, DupArgs{oldfd, newfd, std::nullopt}, ret);
  return ret;
}

EXPORT int dup3(int oldfd, int newfd, int flags) {
  REAL(dup3);
  int ret = real_dup3(oldfd, newfd, flags);
  int saved = errno;
  if (ret >= 0 && t_depth == 0 && g != nullptr && g->enabled) g->fds.on_alias(newfd, oldfd);
  errno = saved;
  record(ApiFunction::dup3, DupArgs{oldfd, newfd, static_cast<std::uint32_t>(flags)}, ret);
  return ret;
}

EXPORT ssize_t send(int fd, const void* buf, size_t n, int flags) {
  REAL(send);
  ssize_t ret = real_send(fd, buf, n, flags);
  record(ApiFunction::send, IoArgs{fd, n, static_cast<std::uint32_t>(flags), std::nullopt, std::nullopt}, ret);
  return ret;
}

EXPORT ssize_t recv(int fd, void* buf, size_t n, int flags) {
  REAL(recv);
  ssize_t ret = real_recv(fd, buf, n, flags);
  record(ApiFunction::recv, IoArgs{fd, n, static_cast<std::uint32_t>(flags), std::nullopt, std::nullopt}, ret);
  return ret;
}

EXPORT ssize_t sendto(int fd, const void* buf, size_t n, int flags, const sockaddr* addr, socklen_t len) {
  REAL(sendto);
  ssize_t ret = real_sendto(fd, buf, n, flags, addr, len);
  record(ApiFunction::sendto, IoArgs{fd, n, static_cast<std::uint32_t>(flags), std::nullopt, addr_of(addr, len)}, ret);
  return ret;
}

EXPORT ssize_t recvfrom(int fd, void* buf, size_t n, int flags, sockaddr* addr, socklen_t* len) {
  REAL(recvfrom);
  ssize_t ret = real_recvfrom(fd, buf, n, flags, addr, len);
  std::optional<NetAddress> src;
  if (ret >= 0 && addr != nullptr && len != nullptr && *len > 0) src = addr_of(addr, *len);
  record(ApiFunction::recvfrom, IoArgs{fd, n, static_cast<std::uint32_t>(flags), std::nullopt, src}, ret);
  return ret;
}

EXPORT ssize_t sendmsg(int fd, const msghdr* msg, int flags) {
  REAL(sendmsg);
  ssize_t ret = real_sendmsg(fd, msg, flags);
  record(ApiFunction::sendmsg, msg_args(fd, msg, flags, true), ret);
  return ret;
}

EXPORT ssize_t recvmsg(int fd, msghdr* msg, int flags) {
  REAL(recvmsg);
  ssize_t ret = real_recvmsg(fd, msg, flags);
  record(ApiFunction::recvmsg, msg_args(fd, msg, flags, ret >= 0), ret);
  return ret;
}

EXPORT int sendmmsg(int fd, mmsghdr* v, unsigned int n, int flags) {
  REAL(sendmmsg);
  int ret = real_sendmmsg(fd, v, n, flags);
  record(ApiFunction::sendmmsg, mmsg_args(fd, v, n, flags), ret);
  return ret;
}

EXPORT int recvmmsg(int fd, mmsghdr* v, unsigned int n, int flags, timespec* tmo) {
  REAL(recvmmsg);
  int ret = real_recvmmsg(fd, v, n, flags, tmo);
  record(ApiFunction::recvmmsg, mmsg_args(fd, v, n, flags), ret);
  return ret;
}

EXPORT ssize_t write(int fd, const void* buf, size_t n) {
  REAL(write);
  ssize_t ret = real_write(fd, buf, n);
  if (is_socket_fd(fd))
    record(ApiFunction::write, IoArgs{fd, n, 0, std::nullopt, std::nullopt}, ret);
  return ret;
}

EXPORT ssize_t read(int fd, void* buf, size_t n) {
  REAL(read);
  ssize_t ret = real_read(fd, buf, n);
  if (is_socket_fd(fd))
    record(ApiFunction::read, IoArgs{fd, n, 0, std::nullopt, std::nullopt}, ret);
  return ret;
}

EXPORT ssize_t writev(int fd, const iovec* iov, int cnt) {
  REAL(writev);
  ssize_t ret = real_writev(fd, iov, cnt);
  if (is_socket_fd(fd))
    record(ApiFunction::writev,
           IoArgs{fd, iov_bytes(iov, cnt > 0 ? cnt : 0), 0, static_cast<std::uint32_t>(cnt), std::nullopt}, ret);
  return ret;
}

EXPORT ssize_t readv(int fd, const iovec* iov, int cnt) {
  REAL(readv);
  ssize_t ret = real_readv(fd, iov, cnt);
  if (is_socket_fd(fd))
    record(ApiFunction::readv,
           IoArgs{fd, iov_bytes(iov, cnt > 0 ? cnt : 0), 0, static_cast<std::uint32_t>(cnt), std::nullopt}, ret);
  return ret;
}

EXPORT ssize_t sendfile(int out_fd, int in_fd, off_t* offset, size_t count) {
  REAL(sendfile);
  ssize_t ret = real_sendfile(out_fd, in_fd, offset, count);
  record(ApiFunction::sendfile, SendfileArgs{out_fd, in_fd, count}, ret);
  return ret;
}

EXPORT int getsockopt(int fd, int level, int optname, void* val, socklen_t* len) {
  REAL(getsockopt);
  int ret = real_getsockopt(fd, level, optname, val, len);
  OptvalSummary v;
  if (ret == 0 && len != nullptr) v = optval_summary(level, optname, val, *len);
  record(ApiFunction::getsockopt, SockoptArgs{fd, level, optname, v}, ret);
  return ret;
}

EXPORT int setsockopt(int fd, int level, int optname, const void* val, socklen_t len) {
  REAL(setsockopt);
  int ret = real_setsockopt(fd, level, optname, val, len);
  record(ApiFunction::setsockopt, SockoptArgs{fd, level, optname, optval_summary(level, optname, val, len)}, ret);
  return ret;
}

EXPORT int fcntl(int fd, int cmd, ...) {
  REAL(fcntl);
  va_list ap;
  va_start(ap, cmd);
  void* arg = va_arg(ap, void*);
  va_end(ap);
  return traced_fcntl(real_fcntl, fd, cmd, arg);
}

EXPORT int fcntl64(int fd, int cmd, ...) {
  REAL(fcntl64);
  va_list ap;
  va_start(ap, cmd);
  void* arg = va_arg(ap, void*);
  va_end(ap);
  return traced_fcntl(real_fcntl64, fd, cmd, arg);
}

EXPORT int ioctl(int fd, unsigned long request, ...) {
  REAL(ioctl);
  va_list ap;
  va_start(ap, request);
  void* arg = va_arg(ap, void*);
  va_end(ap);
  int ret = real_ioctl(fd, request, arg);
  int saved = errno;
  IoctlArgs a;
  a.fd = fd;
  a.request = request;
  if (request == FIONBIO && arg != nullptr) a.value = *static_cast<const int*>(arg);
  else if (request == FIONREAD && ret == 0 && arg != nullptr) a.value = *static_cast<const int*>(arg);
  errno = saved;
  record(ApiFunction::ioctl, a, ret);
  return ret;
}

EXPORT int poll(pollfd* fds, nfds_t n, int timeout) {
  REAL(poll);
  int ret = real_poll(fds, n, timeout);
  record(ApiFunction::poll, PollArgs{n, timeout}, ret);
  return ret;
}

EXPORT int ppoll(pollfd* fds, nfds_t n, const timespec* tmo, const sigset_t* mask) {
  REAL(ppoll);
  int ret = real_ppoll(fds, n, tmo, mask);
  record(ApiFunction::ppoll, PollArgs{n, timespec_ms(tmo)}, ret);
  return ret;
}

EXPORT int select(int n, fd_set* r, fd_set* w, fd_set* e, timeval* tmo) {
  REAL(select);
  std::int64_t ms = timeval_ms(tmo);
  int ret = real_select(n, r, w, e, tmo);
  record(ApiFunction::select, PollArgs{static_cast<std::uint64_t>(n < 0 ? 0 : n), ms}, ret);
  return ret;
}

EXPORT int pselect(int n, fd_set* r, fd_set* w, fd_set* e, const timespec* tmo, const sigset_t* mask) {
  REAL(pselect);
  int ret = real_pselect(n, r, w, e, tmo, mask);
  record(ApiFunction::pselect, PollArgs{static_cast<std::uint64_t>(n < 0 ? 0 : n), timespec_ms(tmo)}, ret);
  return ret;
}

EXPORT int epoll_create(int size) {
  REAL(epoll_create);
  int ret = real_epoll_create(size);
  EpollArgs a;
  a.size_or_flags = size;
  record(ApiFunction::epoll_create, a, ret);
  return ret;
}

EXPORT int epoll_create1(int flags) {
  REAL(epoll_create1);
  int ret = real_epoll_create1(flags);
  EpollArgs a;
  a.size_or_flags = flags;
  record(ApiFunction::epoll_create1, a, ret);
  return ret;
}

EXPORT int epoll_ctl(int epfd, int op, int fd, epoll_event* ev) {
  REAL(epoll_ctl);
  int ret = real_epoll_ctl(epfd, op, fd, ev);
  EpollArgs a;
  a.epfd = epfd;
  a.op = op;
  a.fd = fd;
  if (ev != nullptr) a.events = static_cast<std::uint32_t>(ev->events);
  record(ApiFunction::epoll_ctl, a, ret);
  return ret;
}

EXPORT int epoll_wait(int epfd, epoll_event* evs, int maxevents, int timeout) {
  REAL(epoll_wait);
  int ret = real_epoll_wait(epfd, evs, maxevents, timeout);
  EpollArgs a;
  a.epfd = epfd;
  a.maxevents = maxevents;
  a.timeout_ms = timeout;
  record(ApiFunction::epoll_wait, a, ret);
  return ret;
}

EXPORT int epoll_pwait(int epfd, epoll_event* evs, int maxevents, int timeout, const sigset_t* mask) {
  REAL(epoll_pwait);
  int ret = real_epoll_pwait(epfd, evs, maxevents, timeout, mask);
  EpollArgs a;
  a.epfd = epfd;
  a.maxevents = maxevents;
  a.timeout_ms = timeout;
  record(ApiFunction::epoll_pwait, a, ret);
  return ret;
}

// Not traced. exec replaces the image without running destructors, so pending
// events are written out first.
EXPORT int execve(const char* path, char* const argv[], char* const envp[]) {
  REAL(execve);
  if (t_depth == 0 && g != nullptr && g->enabled) {
    Guard guard;
    flush_all();
  }
  return real_execve(path, argv, envp);
}

EXPORT int execvp(const char* file, char* const argv[]) {
  REAL(execvp);
  if (t_depth == 0 && g != nullptr && g->enabled) {
    Guard guard;
    flush_all();
  }
  return real_execvp(file, argv);
}

EXPORT int execv(const char* path, char* const argv[]) {
  REAL(execv);
  if (t_depth == 0 && g != nullptr && g->enabled) {
    Guard guard;
    flush_all();
  }
  return real_execv(path, argv);
}

// Entry points used by callers built with _FORTIFY_SOURCE. Recorded under the
// plain name.
EXPORT ssize_t __read_chk(int fd, void* buf, size_t n, size_t buflen) {
  REAL(__read_chk);
  ssize_t ret = real___read_chk(fd, buf, n, buflen);
  if (is_socket_fd(fd))
    record(ApiFunction::read, IoArgs{fd, n, 0, std::nullopt, std::nullopt}, ret);
  return ret;
}

EXPORT ssize_t __recv_chk(int fd, void* buf, size_t n, size_t buflen, int flags) {
  REAL(__recv_chk);
  ssize_t ret = real___recv_chk(fd, buf, n, buflen, flags);
  record(ApiFunction::recv, IoArgs{fd, n, static_cast<std::uint32_t>(flags), std::nullopt, std::nullopt}, ret);
  return ret;
}

EXPORT ssize_t __recvfrom_chk(int fd, void* buf, size_t n, size_t buflen, int flags, sockaddr* addr,
                              socklen_t* len) {
  REAL(__recvfrom_chk);
  ssize_t ret = real___recvfrom_chk(fd, buf, n, buflen, flags, addr, len);
  std::optional<NetAddress> src;
  if (ret >= 0 && addr != nullptr && len != nullptr && *len > 0) src = addr_of(addr, *len);
  record(ApiFunction::recvfrom, IoArgs{fd, n, static_cast<std::uint32_t>(flags), std::nullopt, src}, ret);
  return ret;
}

EXPORT int __poll_chk(pollfd* fds, nfds_t n, int timeout, size_t fdslen) {
  REAL(__poll_chk);
  int ret = real___poll_chk(fds, n, timeout, fdslen);
  record(ApiFunction::poll, PollArgs{n, timeout}, ret);
  return ret;
}
