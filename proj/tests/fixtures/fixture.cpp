// Test client driven by the interception tests. Each mode performs a fixed
// script of socket calls; some write what they did to a manifest so the test
// can compare it with the trace.

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/syscall.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <thread>
#include <vector>

namespace {

struct Step {
  const char* fn;
  int fd;
  long size;
  long ret;
};

long tid() { return syscall(SYS_gettid); }

sockaddr_in loopback(int port) {
  sockaddr_in a{};
  a.sin_family = AF_INET;
  a.sin_port = htons(static_cast<uint16_t>(port));
  a.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  return a;
}

int die(const char* what) {
  std::perror(what);
  std::exit(3);
}

void write_manifest(const char* path, const std::vector<std::pair<long, std::vector<Step>>>& threads) {
  FILE* f = std::fopen(path, "w");
  if (!f) die("manifest");
  std::fprintf(f, "{\"threads\":[");
  for (std::size_t t = 0; t < threads.size(); ++t) {
    std::fprintf(f, "%s{\"tid\":%ld,\"steps\":[", t ? "," : "", threads[t].first);
    const auto& steps = threads[t].second;
    for (std::size_t i = 0; i < steps.size(); ++i) {
      std::fprintf(f, "%s{\"fn\":\"%s\",\"fd\":%d,\"size\":%ld,\"ret\":%ld}", i ? "," : "", steps[i].fn,
                   steps[i].fd, steps[i].size, steps[i].ret);
    }
    std::fprintf(f, "]}");
  }
  std::fprintf(f, "]}\n");
  std::fclose(f);
}

// One thread's share of the 25-call script. `long_form` adds one extra
// send/recv round so the two threads differ.
std::vector<Step> script_thread(int port, bool long_form) {
  std::vector<Step> s;
  int fd = socket(AF_INET, SOCK_STREAM, 0);
  s.push_back({"socket", -1, 0, fd});
  sockaddr_in local = loopback(0);
  int r = bind(fd, reinterpret_cast<sockaddr*>(&local), sizeof local);
  s.push_back({"bind", fd, 0, r});
  sockaddr_in srv = loopback(port);
  r = connect(fd, reinterpret_cast<sockaddr*>(&srv), sizeof srv);
  s.push_back({"connect", fd, 0, r});
  int err = 0;
  socklen_t len = sizeof err;
  r = getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
  s.push_back({"getsockopt", fd, 0, r});
  int flags = fcntl(fd, F_GETFL);
  s.push_back({"fcntl", fd, 0, flags});
  r = fcntl(fd, F_SETFL, flags);
  s.push_back({"fcntl", fd, 0, r});
  char buf[512];
  const long sizes[] = {100, 300, 512};
  int rounds = long_form ? 3 : 2;
  for (int i = 0; i < rounds; ++i) {
    std::memset(buf, 'a' + i, sizeof buf);
    long n = send(fd, buf, static_cast<size_t>(sizes[i]), 0);
    s.push_back({"send", fd, sizes[i], n});
    n = recv(fd, buf, static_cast<size_t>(sizes[i]), MSG_WAITALL);
    s.push_back({"recv", fd, sizes[i], n});
  }
  if (!long_form) {
    int sndbuf = 0;
    len = sizeof sndbuf;
    r = getsockopt(fd, SOL_SOCKET, SO_SNDBUF, &sndbuf, &len);
    s.push_back({"getsockopt", fd, 0, r});
  }
  r = close(fd);
  s.push_back({"close", fd, 0, r});
  return s;
}

int mode_script25(int port, const char* manifest) {
  std::vector<std::pair<long, std::vector<Step>>> threads(2);
  std::thread a([&] {
    threads[0].first = tid();
    threads[0].second = script_thread(port, false);
  });
  a.join();
  std::thread b([&] {
    threads[1].first = tid();
    threads[1].second = script_thread(port, true);
  });
  b.join();
  write_manifest(manifest, threads);
  return 0;
}

// socket, connect, send(100), close. The payload carries a marker string.
int mode_client4(int port) {
  int fd = socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in srv = loopback(port);
  if (connect(fd, reinterpret_cast<sockaddr*>(&srv), sizeof srv) != 0) die("connect");
  char payload[100];
  std::memset(payload, 0, sizeof payload);
  std::snprintf(payload, sizeof payload, "SECRET-PAYLOAD-MARKER-%s", "zq7x");
  if (send(fd, payload, sizeof payload, 0) != 100) die("send");
  close(fd);
  return 0;
}

// Sends `bytes` to an echo server and reads them back. Prints both counts.
int mode_transfer(int port, long bytes) {
  int fd = socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in srv = loopback(port);
  if (connect(fd, reinterpret_cast<sockaddr*>(&srv), sizeof srv) != 0) die("connect");
  std::vector<char> out(static_cast<std::size_t>(bytes));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<char>(i * 31 + 7);
  long sent = 0, got = 0;
  std::vector<char> in(out.size());
  std::thread reader([&] {
    while (got < bytes) {
      ssize_t n = recv(fd, in.data() + got, static_cast<size_t>(bytes - got), 0);
      if (n <= 0) break;
      got += n;
    }
  });
  while (sent < bytes) {
    ssize_t n = send(fd, out.data() + sent, static_cast<size_t>(std::min<long>(16384, bytes - sent)), 0);
    if (n <= 0) break;
    sent += n;
  }
  shutdown(fd, SHUT_WR);
  reader.join();
  close(fd);
  bool same = in == out;
  std::printf("sent %ld received %ld match %d\n", sent, got, same ? 1 : 0);
  return same ? 0 : 4;
}

// Median wall time of `n` small UDP sends, in nanoseconds.
int mode_sendloop(long n) {
  int rx = socket(AF_INET, SOCK_DGRAM, 0);
  sockaddr_in a = loopback(0);
  bind(rx, reinterpret_cast<sockaddr*>(&a), sizeof a);
  socklen_t len = sizeof a;
  getsockname(rx, reinterpret_cast<sockaddr*>(&a), &len);
  int tx = socket(AF_INET, SOCK_DGRAM, 0);
  if (connect(tx, reinterpret_cast<sockaddr*>(&a), sizeof a) != 0) die("connect");
  char buf[64] = {};
  std::vector<long> ns(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    auto t0 = std::chrono::steady_clock::now();
    send(tx, buf, sizeof buf, MSG_DONTWAIT);
    auto t1 = std::chrono::steady_clock::now();
    ns[static_cast<std::size_t>(i)] = std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
  }
  std::nth_element(ns.begin(), ns.begin() + n / 2, ns.end());
  std::printf("median_ns %ld\n", ns[static_cast<std::size_t>(n / 2)]);
  close(tx);
  close(rx);
  return 0;
}

// Two threads, 1000 sends each over a socketpair drained by a third.
int mode_threads(long per_thread) {
  int sv[2];
  if (socketpair(AF_UNIX, SOCK_DGRAM, 0, sv) != 0) die("socketpair");
  int rx = sv[1];
  std::thread drain([&] {
    char b[16];
    for (long i = 0; i < 2 * per_thread; ++i) {
      if (::recv(rx, b, sizeof b, 0) < 0) break;
    }
  });
  auto work = [&] {
    char b[8] = {};
    for (long i = 0; i < per_thread; ++i) send(sv[0], b, sizeof b, 0);
  };
  std::thread t1(work), t2(work);
  t1.join();
  t2.join();
  drain.join();
  return 0;
}

// Opens a connection, sends, flushes by closing an unrelated socket, then
// waits to be killed.
int mode_hang(int port, const char* ready) {
  int fd = socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in srv = loopback(port);
  if (connect(fd, reinterpret_cast<sockaddr*>(&srv), sizeof srv) != 0) die("connect");
  char b[10] = {};
  send(fd, b, sizeof b, 0);
  int other = socket(AF_INET, SOCK_DGRAM, 0);
  close(other);
  FILE* f = std::fopen(ready, "w");
  std::fprintf(f, "%d\n", getpid());
  std::fclose(f);
  for (;;) pause();
}

// Records as fast as possible from several threads until killed.
[[noreturn]] void mode_flood(const char* ready) {
  int fd = socket(AF_INET, SOCK_STREAM, 0);
  FILE* f = std::fopen(ready, "w");
  std::fprintf(f, "%d\n", getpid());
  std::fclose(f);
  auto spin = [fd] {
    int v = 0;
    socklen_t len = sizeof v;
    for (;;) getsockopt(fd, SOL_SOCKET, SO_RCVBUF, &v, &len);
  };
  std::thread a(spin), b(spin);
  spin();
  std::abort();
}

// The opening and closing call sequences on `count` sockets.
int mode_patterns(int port, int count) {
  for (int i = 0; i < count; ++i) {
    int fd = socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in any{};
    any.sin_family = AF_INET;
    bind(fd, reinterpret_cast<sockaddr*>(&any), sizeof any);
    sockaddr_in me{};
    socklen_t len = sizeof me;
    getsockname(fd, reinterpret_cast<sockaddr*>(&me), &len);
    timeval tv{5, 0};
    setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    int fl = fcntl(fd, F_GETFL);
    fcntl(fd, F_SETFL, fl | O_NONBLOCK);
    sockaddr_in srv = loopback(port);
    connect(fd, reinterpret_cast<sockaddr*>(&srv), sizeof srv);
    pollfd p{fd, POLLOUT, 0};
    poll(&p, 1, 5000);
    int err = 0;
    socklen_t elen = sizeof err;
    getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &elen);
    if (err != 0) die("async connect");
    fl = fcntl(fd, F_GETFL);
    fcntl(fd, F_SETFL, fl & ~O_NONBLOCK);
    len = sizeof me;
    getsockname(fd, reinterpret_cast<sockaddr*>(&me), &len);
    socklen_t tlen = sizeof tv;
    getsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, &tlen);
    tlen = sizeof tv;
    getsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, &tlen);
    fl = fcntl(fd, F_GETFL);
    fcntl(fd, F_SETFL, fl | O_NONBLOCK);
    char b[32] = {};
    send(fd, b, sizeof b, 0);
    p = {fd, POLLIN, 0};
    poll(&p, 1, 5000);
    recv(fd, b, sizeof b, 0);
    int dbg = 0;
    socklen_t dlen = sizeof dbg;
    getsockopt(fd, SOL_SOCKET, SO_DEBUG, &dbg, &dlen);
    linger lg{};
    socklen_t llen = sizeof lg;
    getsockopt(fd, SOL_SOCKET, SO_LINGER, &lg, &llen);
    close(fd);
  }
  return 0;
}

// Parent and child each open a socket.
int mode_fork() {
  int fd = socket(AF_INET, SOCK_DGRAM, 0);
  pid_t pid = fork();
  if (pid == 0) {
    int c = socket(AF_INET6, SOCK_DGRAM, 0);
    close(c);
    _exit(0);
  }
  int status = 0;
  waitpid(pid, &status, 0);
  close(fd);
  return WIFEXITED(status) ? WEXITSTATUS(status) : 5;
}

// UDP connects to documentation-range addresses. Nothing is sent.
int mode_remote() {
  int fd = socket(AF_INET, SOCK_DGRAM, 0);
  sockaddr_in a{};
  a.sin_family = AF_INET;
  a.sin_port = htons(9);
  inet_pton(AF_INET, "192.0.2.1", &a.sin_addr);
  connect(fd, reinterpret_cast<sockaddr*>(&a), sizeof a);
  close(fd);
  int fd6 = socket(AF_INET6, SOCK_DGRAM, 0);
  sockaddr_in6 b{};
  b.sin6_family = AF_INET6;
  b.sin6_port = htons(9);
  inet_pton(AF_INET6, "2001:db8::1", &b.sin6_addr);
  connect(fd6, reinterpret_cast<sockaddr*>(&b), sizeof b);
  close(fd6);
  return 0;
}

int mode_exit(int code) {
  int fd = socket(AF_INET, SOCK_DGRAM, 0);
  close(fd);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: fixture MODE ...\n");
    return 2;
  }
  std::string mode = argv[1];
  auto arg = [&](int i) { return i < argc ? argv[i] : ""; };
  if (mode == "script25") return mode_script25(std::atoi(arg(2)), arg(3));
  if (mode == "client4") return mode_client4(std::atoi(arg(2)));
  if (mode == "transfer") return mode_transfer(std::atoi(arg(2)), std::atol(arg(3)));
  if (mode == "sendloop") return mode_sendloop(std::atol(arg(2)));
  if (mode == "threads") return mode_threads(std::atol(arg(2)));
  if (mode == "hang") return mode_hang(std::atoi(arg(2)), arg(3));
  if (mode == "flood") mode_flood(arg(2));
  if (mode == "patterns") return mode_patterns(std::atoi(arg(2)), std::atoi(arg(3)));
  if (mode == "fork") return mode_fork();
  if (mode == "remote") return mode_remote();
  if (mode == "exit") return mode_exit(std::atoi(arg(2)));
  std::fprintf(stderr, "unknown mode %s\n", mode.c_str());
  return 2;
}
