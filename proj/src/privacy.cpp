#include "sockscope/privacy.hpp"

#include <fcntl.h>
#include <sys/random.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>

#include "sockscope/error.hpp"
#include "sockscope/sha1.hpp"

namespace sockscope {

Salt Salt::generate() {
  Salt s;
  std::size_t got = 0;
  while (got < s.bytes.size()) {
    ssize_t n = ::getrandom(s.bytes.data() + got, s.bytes.size() - got, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      break;
    }
    got += static_cast<std::size_t>(n);
  }
  if (got < s.bytes.size()) {
    int fd = ::open("/dev/urandom", O_RDONLY | O_CLOEXEC);
    if (fd < 0) throw Error("no entropy source for salt");
    while (got < s.bytes.size()) {
      ssize_t n = ::read(fd, s.bytes.data() + got, s.bytes.size() - got);
      if (n <= 0) {
        ::close(fd);
        throw Error("short read from /dev/urandom");
      }
      got += static_cast<std::size_t>(n);
    }
    ::close(fd);
  }
  return s;
}

std::optional<Salt> Salt::from_hex(std::string_view hex) {
  Salt s;
  if (hex.size() != s.bytes.size() * 2) return std::nullopt;
  for (std::size_t i = 0; i < s.bytes.size(); ++i) {
    std::uint8_t b = 0;
    auto [ptr, ec] = std::from_chars(hex.data() + 2 * i, hex.data() + 2 * i + 2, b, 16);
    if (ec != std::errc{} || ptr != hex.data() + 2 * i + 2) return std::nullopt;
    s.bytes[i] = b;
  }
  return s;
}

std::string Salt::hex() const { return to_hex(bytes); }

std::string Salt::fingerprint() const { return to_hex(Sha1::hash(bytes)).substr(0, 8); }

NetAddress anonymize_addr(const NetAddress& addr, const Salt& salt) {
  if (!addr.is_ip()) {
    throw NotApplicableError(std::string("cannot anonymize a ") +
                             std::string(to_string(addr.family)) + " address");
  }
  if (addr.is_loopback() || addr.is_link_local()) return addr;

  const std::size_t width = addr.bit_width() / 8;
  Sha1 h;
  h.update(salt.bytes);
  h.update({addr.bits.data(), width});
  auto digest = h.finish();

  NetAddress out = addr;
  out.bits.fill(0);
  // Low-order bits of the digest are its trailing bytes.
  std::copy(digest.end() - static_cast<std::ptrdiff_t>(width), digest.end(), out.bits.begin());
  return out;
}

TraceEvent scrub_event(TraceEvent e, const Salt& salt) {
  auto scrub = [&](std::optional<NetAddress>& a) {
    if (a && a->is_ip()) a = anonymize_addr(*a, salt);
  };
  std::visit(
      [&](auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, AddrArgs> || std::is_same_v<T, IoArgs>) scrub(a.addr);
      },
      e.args);
  return e;
}

TraceMeta scrub_meta(TraceMeta meta) {
  if (meta.metadata_opt_out) {
    meta.kernel_version.reset();
    meta.network_config_summary.reset();
  }
  return meta;
}

}  // namespace sockscope
