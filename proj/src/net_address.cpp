#include "sockscope/net_address.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/un.h>

#include <cstring>

namespace sockscope {

std::string_view to_string(AddressFamily family) {
  switch (family) {
    case AddressFamily::ipv4: return "ipv4";
    case AddressFamily::ipv6: return "ipv6";
    case AddressFamily::unix_path: return "unix";
    case AddressFamily::unspec: break;
  }
  return "unspec";
}

std::string_view to_string(AddressClass cls) {
  switch (cls) {
    case AddressClass::loopback: return "loopback";
    case AddressClass::link_local: return "link_local";
    case AddressClass::multicast: return "multicast";
    case AddressClass::global: break;
  }
  return "global";
}

std::optional<AddressFamily> address_family_from_name(std::string_view name) {
  if (name == "ipv4") return AddressFamily::ipv4;
  if (name == "ipv6") return AddressFamily::ipv6;
  if (name == "unix") return AddressFamily::unix_path;
  if (name == "unspec") return AddressFamily::unspec;
  return std::nullopt;
}

std::optional<AddressClass> address_class_from_name(std::string_view name) {
  if (name == "loopback") return AddressClass::loopback;
  if (name == "link_local") return AddressClass::link_local;
  if (name == "multicast") return AddressClass::multicast;
  if (name == "global") return AddressClass::global;
  return std::nullopt;
}

AddressClass classify_ipv4(std::uint32_t a) {
  if ((a >> 24) == 127) return AddressClass::loopback;
  if ((a >> 16) == 0xA9FE) return AddressClass::link_local;
  if ((a >> 28) == 0xE) return AddressClass::multicast;
  return AddressClass::global;
}

AddressClass classify_ipv6(const std::array<std::uint8_t, 16>& b) {
  static constexpr std::array<std::uint8_t, 16> kLoopback = {0, 0, 0, 0, 0, 0, 0, 0,
                                                             0, 0, 0, 0, 0, 0, 0, 1};
  if (b == kLoopback) return AddressClass::loopback;
  // ::ffff:a.b.c.d is classified by its embedded IPv4 address.
  bool mapped = b[10] == 0xff && b[11] == 0xff;
  for (int i = 0; i < 10 && mapped; ++i) mapped = b[i] == 0;
  if (mapped) {
    std::uint32_t v4 = (std::uint32_t{b[12]} << 24) | (std::uint32_t{b[13]} << 16) |
                       (std::uint32_t{b[14]} << 8) | b[15];
    return classify_ipv4(v4);
  }
  if (b[0] == 0xfe && (b[1] & 0xc0) == 0x80) return AddressClass::link_local;
  if (b[0] == 0xff) return AddressClass::multicast;
  return AddressClass::global;
}

NetAddress NetAddress::ipv4(std::uint32_t host_order, std::uint16_t port) {
  NetAddress a;
  a.family = AddressFamily::ipv4;
  a.bits[0] = static_cast<std::uint8_t>(host_order >> 24);
  a.bits[1] = static_cast<std::uint8_t>(host_order >> 16);
  a.bits[2] = static_cast<std::uint8_t>(host_order >> 8);
  a.bits[3] = static_cast<std::uint8_t>(host_order);
  a.port = port;
  a.cls = classify_ipv4(host_order);
  return a;
}

NetAddress NetAddress::ipv6(const std::array<std::uint8_t, 16>& bytes, std::uint16_t port) {
  NetAddress a;
  a.family = AddressFamily::ipv6;
  a.bits = bytes;
  a.port = port;
  a.cls = classify_ipv6(bytes);
  return a;
}

NetAddress NetAddress::unix_path() {
  NetAddress a;
  a.family = AddressFamily::unix_path;
  a.cls = AddressClass::loopback;
  return a;
}

NetAddress NetAddress::unspecified() {
  NetAddress a;
  a.family = AddressFamily::unspec;
  return a;
}

std::optional<NetAddress> NetAddress::from_text(AddressFamily family, std::string_view text,
                                                std::uint16_t port) {
  std::string s(text);
  if (family == AddressFamily::ipv4) {
    in_addr in{};
    if (inet_pton(AF_INET, s.c_str(), &in) != 1) return std::nullopt;
    return ipv4(ntohl(in.s_addr), port);
  }
  if (family == AddressFamily::ipv6) {
    in6_addr in6{};
    if (inet_pton(AF_INET6, s.c_str(), &in6) != 1) return std::nullopt;
    std::array<std::uint8_t, 16> b{};
    std::memcpy(b.data(), in6.s6_addr, 16);
    return ipv6(b, port);
  }
  return std::nullopt;
}

NetAddress NetAddress::from_sockaddr(const sockaddr* sa, std::size_t len) {
  if (sa == nullptr || len < sizeof(sa_family_t)) return unspecified();
  switch (sa->sa_family) {
    case AF_INET: {
      if (len < sizeof(sockaddr_in)) return unspecified();
      sockaddr_in in{};
      std::memcpy(&in, sa, sizeof in);
      return ipv4(ntohl(in.sin_addr.s_addr), ntohs(in.sin_port));
    }
    case AF_INET6: {
      if (len < sizeof(sockaddr_in6)) return unspecified();
      sockaddr_in6 in6{};
      std::memcpy(&in6, sa, sizeof in6);
      std::array<std::uint8_t, 16> b{};
      std::memcpy(b.data(), in6.sin6_addr.s6_addr, 16);
      return ipv6(b, ntohs(in6.sin6_port));
    }
    case AF_UNIX:
      return unix_path();
    default:
      return unspecified();
  }
}

std::size_t NetAddress::bit_width() const {
  switch (family) {
    case AddressFamily::ipv4: return 32;
    case AddressFamily::ipv6: return 128;
    default: return 0;
  }
}

std::string NetAddress::address_text() const {
  char buf[INET6_ADDRSTRLEN] = {};
  if (family == AddressFamily::ipv4) {
    inet_ntop(AF_INET, bits.data(), buf, sizeof buf);
  } else if (family == AddressFamily::ipv6) {
    inet_ntop(AF_INET6, bits.data(), buf, sizeof buf);
  }
  return buf;
}

AddressClass NetAddress::classify_bits() const {
  switch (family) {
    case AddressFamily::ipv4:
      return classify_ipv4((std::uint32_t{bits[0]} << 24) | (std::uint32_t{bits[1]} << 16) |
                           (std::uint32_t{bits[2]} << 8) | bits[3]);
    case AddressFamily::ipv6:
      return classify_ipv6(bits);
    case AddressFamily::unix_path:
      return AddressClass::loopback;
    case AddressFamily::unspec:
      break;
  }
  return AddressClass::global;
}

}  // namespace sockscope
