#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

struct sockaddr;

namespace sockscope {

enum class AddressFamily : std::uint8_t { unspec, ipv4, ipv6, unix_path };

enum class AddressClass : std::uint8_t { loopback, link_local, multicast, global };

std::string_view to_string(AddressFamily family);
std::string_view to_string(AddressClass cls);
std::optional<AddressFamily> address_family_from_name(std::string_view name);
std::optional<AddressClass> address_class_from_name(std::string_view name);

/// A socket address as it appears in a trace. IPv4 addresses occupy the first
/// four bytes of `bits`; all bytes are in network order.
///
/// `cls` is derived from the bits when an address is first observed and then
/// carried alongside it, so anonymization (which rewrites the bits) does not
/// lose the loopback / link-local / multicast distinction.
struct NetAddress {
  AddressFamily family = AddressFamily::unspec;
  std::array<std::uint8_t, 16> bits{};
  std::uint16_t port = 0;
  AddressClass cls = AddressClass::global;

  static NetAddress ipv4(std::uint32_t host_order, std::uint16_t port);
  static NetAddress ipv6(const std::array<std::uint8_t, 16>& bytes, std::uint16_t port);
  static NetAddress unix_path();
  static NetAddress unspecified();

  /// Parses dotted-quad or RFC 4291 text. Class is derived from the bits.
  static std::optional<NetAddress> from_text(AddressFamily family, std::string_view text,
                                             std::uint16_t port);

  /// Decodes AF_INET / AF_INET6 / AF_UNIX; anything else is `unspecified()`.
  static NetAddress from_sockaddr(const sockaddr* sa, std::size_t len);

  std::size_t bit_width() const;  // 32, 128 or 0
  std::string address_text() const;

  bool is_ip() const { return family == AddressFamily::ipv4 || family == AddressFamily::ipv6; }
  bool is_loopback() const { return cls == AddressClass::loopback; }
  bool is_link_local() const { return cls == AddressClass::link_local; }
  bool is_multicast() const { return cls == AddressClass::multicast; }

  // The class implied by the raw bits, ignoring `cls`.
  AddressClass classify_bits() const;

  friend bool operator==(const NetAddress&, const NetAddress&) = default;
};

AddressClass classify_ipv4(std::uint32_t host_order);
AddressClass classify_ipv6(const std::array<std::uint8_t, 16>& bytes);

}  // namespace sockscope
