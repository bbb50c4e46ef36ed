#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "sockscope/net_address.hpp"
#include "sockscope/trace_event.hpp"

namespace sockscope {

struct Salt {
  std::array<std::uint8_t, 32> bytes{};

  /// 32 bytes from the kernel CSPRNG.
  static Salt generate();
  /// Exactly 64 hex digits, either case.
  static std::optional<Salt> from_hex(std::string_view hex);

  std::string hex() const;
  /// First 8 hex chars of SHA-1(bytes). Safe to publish; the salt is not.
  std::string fingerprint() const;

  friend bool operator==(const Salt&, const Salt&) = default;
};

/// Loopback and link-local addresses pass through unchanged. Any other IP
/// address has its bits replaced by the low-order 32 (IPv4) or 128 (IPv6)
/// bits of SHA-1(salt || address bytes in network order). Port and class are
/// kept. Throws NotApplicableError for unix / unspec addresses.
NetAddress anonymize_addr(const NetAddress& addr, const Salt& salt);

/// Anonymizes every IP address the event carries. Non-IP addresses are left
/// alone, and no argument family can hold payload bytes to begin with.
TraceEvent scrub_event(TraceEvent e, const Salt& salt);

/// Drops the fields an opted-out user does not share.
TraceMeta scrub_meta(TraceMeta meta);

}  // namespace sockscope
