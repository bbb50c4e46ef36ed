#pragma once

#include <string>
#include <vector>

#include "sockscope/privacy.hpp"
#include "sockscope/trace_event.hpp"

namespace sockscope {

/// "lo:inet,inet6;wlan0:inet" sorted by interface name. Names and address
/// families only, no addresses.
std::string network_config_summary();

/// Current UTC time as RFC 3339 with second precision.
std::string utc_now_rfc3339();

/// Monotonic clock in nanoseconds.
std::int64_t monotonic_ns();

/// Meta for a trace starting now. Opt-out leaves kernel and netcfg absent.
TraceMeta describe_host(const std::vector<std::string>& argv, const Salt& salt, bool opt_out);

}  // namespace sockscope
