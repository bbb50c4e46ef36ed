#pragma once

// Symbolic names for the integer arguments that appear in traces. Values are
// Linux ABI numbers; names are what the trace format and reports use. Values
// with no known name round-trip as decimal strings.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sockscope {

namespace ioctl_req {
inline constexpr unsigned long kSIOCGIFNAME = 0x8910;
inline constexpr unsigned long kSIOCGIFCONF = 0x8912;
inline constexpr unsigned long kSIOCGIFFLAGS = 0x8913;
inline constexpr unsigned long kSIOCGIFADDR = 0x8915;
inline constexpr unsigned long kSIOCGIFBRDADDR = 0x8919;
inline constexpr unsigned long kSIOCGIFNETMASK = 0x891b;
inline constexpr unsigned long kSIOCGIFMTU = 0x8921;
inline constexpr unsigned long kSIOCGIFHWADDR = 0x8927;
inline constexpr unsigned long kSIOCGIFINDEX = 0x8933;
inline constexpr unsigned long kSIOCGSTAMP = 0x8906;
inline constexpr unsigned long kSIOCGIWNAME = 0x8B01;
inline constexpr unsigned long kFIONBIO = 0x5421;
inline constexpr unsigned long kFIONREAD = 0x541B;
}  // namespace ioctl_req

std::string domain_name(int domain);
std::optional<int> domain_value(std::string_view name);

// Base socket type without SOCK_NONBLOCK / SOCK_CLOEXEC bits.
std::string socktype_name(int type);
std::optional<int> socktype_value(std::string_view name);

std::string level_name(int level);
std::optional<int> level_value(std::string_view name);

std::string optname_name(int level, int optname);
std::optional<int> optname_value(int level, std::string_view name);

std::string fcntl_cmd_name(int cmd);
std::optional<int> fcntl_cmd_value(std::string_view name);

std::string ioctl_request_name(unsigned long request);
std::optional<unsigned long> ioctl_request_value(std::string_view name);

std::string epoll_op_name(int op);
std::optional<int> epoll_op_value(std::string_view name);

std::string shutdown_how_name(int how);

// Flag words. Unknown residual bits render as one "0x.." element.
std::vector<std::string> msg_flag_names(std::uint32_t flags);
std::optional<std::uint32_t> msg_flags_value(const std::vector<std::string>& names);

std::vector<std::string> sock_flag_names(std::uint32_t flags);
std::optional<std::uint32_t> sock_flags_value(const std::vector<std::string>& names);

// File status flags (O_*) as used with F_SETFL.
std::vector<std::string> status_flag_names(std::uint32_t flags);
std::optional<std::uint32_t> status_flags_value(const std::vector<std::string>& names);

}  // namespace sockscope
