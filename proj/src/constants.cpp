#include "sockscope/constants.hpp"

#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <netinet/udp.h>
#include <sys/epoll.h>
#include <sys/socket.h>

#include <charconv>
#include <cstdio>
#include <span>

namespace sockscope {
namespace {

struct Named {
  long value;
  std::string_view name;
};

constexpr Named kDomains[] = {
    {AF_UNSPEC, "unspec"}, {AF_UNIX, "unix"},     {AF_INET, "inet"},
    {AF_INET6, "inet6"},   {AF_NETLINK, "netlink"}, {AF_PACKET, "packet"},
};

constexpr Named kSockTypes[] = {
    {SOCK_STREAM, "stream"}, {SOCK_DGRAM, "dgram"},         {SOCK_RAW, "raw"},
    {SOCK_RDM, "rdm"},       {SOCK_SEQPACKET, "seqpacket"},
};

constexpr Named kLevels[] = {
    {SOL_SOCKET, "SOL_SOCKET"},     {IPPROTO_IP, "IPPROTO_IP"},   {IPPROTO_TCP, "IPPROTO_TCP"},
    {IPPROTO_UDP, "IPPROTO_UDP"},   {IPPROTO_IPV6, "IPPROTO_IPV6"},
};

constexpr Named kSolSocket[] = {
    {SO_DEBUG, "SO_DEBUG"},         {SO_REUSEADDR, "SO_REUSEADDR"}, {SO_TYPE, "SO_TYPE"},
    {SO_ERROR, "SO_ERROR"},         {SO_DONTROUTE, "SO_DONTROUTE"}, {SO_BROADCAST, "SO_BROADCAST"},
    {SO_SNDBUF, "SO_SNDBUF"},       {SO_RCVBUF, "SO_RCVBUF"},       {SO_KEEPALIVE, "SO_KEEPALIVE"},
    {SO_OOBINLINE, "SO_OOBINLINE"}, {SO_LINGER, "SO_LINGER"},       {SO_REUSEPORT, "SO_REUSEPORT"},
    {SO_RCVLOWAT, "SO_RCVLOWAT"},   {SO_SNDLOWAT, "SO_SNDLOWAT"},   {SO_RCVTIMEO, "SO_RCVTIMEO"},
    {SO_SNDTIMEO, "SO_SNDTIMEO"},   {SO_BINDTODEVICE, "SO_BINDTODEVICE"},
    {SO_TIMESTAMP, "SO_TIMESTAMP"}, {SO_ACCEPTCONN, "SO_ACCEPTCONN"}, {SO_PEERCRED, "SO_PEERCRED"},
    {SO_PRIORITY, "SO_PRIORITY"},   {SO_DOMAIN, "SO_DOMAIN"},       {SO_PROTOCOL, "SO_PROTOCOL"},
    {SO_MARK, "SO_MARK"},
};

constexpr Named kTcp[] = {
    {TCP_NODELAY, "TCP_NODELAY"},     {TCP_MAXSEG, "TCP_MAXSEG"},
    {TCP_CORK, "TCP_CORK"},           {TCP_KEEPIDLE, "TCP_KEEPIDLE"},
    {TCP_KEEPINTVL, "TCP_KEEPINTVL"}, {TCP_KEEPCNT, "TCP_KEEPCNT"},
    {TCP_SYNCNT, "TCP_SYNCNT"},       {TCP_LINGER2, "TCP_LINGER2"},
    {TCP_DEFER_ACCEPT, "TCP_DEFER_ACCEPT"}, {TCP_WINDOW_CLAMP, "TCP_WINDOW_CLAMP"},
    {TCP_INFO, "TCP_INFO"},           {TCP_QUICKACK, "TCP_QUICKACK"},
    {TCP_CONGESTION, "TCP_CONGESTION"}, {TCP_USER_TIMEOUT, "TCP_USER_TIMEOUT"},
    {TCP_FASTOPEN, "TCP_FASTOPEN"},   {TCP_NOTSENT_LOWAT, "TCP_NOTSENT_LOWAT"},
};

constexpr Named kIp[] = {
    {IP_TOS, "IP_TOS"},
    {IP_TTL, "IP_TTL"},
    {IP_HDRINCL, "IP_HDRINCL"},
    {IP_OPTIONS, "IP_OPTIONS"},
    {IP_RECVERR, "IP_RECVERR"},
    {IP_MTU_DISCOVER, "IP_MTU_DISCOVER"},
    {IP_MULTICAST_IF, "IP_MULTICAST_IF"},
    {IP_MULTICAST_TTL, "IP_MULTICAST_TTL"},
    {IP_MULTICAST_LOOP, "IP_MULTICAST_LOOP"},
    {IP_ADD_MEMBERSHIP, "IP_ADD_MEMBERSHIP"},
    {IP_DROP_MEMBERSHIP, "IP_DROP_MEMBERSHIP"},
    {IP_ADD_SOURCE_MEMBERSHIP, "IP_ADD_SOURCE_MEMBERSHIP"},
    {MCAST_JOIN_GROUP, "MCAST_JOIN_GROUP"},
    {MCAST_JOIN_SOURCE_GROUP, "MCAST_JOIN_SOURCE_GROUP"},
};

constexpr Named kIpv6[] = {
    {IPV6_V6ONLY, "IPV6_V6ONLY"},
    {IPV6_UNICAST_HOPS, "IPV6_UNICAST_HOPS"},
    {IPV6_MULTICAST_IF, "IPV6_MULTICAST_IF"},
    {IPV6_MULTICAST_HOPS, "IPV6_MULTICAST_HOPS"},
    {IPV6_MULTICAST_LOOP, "IPV6_MULTICAST_LOOP"},
    {IPV6_ADD_MEMBERSHIP, "IPV6_JOIN_GROUP"},
    {IPV6_DROP_MEMBERSHIP, "IPV6_LEAVE_GROUP"},
    {IPV6_RECVERR, "IPV6_RECVERR"},
    {IPV6_TCLASS, "IPV6_TCLASS"},
    {MCAST_JOIN_GROUP, "MCAST_JOIN_GROUP"},
    {MCAST_JOIN_SOURCE_GROUP, "MCAST_JOIN_SOURCE_GROUP"},
};

constexpr Named kUdp[] = {
    {UDP_CORK, "UDP_CORK"},
    {UDP_SEGMENT, "UDP_SEGMENT"},
    {UDP_GRO, "UDP_GRO"},
};

constexpr Named kFcntlCmds[] = {
    {F_DUPFD, "F_DUPFD"},   {F_GETFD, "F_GETFD"},   {F_SETFD, "F_SETFD"},
    {F_GETFL, "F_GETFL"},   {F_SETFL, "F_SETFL"},   {F_GETLK, "F_GETLK"},
    {F_SETLK, "F_SETLK"},   {F_SETLKW, "F_SETLKW"}, {F_SETOWN, "F_SETOWN"},
    {F_GETOWN, "F_GETOWN"}, {F_SETSIG, "F_SETSIG"}, {F_GETSIG, "F_GETSIG"},
    {F_DUPFD_CLOEXEC, "F_DUPFD_CLOEXEC"},
};

constexpr Named kIoctls[] = {
    {static_cast<long>(ioctl_req::kSIOCGIFNAME), "SIOCGIFNAME"},
    {static_cast<long>(ioctl_req::kSIOCGIFCONF), "SIOCGIFCONF"},
    {static_cast<long>(ioctl_req::kSIOCGIFFLAGS), "SIOCGIFFLAGS"},
    {static_cast<long>(ioctl_req::kSIOCGIFADDR), "SIOCGIFADDR"},
    {static_cast<long>(ioctl_req::kSIOCGIFBRDADDR), "SIOCGIFBRDADDR"},
    {static_cast<long>(ioctl_req::kSIOCGIFNETMASK), "SIOCGIFNETMASK"},
    {static_cast<long>(ioctl_req::kSIOCGIFMTU), "SIOCGIFMTU"},
    {static_cast<long>(ioctl_req::kSIOCGIFHWADDR), "SIOCGIFHWADDR"},
    {static_cast<long>(ioctl_req::kSIOCGIFINDEX), "SIOCGIFINDEX"},
    {static_cast<long>(ioctl_req::kSIOCGSTAMP), "SIOCGSTAMP"},
    {static_cast<long>(ioctl_req::kSIOCGIWNAME), "SIOCGIWNAME"},
    {static_cast<long>(ioctl_req::kFIONBIO), "FIONBIO"},
    {static_cast<long>(ioctl_req::kFIONREAD), "FIONREAD"},
};

constexpr Named kEpollOps[] = {
    {EPOLL_CTL_ADD, "EPOLL_CTL_ADD"},
    {EPOLL_CTL_DEL, "EPOLL_CTL_DEL"},
    {EPOLL_CTL_MOD, "EPOLL_CTL_MOD"},
};

constexpr Named kShutdownHows[] = {
    {SHUT_RD, "SHUT_RD"},
    {SHUT_WR, "SHUT_WR"},
    {SHUT_RDWR, "SHUT_RDWR"},
};

constexpr Named kMsgFlags[] = {
    {MSG_OOB, "MSG_OOB"},           {MSG_PEEK, "MSG_PEEK"},
    {MSG_DONTROUTE, "MSG_DONTROUTE"}, {MSG_TRUNC, "MSG_TRUNC"},
    {MSG_DONTWAIT, "MSG_DONTWAIT"}, {MSG_EOR, "MSG_EOR"},
    {MSG_WAITALL, "MSG_WAITALL"},   {MSG_CONFIRM, "MSG_CONFIRM"},
    {MSG_ERRQUEUE, "MSG_ERRQUEUE"}, {MSG_NOSIGNAL, "MSG_NOSIGNAL"},
    {MSG_MORE, "MSG_MORE"},         {MSG_WAITFORONE, "MSG_WAITFORONE"},
    {MSG_FASTOPEN, "MSG_FASTOPEN"}, {MSG_CMSG_CLOEXEC, "MSG_CMSG_CLOEXEC"},
};

constexpr Named kSockFlags[] = {
    {SOCK_NONBLOCK, "SOCK_NONBLOCK"},
    {SOCK_CLOEXEC, "SOCK_CLOEXEC"},
};

constexpr Named kStatusFlags[] = {
    {O_APPEND, "O_APPEND"},   {O_ASYNC, "O_ASYNC"},     {O_DIRECT, "O_DIRECT"},
    {O_NOATIME, "O_NOATIME"}, {O_NONBLOCK, "O_NONBLOCK"},
};

std::optional<long> parse_decimal(std::string_view s) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::string name_of(std::span<const Named> table, long value) {
  for (const auto& n : table) {
    if (n.value == value) return std::string(n.name);
  }
  return std::to_string(value);
}

std::optional<long> value_of(std::span<const Named> table, std::string_view name) {
  for (const auto& n : table) {
    if (n.name == name) return n.value;
  }
  return parse_decimal(name);
}

std::span<const Named> optname_table(int level) {
  switch (level) {
    case SOL_SOCKET: return kSolSocket;
    case IPPROTO_TCP: return kTcp;
    case IPPROTO_IP: return kIp;
    case IPPROTO_IPV6: return kIpv6;
    case IPPROTO_UDP: return kUdp;
    default: return {};
  }
}

std::vector<std::string> flag_names(std::span<const Named> table, std::uint32_t flags) {
  std::vector<std::string> out;
  for (const auto& n : table) {
    if (flags & static_cast<std::uint32_t>(n.value)) {
      out.emplace_back(n.name);
      flags &= ~static_cast<std::uint32_t>(n.value);
    }
  }
  if (flags != 0) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%x", flags);
    out.emplace_back(buf);
  }
  return out;
}

std::optional<std::uint32_t> flags_value(std::span<const Named> table,
                                         const std::vector<std::string>& names) {
  std::uint32_t out = 0;
  for (const auto& name : names) {
    bool found = false;
    for (const auto& n : table) {
      if (n.name == name) {
        out |= static_cast<std::uint32_t>(n.value);
        found = true;
        break;
      }
    }
    if (found) continue;
    if (name.size() > 2 && name[0] == '0' && name[1] == 'x') {
      std::uint32_t v = 0;
      auto [ptr, ec] = std::from_chars(name.data() + 2, name.data() + name.size(), v, 16);
      if (ec != std::errc{} || ptr != name.data() + name.size()) return std::nullopt;
      out |= v;
      continue;
    }
    return std::nullopt;
  }
  return out;
}

template <typename T>
std::optional<T> narrow(std::optional<long> v) {
  if (!v) return std::nullopt;
  return static_cast<T>(*v);
}

}  // namespace

std::string domain_name(int domain) { return name_of(kDomains, domain); }
std::optional<int> domain_value(std::string_view name) {
  return narrow<int>(value_of(kDomains, name));
}

std::string socktype_name(int type) { return name_of(kSockTypes, type); }
std::optional<int> socktype_value(std::string_view name) {
  return narrow<int>(value_of(kSockTypes, name));
}

std::string level_name(int level) { return name_of(kLevels, level); }
std::optional<int> level_value(std::string_view name) {
  return narrow<int>(value_of(kLevels, name));
}

std::string optname_name(int level, int optname) {
  return name_of(optname_table(level), optname);
}
std::optional<int> optname_value(int level, std::string_view name) {
  return narrow<int>(value_of(optname_table(level), name));
}

std::string fcntl_cmd_name(int cmd) { return name_of(kFcntlCmds, cmd); }
std::optional<int> fcntl_cmd_value(std::string_view name) {
  return narrow<int>(value_of(kFcntlCmds, name));
}

std::string ioctl_request_name(unsigned long request) {
  return name_of(kIoctls, static_cast<long>(request));
}
std::optional<unsigned long> ioctl_request_value(std::string_view name) {
  return narrow<unsigned long>(value_of(kIoctls, name));
}

std::string epoll_op_name(int op) { return name_of(kEpollOps, op); }
std::optional<int> epoll_op_value(std::string_view name) {
  return narrow<int>(value_of(kEpollOps, name));
}

std::string shutdown_how_name(int how) { return name_of(kShutdownHows, how); }

std::vector<std::string> msg_flag_names(std::uint32_t flags) {
  return flag_names(kMsgFlags, flags);
}
std::optional<std::uint32_t> msg_flags_value(const std::vector<std::string>& names) {
  return flags_value(kMsgFlags, names);
}

std::vector<std::string> sock_flag_names(std::uint32_t flags) {
  return flag_names(kSockFlags, flags);
}
std::optional<std::uint32_t> sock_flags_value(const std::vector<std::string>& names) {
  return flags_value(kSockFlags, names);
}

std::vector<std::string> status_flag_names(std::uint32_t flags) {
  return flag_names(kStatusFlags, flags);
}
std::optional<std::uint32_t> status_flags_value(const std::vector<std::string>& names) {
  return flags_value(kStatusFlags, names);
}

}  // namespace sockscope
