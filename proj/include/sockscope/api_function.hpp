#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace sockscope {

// The capture set. Order is the on-disk ordinal and must not change.
enum class ApiFunction : std::uint8_t {
  socket,
  socketpair,
  bind,
  connect,
  listen,
  accept,
  accept4,
  getsockname,
  getpeername,
  shutdown,
  close,
  dup,
  dup2,
  dup3,
  send,
  sendto,
  sendmsg,
  sendmmsg,
  sendfile,
  write,
  writev,
  recv,
  recvfrom,
  recvmsg,
  recvmmsg,
  read,
  readv,
  getsockopt,
  setsockopt,
  fcntl,
  ioctl,
  poll,
  ppoll,
  select,
  pselect,
  epoll_create,
  epoll_create1,
  epoll_ctl,
  epoll_wait,
  epoll_pwait,
};

inline constexpr std::size_t kApiFunctionCount = 40;

inline constexpr std::array<std::string_view, kApiFunctionCount> kApiFunctionNames = {
    "socket",      "socketpair",   "bind",      "connect",     "listen",     "accept",
    "accept4",     "getsockname",  "getpeername", "shutdown",  "close",      "dup",
    "dup2",        "dup3",         "send",      "sendto",      "sendmsg",    "sendmmsg",
    "sendfile",    "write",        "writev",    "recv",        "recvfrom",   "recvmsg",
    "recvmmsg",    "read",         "readv",     "getsockopt",  "setsockopt", "fcntl",
    "ioctl",       "poll",         "ppoll",     "select",      "pselect",    "epoll_create",
    "epoll_create1", "epoll_ctl",  "epoll_wait", "epoll_pwait",
};

static_assert(static_cast<std::size_t>(ApiFunction::epoll_pwait) + 1 == kApiFunctionCount);

constexpr std::string_view to_string(ApiFunction fn) {
  return kApiFunctionNames[static_cast<std::size_t>(fn)];
}

constexpr std::optional<ApiFunction> api_function_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kApiFunctionCount; ++i) {
    if (kApiFunctionNames[i] == name) return static_cast<ApiFunction>(i);
  }
  return std::nullopt;
}

constexpr std::array<ApiFunction, kApiFunctionCount> all_api_functions() {
  std::array<ApiFunction, kApiFunctionCount> out{};
  for (std::size_t i = 0; i < kApiFunctionCount; ++i) out[i] = static_cast<ApiFunction>(i);
  return out;
}

// Argument family carried by each function's events.
enum class ArgKind : std::uint8_t {
  socket,
  addr,
  io,
  sockopt,
  fcntl,
  ioctl,
  poll,
  epoll,
  dup,
  fd,
  sendfile,
};

constexpr ArgKind arg_kind(ApiFunction fn) {
  using F = ApiFunction;
  switch (fn) {
    case F::socket:
    case F::socketpair:
      return ArgKind::socket;
    case F::bind:
    case F::connect:
    case F::accept:
    case F::accept4:
    case F::getsockname:
    case F::getpeername:
      return ArgKind::addr;
    case F::send:
    case F::sendto:
    case F::sendmsg:
    case F::sendmmsg:
    case F::write:
    case F::writev:
    case F::recv:
    case F::recvfrom:
    case F::recvmsg:
    case F::recvmmsg:
    case F::read:
    case F::readv:
      return ArgKind::io;
    case F::getsockopt:
    case F::setsockopt:
      return ArgKind::sockopt;
    case F::fcntl:
      return ArgKind::fcntl;
    case F::ioctl:
      return ArgKind::ioctl;
    case F::poll:
    case F::ppoll:
    case F::select:
    case F::pselect:
      return ArgKind::poll;
    case F::epoll_create:
    case F::epoll_create1:
    case F::epoll_ctl:
    case F::epoll_wait:
    case F::epoll_pwait:
      return ArgKind::epoll;
    case F::dup:
    case F::dup2:
    case F::dup3:
      return ArgKind::dup;
    case F::listen:
    case F::shutdown:
    case F::close:
      return ArgKind::fd;
    case F::sendfile:
      return ArgKind::sendfile;
  }
  return ArgKind::fd;
}

constexpr bool is_send_family(ApiFunction fn) {
  using F = ApiFunction;
  return fn == F::send || fn == F::sendto || fn == F::sendmsg || fn == F::sendmmsg ||
         fn == F::sendfile || fn == F::write || fn == F::writev;
}

constexpr bool is_recv_family(ApiFunction fn) {
  using F = ApiFunction;
  return fn == F::recv || fn == F::recvfrom || fn == F::recvmsg || fn == F::recvmmsg ||
         fn == F::read || fn == F::readv;
}

// Calls that move application data.
constexpr bool is_payload(ApiFunction fn) { return is_send_family(fn) || is_recv_family(fn); }

// Payload calls that take MSG_* flags.
constexpr bool takes_msg_flags(ApiFunction fn) {
  using F = ApiFunction;
  return fn == F::send || fn == F::sendto || fn == F::sendmsg || fn == F::sendmmsg ||
         fn == F::recv || fn == F::recvfrom || fn == F::recvmsg || fn == F::recvmmsg;
}

constexpr bool is_creation(ApiFunction fn) {
  using F = ApiFunction;
  return fn == F::socket || fn == F::socketpair || fn == F::accept || fn == F::accept4;
}

// Simple twin -> the sibling libc may implement it with.
constexpr std::optional<ApiFunction> complex_twin(ApiFunction fn) {
  using F = ApiFunction;
  switch (fn) {
    case F::send: return F::sendto;
    case F::recv: return F::recvfrom;
    case F::accept: return F::accept4;
    case F::epoll_wait: return F::epoll_pwait;
    default: return std::nullopt;
  }
}

}  // namespace sockscope
