#include "sockscope/trace_event.hpp"

#include <fcntl.h>

namespace sockscope {

std::optional<int> TraceEvent::subject_fd() const {
  return std::visit(
      [this](const auto& a) -> std::optional<int> {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, AddrArgs> || std::is_same_v<T, IoArgs> ||
                      std::is_same_v<T, SockoptArgs> || std::is_same_v<T, FcntlArgs> ||
                      std::is_same_v<T, IoctlArgs> || std::is_same_v<T, FdArgs>) {
          return a.fd;
        } else if constexpr (std::is_same_v<T, DupArgs>) {
          return a.oldfd;
        } else if constexpr (std::is_same_v<T, SendfileArgs>) {
          return a.out_fd;
        } else if constexpr (std::is_same_v<T, EpollArgs>) {
          if (fn == ApiFunction::epoll_ctl) return a.fd;
          return std::nullopt;
        } else {
          return std::nullopt;
        }
      },
      args);
}

}  // namespace sockscope
