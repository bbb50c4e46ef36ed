#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <unordered_map>

namespace sockscope {

/// Live map from descriptor to socket, as seen by the interposer. Socket ids
/// carry the owning pid in their upper 32 bits so ids from forked children
/// never collide with the parent's.
class FdTable {
public:
  explicit FdTable(std::uint32_t pid = 0) : pid_(pid) {}

  /// A creation call returned `fd`. Any previous mapping is dropped.
  std::uint64_t on_create(int fd);
  /// `newfd` now refers to whatever `oldfd` refers to. If `oldfd` is not a
  /// known socket, `newfd` stops being one.
  void on_alias(int newfd, int oldfd);
  /// `fd` was released. Returns the socket it referred to.
  std::optional<std::uint64_t> on_close(int fd);

  std::optional<std::uint64_t> lookup(int fd) const;
  /// Descriptors currently referring to the socket.
  std::size_t aliases(std::uint64_t socket_id) const;
  std::size_t size() const;

  /// After fork: ids minted from now on use `pid`. Inherited mappings stay.
  void rebase(std::uint32_t pid);

  // Held across fork() so the child never inherits the table mid-update.
  void lock() const { mu_.lock(); }
  void unlock() const { mu_.unlock(); }

private:
  void drop_locked(int fd);

  mutable std::mutex mu_;
  std::uint32_t pid_;
  std::uint32_t next_ = 0;
  std::unordered_map<int, std::uint64_t> fds_;
  std::unordered_map<std::uint64_t, std::size_t> alias_count_;
};

}  // namespace sockscope
