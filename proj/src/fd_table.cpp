#include "sockscope/fd_table.hpp"

namespace sockscope {

void FdTable::drop_locked(int fd) {
  auto it = fds_.find(fd);
  if (it == fds_.end()) return;
  auto c = alias_count_.find(it->second);
  if (c != alias_count_.end() && --c->second == 0) alias_count_.erase(c);
  fds_.erase(it);
}

std::uint64_t FdTable::on_create(int fd) {
  std::lock_guard lock(mu_);
  drop_locked(fd);
  std::uint64_t id = (std::uint64_t{pid_} << 32) | next_++;
  fds_[fd] = id;
  alias_count_[id] = 1;
  return id;
}

void FdTable::on_alias(int newfd, int oldfd) {
  std::lock_guard lock(mu_);
  if (newfd == oldfd) return;
  auto it = fds_.find(oldfd);
  drop_locked(newfd);
  if (it == fds_.end()) return;
  fds_[newfd] = it->second;
  ++alias_count_[it->second];
}

std::optional<std::uint64_t> FdTable::on_close(int fd) {
  std::lock_guard lock(mu_);
  auto it = fds_.find(fd);
  if (it == fds_.end()) return std::nullopt;
  auto id = it->second;
  drop_locked(fd);
  return id;
}

std::optional<std::uint64_t> FdTable::lookup(int fd) const {
  std::lock_guard lock(mu_);
  auto it = fds_.find(fd);
  if (it == fds_.end()) return std::nullopt;
  return it->second;
}

std::size_t FdTable::aliases(std::uint64_t id) const {
  std::lock_guard lock(mu_);
  auto it = alias_count_.find(id);
  return it == alias_count_.end() ? 0 : it->second;
}

std::size_t FdTable::size() const {
  std::lock_guard lock(mu_);
  return fds_.size();
}

void FdTable::rebase(std::uint32_t pid) {
  std::lock_guard lock(mu_);
  pid_ = pid;
  next_ = 0;
}

}  // namespace sockscope
