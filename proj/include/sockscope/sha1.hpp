#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

namespace sockscope {

/// FIPS 180-4 SHA-1. Incremental; `finish()` may be called once.
class Sha1 {
public:
  using Digest = std::array<std::uint8_t, 20>;

  Sha1();
  void update(std::span<const std::uint8_t> data);
  Digest finish();

  static Digest hash(std::span<const std::uint8_t> data);

private:
  void compress(const std::uint8_t* block);

  std::array<std::uint32_t, 5> state_;
  std::array<std::uint8_t, 64> buffer_{};
  std::size_t buffered_ = 0;
  std::uint64_t total_bytes_ = 0;
};

std::string to_hex(std::span<const std::uint8_t> bytes);

}  // namespace sockscope
