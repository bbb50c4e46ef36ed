#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sockscope/error.hpp"

namespace sockscope {

class ArchiveError : public Error {
public:
  using Error::Error;
};

struct ArchiveEntry {
  std::string name;
  std::string data;

  friend bool operator==(const ArchiveEntry&, const ArchiveEntry&) = default;
};

/// ustar archive of regular files, sorted by name, with zeroed times and
/// owners so identical content always yields identical bytes.
std::string make_tar(std::vector<ArchiveEntry> entries);

/// Regular files of a flat archive. Directory entries are skipped and a
/// leading "./" is dropped; nested paths and other entry types are rejected.
std::vector<ArchiveEntry> read_tar(std::string_view tar);

std::string gzip_compress(std::string_view data);

/// Throws ArchiveError when the stream is corrupt or inflates past max_size.
std::string gzip_decompress(std::string_view gz, std::size_t max_size);

/// meta.json and every events.<pid>.jsonl of `dir` as a gzip'd tar.
std::string bundle_trace_dir(const std::filesystem::path& dir);

}  // namespace sockscope
